#include "support/fixtures.hpp"

#include <unordered_map>

#include "semtag/numerics/gradcheck.hpp"
#include "semtag/numerics/ops.hpp"
#include "semtag/numerics/rng.hpp"

namespace semtag::fixtures {

using corpus::Label;
using corpus::SentenceRecord;

namespace {

const std::vector<std::string> fillers{
    "amo",   "rosa",  "via",    "bellum", "puer",  "domus", "aqua",   "terra",  "caelum", "mare",
    "rex",   "lex",   "urbs",   "miles",  "deus",  "nox",   "dies",   "tempus", "corpus", "animus",
    "vita",  "mors",  "ignis",  "ventus", "arbor", "flos",  "campus", "mons",   "silva",  "navis",
    "pater", "mater", "frater", "soror",  "homo",  "verbum", "liber", "carmen", "gloria", "virtus"};

const std::vector<corpus::AuthorMeta> authors{{"Catullus", -1, corpus::Form::verse, "poem"},
                                              {"Cicero", -2, corpus::Form::prose, "letter"},
                                              {"Martialis", 1, corpus::Form::verse, "book/poem"}};

SentenceRecord sentence(numerics::Rng& rng, const std::string& id, bool positive) {
  SentenceRecord r;
  r.id = id;
  r.work_id = "work" + std::to_string(rng.below(5));
  const std::size_t len = 4 + rng.below(5);
  for (std::size_t i = 0; i < len; ++i) r.lemmas.push_back(fillers[rng.below(fillers.size())]);
  if (positive) {
    const std::size_t at = rng.below(len);
    r.lemmas[at] = planted_lemma;
    r.label = Label::positive;
    r.gold_spans.push_back({at, corpus::Style::literal});
  }
  for (const auto& l : r.lemmas) r.tokens.push_back(l + "t");
  r.metadata = authors[rng.below(authors.size())];
  return r;
}

}  // namespace

PlantedCorpus planted_corpus(std::uint64_t seed, std::size_t n_train, std::size_t n_dev,
                             std::size_t n_test) {
  numerics::Rng rng(seed);
  PlantedCorpus c;
  auto fill = [&](std::vector<SentenceRecord>& out, const std::string& prefix, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out.push_back(sentence(rng, prefix + std::to_string(i), i % 2 == 0));
  };
  fill(c.train, "train-", n_train);
  fill(c.dev, "dev-", n_dev);
  fill(c.test, "test-", n_test);
  return c;
}

std::shared_ptr<features::ExternalVectors> synthetic_external(const std::vector<SentenceRecord>& records,
                                                              std::size_t dim, bool bos,
                                                              std::uint64_t seed) {
  auto store = std::make_shared<features::ExternalVectors>();
  std::unordered_map<std::string, std::vector<float>> by_lemma;
  auto vec = [&](const std::string& lemma) -> const std::vector<float>& {
    auto it = by_lemma.find(lemma);
    if (it != by_lemma.end()) return it->second;
    numerics::Rng rng(numerics::mix_seed(seed, numerics::hash_name(lemma)));
    std::vector<float> v(dim);
    for (auto& x : v) x = static_cast<float>(rng.uniform(-0.5, 0.5));
    return by_lemma.emplace(lemma, std::move(v)).first->second;
  };
  for (const auto& r : records) {
    features::ExternalVectors::Entry e;
    e.dim = dim;
    e.rows = r.lemmas.size() + (bos ? 1 : 0);
    if (bos) {
      std::vector<float> mean(dim, 0.0f);
      for (const auto& l : r.lemmas) {
        const auto& v = vec(l);
        for (std::size_t d = 0; d < dim; ++d) mean[d] += v[d] / static_cast<float>(r.lemmas.size());
      }
      e.data.insert(e.data.end(), mean.begin(), mean.end());
    }
    for (const auto& l : r.lemmas) {
      const auto& v = vec(l);
      e.data.insert(e.data.end(), v.begin(), v.end());
    }
    store->add(r.id, std::move(e));
  }
  return store;
}

training::ModelConfig small_config(encoders::EncoderKind kind, std::size_t hidden, std::size_t word_dim,
                                   std::size_t external_dim) {
  training::ModelConfig c;
  c.encoder.kind = kind;
  c.encoder.hidden_per_direction = hidden;
  if (c.encoder.pooling()) {
    c.features.sources = {features::Source::external};
    c.features.external_dim = external_dim;
    c.features.external_bos = kind == encoders::EncoderKind::pool_bos;
  } else {
    c.features.sources = {features::Source::lemma_word};
    c.features.word_dim = word_dim;
  }
  return c;
}

BaselineFixture baseline_fixture(std::uint64_t seed, std::size_t n_records) {
  numerics::Rng rng(seed);
  BaselineFixture f;
  for (int i = 0; i < 40; ++i) {
    f.inventory.push_back({"lex" + std::to_string(i), rng.below(5) == 0, rng.below(4) == 0,
                           rng.below(2) == 0});
  }
  for (std::size_t i = 0; i < n_records; ++i) {
    auto r = sentence(rng, "b-" + std::to_string(i), false);
    r.gold_spans.clear();
    const bool positive = rng.below(2) == 0;
    r.label = positive ? Label::positive : Label::negative;
    if (rng.below(10) < (positive ? 8u : 3u)) {
      const std::size_t at = rng.below(r.lemmas.size());
      r.lemmas[at] = f.inventory[rng.below(f.inventory.size())].lemma;
      r.tokens[at] = r.lemmas[at] + "t";
      if (positive) r.gold_spans.push_back({at, corpus::Style::literal});
    }
    if (positive && r.gold_spans.empty()) r.gold_spans.push_back({0, corpus::Style::metaphor});
    f.records.push_back(std::move(r));
  }
  return f;
}

PlantedCorpus metadata_corpus(std::uint64_t seed, std::size_t n_train, std::size_t n_test) {
  numerics::Rng rng(seed);
  PlantedCorpus c;
  auto fill = [&](std::vector<SentenceRecord>& out, const std::string& prefix, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      auto r = sentence(rng, prefix + std::to_string(i), false);
      bool positive = r.metadata.author == "Martialis";
      if (rng.below(10) == 0) positive = !positive;
      r.label = positive ? Label::positive : Label::negative;
      out.push_back(std::move(r));
    }
  };
  fill(c.train, "train-", n_train);
  fill(c.dev, "dev-", n_test);
  fill(c.test, "test-", n_test);
  return c;
}

const std::vector<corpus::AuthorMeta>& fixture_authors() { return authors; }

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "semtag_tests" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

namespace {

template <typename T>
numerics::ScalarFunction<T> total_loss(const training::Classifier<T>& model,
                                       const std::vector<SentenceRecord>& records) {
  return [&model, &records](numerics::Tape<T>& tape) {
    std::vector<numerics::Tensor<T>> losses;
    for (const auto& r : records) {
      losses.push_back(numerics::ops::cross_entropy(tape, model.forward(tape, r).logits,
                                                    r.label == Label::positive ? 1 : 0));
    }
    return numerics::ops::sum(tape, numerics::ops::concat<T>(tape, losses, 1));
  };
}

template <typename T>
std::vector<numerics::Tensor<T>> trainable(const training::Classifier<T>& model) {
  std::vector<numerics::Tensor<T>> out;
  for (const auto& p : model.parameters())
    if (p.trainable) out.push_back(p.tensor);
  return out;
}

// Default init leaves many gradients near 1e-7, below central-difference
// noise; probe at a random point instead.
void randomize(training::Classifier<double>& model, std::uint64_t seed) {
  numerics::Rng rng(numerics::mix_seed(seed, 99));
  for (auto& p : model.parameters()) {
    if (!p.trainable) continue;
    for (auto& x : p.tensor.mutable_data()) x = rng.uniform(-0.5, 0.5);
  }
}

template <typename T>
numerics::Tensor<T> random_matrix(numerics::Rng& rng, std::size_t r, std::size_t c) {
  std::vector<T> v(r * c);
  for (auto& x : v) x = static_cast<T>(rng.uniform(-1.0, 1.0));
  return numerics::Tensor<T>({r, c}, std::move(v), true);
}

template <typename T>
struct PrimitiveInputs {
  std::vector<numerics::Tensor<T>> wrt;  // a, b, c, r

  explicit PrimitiveInputs(std::uint64_t seed) {
    numerics::Rng rng(seed);
    wrt = {random_matrix<T>(rng, 3, 4), random_matrix<T>(rng, 4, 3), random_matrix<T>(rng, 3, 4),
           random_matrix<T>(rng, 1, 4)};
  }

  std::vector<std::pair<std::string, numerics::ScalarFunction<T>>> cases() const {
    namespace ops = numerics::ops;
    using Tp = numerics::Tape<T>;
    const auto a = wrt[0], b = wrt[1], c = wrt[2], r = wrt[3];
    // Unequal fixed weights so the reduction does not hide per-element errors.
    auto weigh = [](Tp& t, const numerics::Tensor<T>& x) {
      auto w = numerics::Tensor<T>::zeros(x.shape());
      for (std::size_t i = 0; i < x.size(); ++i) w.mutable_data()[i] = static_cast<T>(0.3 + 0.1 * double(i % 7));
      return ops::sum(t, ops::mul(t, x, w));
    };
    const std::vector<std::size_t> idx{2, 0, 2, 1};
    return {
        {"matmul", [=](Tp& t) { return weigh(t, ops::matmul(t, a, b)); }},
        {"add", [=](Tp& t) { return weigh(t, ops::add(t, a, c)); }},
        {"add-row", [=](Tp& t) { return weigh(t, ops::add(t, a, r)); }},
        {"sub", [=](Tp& t) { return weigh(t, ops::sub(t, a, c)); }},
        {"mul", [=](Tp& t) { return weigh(t, ops::mul(t, a, c)); }},
        {"scale", [=](Tp& t) { return weigh(t, ops::scale(t, a, static_cast<T>(-1.7))); }},
        {"concat", [=](Tp& t) {
           std::vector<numerics::Tensor<T>> p{a, r};
           return weigh(t, ops::concat<T>(t, p, 0));
         }},
        {"tanh", [=](Tp& t) { return weigh(t, ops::tanh(t, a)); }},
        {"sigmoid", [=](Tp& t) { return weigh(t, ops::sigmoid(t, a)); }},
        {"masked-softmax", [=](Tp& t) { return weigh(t, ops::masked_softmax(t, a, {1, 0, 1, 1})); }},
        {"mean-over-time", [=](Tp& t) { return weigh(t, ops::mean_over_time(t, a, {1, 0, 1})); }},
        {"max-over-time", [=](Tp& t) { return weigh(t, ops::max_over_time(t, a, {1, 0, 1})); }},
        {"embedding-lookup", [=](Tp& t) { return weigh(t, ops::embedding_lookup<T>(t, c, idx)); }},
        {"slice", [=](Tp& t) { return weigh(t, ops::slice(t, a, 1, 3, 1, 4)); }},
        {"transpose", [=](Tp& t) { return weigh(t, ops::transpose(t, b)); }},
        {"cross-entropy", [=](Tp& t) { return ops::cross_entropy(t, ops::slice(t, a, 0, 1, 0, 4), 2); }},
    };
  }
};

}  // namespace

std::vector<PrimitiveReport> primitive_gradient_checks(std::uint64_t seed) {
  PrimitiveInputs<double> d(seed), pure(seed);
  PrimitiveInputs<float> f(seed);
  const auto dc = d.cases(), pc = pure.cases();
  const auto fc = f.cases();
  std::vector<PrimitiveReport> out;
  for (std::size_t i = 0; i < dc.size(); ++i) {
    PrimitiveReport r{dc[i].first};
    r.f64 = numerics::finite_difference_check<double>(pc[i].second, pure.wrt, {1e-5});
    r.f32 = numerics::mixed_precision_check(fc[i].second, f.wrt, dc[i].second, d.wrt);
    out.push_back(r);
  }
  return out;
}

GradientReport model_gradient_check(encoders::EncoderKind kind, std::uint64_t seed) {
  auto corpus = planted_corpus(seed, 2, 0, 0);
  auto cfg = small_config(kind, 4, 6, 8);
  cfg.features.freeze_word_embeddings = false;
  if (!cfg.encoder.pooling()) {
    cfg.features.sources.push_back(features::Source::lemma_char);
    cfg.features.char_emb_dim = 3;
    cfg.features.char_encoder_out = 4;
    cfg.features.categorical_mode = features::CategoricalMode::encoder;
  } else {
    cfg.features.categorical_mode = features::CategoricalMode::head;
  }
  cfg.features.categorical_features = {features::CategoricalFeature::author};
  cfg.features.categorical_dim = 3;
  const auto vocab = training::ModelVocab::build(corpus.train, cfg);
  training::ModelResources res;
  res.external = synthetic_external(corpus.train, 8, kind == encoders::EncoderKind::pool_bos, seed);

  training::Classifier<double> m64(cfg, vocab, seed, res);
  training::Classifier<float> m32(cfg, vocab, seed, res);
  randomize(m64, seed);
  m32.copy_parameters_from(m64);
  auto w64 = trainable(m64);
  auto w32 = trainable(m32);

  GradientReport report;
  report.f32 = numerics::mixed_precision_check(total_loss(m32, corpus.train), w32,
                                               total_loss(m64, corpus.train), w64);
  // Fresh double parameters for the pure 64-bit run.
  training::Classifier<double> fresh(cfg, vocab, seed, res);
  randomize(fresh, seed);
  auto wf = trainable(fresh);
  report.f64 = numerics::finite_difference_check<double>(total_loss(fresh, corpus.train), wf);
  return report;
}

}  // namespace semtag::fixtures
