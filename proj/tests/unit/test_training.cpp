#include <doctest.h>

#include <fstream>
#include <limits>
#include <sstream>

#include "semtag/numerics/rng.hpp"
#include "semtag/training/checkpoint.hpp"
#include "semtag/training/multiseed.hpp"
#include "semtag/training/train.hpp"
#include "support/fixtures.hpp"

using namespace semtag;
using namespace semtag::training;
using corpus::Label;
using encoders::EncoderKind;
using features::CategoricalFeature;
using features::CategoricalMode;

namespace {

const std::vector<EncoderKind> all_kinds{EncoderKind::bilstm,   EncoderKind::gru,
                                         EncoderKind::han,      EncoderKind::pool_mean,
                                         EncoderKind::pool_max, EncoderKind::pool_meanmax,
                                         EncoderKind::pool_bos};

std::vector<SentenceRecord> joined(const fixtures::PlantedCorpus& c) {
  auto all = c.train;
  all.insert(all.end(), c.dev.begin(), c.dev.end());
  all.insert(all.end(), c.test.begin(), c.test.end());
  return all;
}

ModelConfig tiny(EncoderKind kind = EncoderKind::han) {
  auto c = fixtures::small_config(kind, 4, 8, 8);
  c.features.freeze_word_embeddings = false;
  return c;
}

std::string checkpoint_bytes(const Classifier<float>& m) {
  std::ostringstream out;
  write_checkpoint(out, m);
  return out.str();
}

}  // namespace

TEST_CASE("zero head gives probability one half") {
  auto corpus = fixtures::planted_corpus(1, 6, 0, 0);
  auto cfg = tiny();
  Classifier<float> m(cfg, ModelVocab::build(corpus.train, cfg), 1);
  for (auto& p : m.parameters()) {
    if (p.name.rfind("head.", 0) == 0) {
      auto d = p.tensor.mutable_data();
      std::fill(d.begin(), d.end(), 0.0f);
    }
  }
  for (const auto& r : corpus.train) {
    auto p = m.predict(r);
    CHECK(p.probability_positive == 0.5);
    CHECK(p.predicted == Label::positive);
  }
}

TEST_CASE("head input width in head mode") {
  auto corpus = fixtures::planted_corpus(2, 6, 0, 0);
  auto cfg = fixtures::small_config(EncoderKind::han, 128, 16, 0);
  cfg.features.categorical_mode = CategoricalMode::head;
  cfg.features.categorical_features = {CategoricalFeature::author, CategoricalFeature::century,
                                       CategoricalFeature::form, CategoricalFeature::structure};
  Classifier<float> m(cfg, ModelVocab::build(corpus.train, cfg), 1);
  CHECK(m.encoder_output_dim() == 256);
  CHECK(m.head_input_dim() == 256 + 256);

  cfg.features.categorical_mode = CategoricalMode::none;
  Classifier<float> plain(cfg, ModelVocab::build(corpus.train, cfg), 1);
  CHECK(plain.head_input_dim() == 256);
}

TEST_CASE("model config validation") {
  auto cfg = tiny(EncoderKind::pool_mean);
  cfg.features.sources = {features::Source::lemma_word};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = tiny(EncoderKind::pool_bos);
  cfg.features.external_bos = false;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = tiny(EncoderKind::pool_mean);
  cfg.features.categorical_mode = CategoricalMode::encoder;
  cfg.features.categorical_features = {CategoricalFeature::form};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  CHECK(model_config_from_json(to_json(tiny())) == tiny());
}

TEST_CASE("mode none predictions ignore metadata bit for bit") {
  auto corpus = fixtures::planted_corpus(3, 20, 0, 0);
  for (auto kind : {EncoderKind::gru, EncoderKind::pool_max}) {
    auto cfg = tiny(kind);
    ModelResources res;
    res.external = fixtures::synthetic_external(corpus.train, 8, false, 1);
    Classifier<float> m(cfg, ModelVocab::build(corpus.train, cfg), 4, res);
    for (auto r : corpus.train) {
      const auto before = m.predict(r);
      r.metadata = {"Vergilius", -1, corpus::Form::prose, "book/line"};
      CHECK(m.predict(r) == before);
    }
  }
}

TEST_CASE("metrics worked examples") {
  auto m = compute_metrics(Confusion{3, 1, 1, 5});
  CHECK(m.precision == 0.75);
  CHECK(m.tpr == 0.75);
  CHECK(m.tnr == doctest::Approx(5.0 / 6.0).epsilon(1e-12));
  CHECK(m.f1 == 0.75);

  auto all_pos = compute_metrics(Confusion{251, 2491, 0, 0});
  CHECK(all_pos.tpr == 1.0);
  CHECK(all_pos.precision == doctest::Approx(251.0 / 2742.0).epsilon(1e-12));
  CHECK(all_pos.precision == doctest::Approx(0.0916).epsilon(1e-3));
  CHECK(all_pos.tnr == 0.0);

  auto none = compute_metrics(Confusion{0, 0, 10, 20});
  CHECK(none.precision == 0.0);
  CHECK(none.precision_degenerate);
  CHECK_FALSE(none.tpr_degenerate);

  auto j = to_json(none);
  CHECK(j["degenerate"] == nlohmann::json::array({"precision"}));
  CHECK(metrics_from_json(j) == none);
}

TEST_CASE("metric identities on random confusion matrices") {
  numerics::Rng rng(17);
  for (int i = 0; i < 200; ++i) {
    Confusion c{rng.below(50), rng.below(50), rng.below(50), rng.below(50)};
    auto m = compute_metrics(c);
    if (c.tp + c.fp) CHECK(std::abs(m.precision * double(c.tp + c.fp) - double(c.tp)) <= 1e-12 * (c.tp + 1));
    if (c.tp + c.fn) CHECK(std::abs(m.tpr * double(c.tp + c.fn) - double(c.tp)) <= 1e-12 * (c.tp + 1));
    if (c.tn + c.fp) CHECK(std::abs(m.tnr * double(c.tn + c.fp) - double(c.tn)) <= 1e-12 * (c.tn + 1));
    if (m.precision + m.tpr > 0)
      CHECK(std::abs(m.f1 - 2 * m.precision * m.tpr / (m.precision + m.tpr)) <= 1e-12);
    for (double v : {m.tpr, m.tnr, m.precision, m.f1}) CHECK((v >= 0 && v <= 1));
  }
}

TEST_CASE("label-vector metrics") {
  std::vector<Label> gold{Label::positive, Label::negative, Label::positive};
  std::vector<Label> pred{Label::positive, Label::positive, Label::negative};
  CHECK(compute_metrics(gold, pred).counts == Confusion{1, 1, 1, 0});
  CHECK_THROWS_AS(compute_metrics(gold, {Label::positive}), ContractError);
}

TEST_CASE("seed summaries") {
  auto one = summarize({0.7});
  CHECK(one.median == 0.7);
  CHECK(one.mean == 0.7);
  CHECK(one.std == 0.0);
  auto three = summarize({1.0, 0.8, 0.9});
  CHECK(three.median == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(three.mean == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(three.std == doctest::Approx(std::sqrt(0.02 / 3)).epsilon(1e-12));
  CHECK(summarize({1, 2, 3, 10}).median == 2.5);
  CHECK_THROWS_AS(summarize({}), ContractError);
}

TEST_CASE("predictions decide ties as positive and round-trip") {
  CHECK(decide(0.5) == Label::positive);
  CHECK(decide(0.4999) == Label::negative);
  std::vector<PredictionRecord> preds{{"a", 0.9, Label::positive, std::vector<double>{0.25, 0.75}},
                                      {"b", 0.1, Label::negative, std::nullopt}};
  std::stringstream io;
  write_predictions(io, preds);
  CHECK(read_predictions(io) == preds);
  std::stringstream bad("{\"id\":\"x\",\"probability_positive\":0.2,\"predicted\":\"positive\"}\n");
  CHECK_THROWS_AS(read_predictions(bad), ParseError);
}

TEST_CASE("tag_corpus orders by probability then id") {
  std::vector<PredictionRecord> preds{{"b", 0.2, Label::negative, {}},
                                      {"c", 0.9, Label::positive, {}},
                                      {"a", 0.2, Label::negative, {}}};
  sort_predictions(preds);
  CHECK(preds[0].id == "c");
  CHECK(preds[1].id == "a");
  CHECK(preds[2].id == "b");

  auto corpus = fixtures::planted_corpus(4, 12, 0, 0);
  auto cfg = tiny();
  Classifier<float> m(cfg, ModelVocab::build(corpus.train, cfg), 2);
  auto tagged = tag_corpus(m, corpus.train);
  CHECK(tagged.size() == corpus.train.size());
  for (std::size_t i = 1; i < tagged.size(); ++i) {
    CHECK(tagged[i - 1].probability_positive >= tagged[i].probability_positive);
  }
  for (const auto& p : tagged) REQUIRE(p.attention);
}

TEST_CASE("a monitor that never improves stops after patience epochs") {
  auto corpus = fixtures::planted_corpus(5, 12, 6, 0);
  auto cfg = tiny(EncoderKind::gru);
  Classifier<float> m(cfg, ModelVocab::build(corpus.train, cfg), 3);
  TrainConfig tc;
  tc.learning_rate = 0;  // frozen model: dev loss is constant
  auto result = train(m, corpus.train, corpus.dev, tc);
  CHECK(result.history.size() == 6);
  CHECK(result.best_epoch == 1);
  CHECK(result.stopped_early);
  CHECK(result.history[0].improved);
  for (std::size_t i = 1; i < 6; ++i) CHECK_FALSE(result.history[i].improved);
}

TEST_CASE("training restores the best epoch and respects max_epochs") {
  auto corpus = fixtures::planted_corpus(6, 16, 8, 0);
  auto cfg = tiny(EncoderKind::bilstm);
  Classifier<float> m(cfg, ModelVocab::build(corpus.train, cfg), 3);
  TrainConfig tc;
  tc.max_epochs = 4;
  tc.learning_rate = 1e-2;
  tc.monitor = Monitor::dev_f1;
  auto result = train(m, corpus.train, corpus.dev, tc);
  CHECK(result.history.size() <= 4);
  const auto& best = result.history[result.best_epoch - 1];
  for (const auto& e : result.history) CHECK(e.dev.f1 <= best.dev.f1);
  CHECK(evaluate(m, corpus.dev).metrics == best.dev);
}

TEST_CASE("same seed gives identical history and checkpoint bytes") {
  auto corpus = fixtures::planted_corpus(7, 16, 8, 0);
  auto cfg = tiny();
  auto run = [&] {
    Classifier<float> m(cfg, ModelVocab::build(corpus.train, cfg), 9);
    TrainConfig tc;
    tc.max_epochs = 3;
    tc.seed = 9;
    tc.learning_rate = 1e-3;
    auto r = train(m, corpus.train, corpus.dev, tc);
    return std::make_pair(r.history, checkpoint_bytes(m));
  };
  auto a = run();
  auto b = run();
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
}

TEST_CASE("frozen tables stay fixed while trainable ones move") {
  auto corpus = fixtures::planted_corpus(8, 8, 4, 0);
  auto cfg = tiny(EncoderKind::bilstm);
  cfg.features.freeze_word_embeddings = true;
  cfg.features.sources.push_back(features::Source::lemma_char);
  cfg.features.char_emb_dim = 3;
  cfg.features.char_encoder_out = 4;
  Classifier<float> m(cfg, ModelVocab::build(corpus.train, cfg), 3);
  std::map<std::string, std::vector<float>> before;
  for (const auto& p : m.parameters()) before[p.name] = p.tensor.values();
  TrainConfig tc;
  tc.max_epochs = 2;
  tc.learning_rate = 1e-2;
  train(m, corpus.train, corpus.dev, tc);
  for (const auto& p : m.parameters()) {
    CAPTURE(p.name);
    if (p.name == "features.lemma_word") CHECK(p.tensor.values() == before[p.name]);
    if (p.name == "features.lemma_char.embedding") CHECK(p.tensor.values() != before[p.name]);
  }
}

TEST_CASE("non-finite loss raises divergence with coordinates") {
  auto corpus = fixtures::planted_corpus(9, 8, 4, 0);
  auto cfg = tiny(EncoderKind::gru);
  Classifier<float> m(cfg, ModelVocab::build(corpus.train, cfg), 3);
  for (auto& p : m.parameters()) {
    if (p.name == "head.b") p.tensor.mutable_data()[0] = std::numeric_limits<float>::quiet_NaN();
  }
  try {
    train(m, corpus.train, corpus.dev, TrainConfig{});
    FAIL("expected TrainingDivergence");
  } catch (const TrainingDivergence& e) {
    CHECK(e.epoch() == 1);
    CHECK(e.batch() == 1);
  }
}

TEST_CASE("train config validation and JSON") {
  TrainConfig c;
  CHECK(c.batch_size == 4);
  CHECK(c.learning_rate == 1e-4);
  CHECK(c.patience == 5);
  CHECK(c.max_epochs == 50);
  CHECK(train_config_from_json(to_json(c)) == c);
  c.batch_size = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK_THROWS_AS(parse_monitor("dev-acc"), ConfigError);
}

TEST_CASE("checkpoints reload bit-exactly") {
  auto corpus = fixtures::planted_corpus(10, 10, 0, 0);
  for (auto kind : all_kinds) {
    CAPTURE(std::string(encoders::to_string(kind)));
    auto cfg = tiny(kind);
    if (!cfg.encoder.pooling()) {
      cfg.features.categorical_mode = CategoricalMode::encoder;
      cfg.features.categorical_features = {CategoricalFeature::author, CategoricalFeature::form};
      cfg.features.categorical_dim = 2;
    }
    ModelResources res;
    res.external = fixtures::synthetic_external(corpus.train, 8, kind == EncoderKind::pool_bos, 2);
    Classifier<float> m(cfg, ModelVocab::build(corpus.train, cfg), 11, res);
    const auto bytes = checkpoint_bytes(m);
    std::istringstream in(bytes);
    auto loaded = read_checkpoint(in, res);
    CHECK(checkpoint_bytes(loaded.model) == bytes);
    const auto a = m.parameters();
    const auto b = loaded.model.parameters();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].tensor.values() == b[i].tensor.values());
    for (const auto& r : corpus.train) CHECK(m.predict(r) == loaded.model.predict(r));
  }
}

TEST_CASE("corrupt checkpoints are rejected") {
  auto corpus = fixtures::planted_corpus(11, 4, 0, 0);
  auto cfg = tiny();
  Classifier<float> m(cfg, ModelVocab::build(corpus.train, cfg), 1);
  const auto bytes = checkpoint_bytes(m);
  std::istringstream truncated(bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(read_checkpoint(truncated), ValidationError);
  std::istringstream junk("NOTACKPT....");
  CHECK_THROWS_AS(read_checkpoint(junk), ValidationError);
  auto bad = bytes;
  bad[8] = 9;  // version
  std::istringstream wrong_version(bad);
  CHECK_THROWS_AS(read_checkpoint(wrong_version), ValidationError);
}

TEST_CASE("multiseed aggregate equals recomputation from persisted reports") {
  const auto dir = fixtures::scratch_dir("multiseed");
  auto fake = [](std::uint64_t seed) {
    RunReport r;
    r.config = {{"kind", "fake"}};
    r.final = compute_metrics(Confusion{seed % 7 + 1, seed % 3, 5 - seed % 5, 10});
    r.history.push_back({1, 0.5, 0.4, r.final, true});
    r.best_epoch = 1;
    return r;
  };
  auto agg = run_multiseed(fake, 100, 10, 3, dir);
  CHECK(agg.runs == 10);
  std::vector<MetricsReport> finals;
  for (std::uint64_t s = 100; s < 110; ++s) {
    auto r = run_report_from_json(load_json(run_report_path(dir, s)));
    CHECK(r.seed == s);
    CHECK(r.final == fake(s).final);
    finals.push_back(r.final);
  }
  CHECK(aggregate(finals) == agg);
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = 100; s < 110; ++s) seeds.push_back(s);
  CHECK(aggregate_from_reports(dir, seeds) == agg);
  auto written = load_json(dir / "aggregate.json");
  CHECK(written["runs"] == 10);
  CHECK(written["Precision"]["median"].get<double>() == agg.precision.median);

  const auto serial = fixtures::scratch_dir("multiseed-serial");
  CHECK(run_multiseed(fake, 100, 10, 1, serial) == agg);
}

TEST_CASE("multiseed surfaces worker failures") {
  const auto dir = fixtures::scratch_dir("multiseed-fail");
  auto failing = [](std::uint64_t seed) -> RunReport {
    if (seed == 3) throw ConfigError("boom");
    return RunReport{};
  };
  CHECK_THROWS_AS(run_multiseed(failing, 1, 5, 2, dir), ConfigError);
  CHECK_THROWS_AS(run_multiseed(failing, 1, 0, 2, dir), ContractError);
}

TEST_CASE("full-model gradients per encoder kind") {
  for (auto kind : all_kinds) {
    CAPTURE(std::string(encoders::to_string(kind)));
    auto g = fixtures::model_gradient_check(kind, 21);
    CHECK(g.f64 < 1e-5);
    CHECK(g.f32 < 1e-2);
  }
}

TEST_CASE("planted signal is learned by a GRU") {
  auto corpus = fixtures::planted_corpus(12, 80, 20, 20);
  auto cfg = fixtures::small_config(EncoderKind::gru, 16, 16, 0);
  cfg.features.freeze_word_embeddings = false;
  Classifier<float> m(cfg, ModelVocab::build(corpus.train, cfg), 5);
  TrainConfig tc;
  tc.seed = 5;
  tc.learning_rate = 1e-2;
  tc.max_epochs = 15;
  train(m, corpus.train, corpus.dev, tc);
  CHECK(evaluate(m, corpus.test).metrics.f1 >= 0.95);
}
