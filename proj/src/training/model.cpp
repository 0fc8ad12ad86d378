#include "semtag/training/model.hpp"

#include <fstream>

#include "semtag/numerics/ops.hpp"

namespace semtag::training {

namespace ops = numerics::ops;
using features::CategoricalFeature;
using features::CategoricalMode;
using features::Source;
using nlohmann::json;

void ModelConfig::validate() const {
  features.validate();
  encoder.validate();
  if (encoder.pooling()) {
    if (features.sources != std::vector<Source>{Source::external}) {
      throw ConfigError("encoder '" + std::string(encoders::to_string(encoder.kind)) +
                        "' pools external vectors; sources must be exactly [external]");
    }
    if (features.categorical_mode == CategoricalMode::encoder) {
      throw ConfigError("pooling encoders take categorical features in head mode only");
    }
  }
  if (encoder.kind == encoders::EncoderKind::pool_bos && !features.external_bos) {
    throw ConfigError("encoder 'pool-bos' needs external_bos: true");
  }
}

json to_json(const features::FeatureConfig& c) {
  json sources = json::array();
  for (auto s : c.sources) sources.push_back(features::to_string(s));
  json cats = json::array();
  for (auto f : c.categorical_features) cats.push_back(features::to_string(f));
  return {{"sources", sources},
          {"word_dim", c.word_dim},
          {"char_emb_dim", c.char_emb_dim},
          {"char_encoder_out", c.char_encoder_out},
          {"external_dim", c.external_dim},
          {"external_bos", c.external_bos},
          {"categorical_mode", features::to_string(c.categorical_mode)},
          {"categorical_features", cats},
          {"categorical_dim", c.categorical_dim},
          {"freeze_word_embeddings", c.freeze_word_embeddings}};
}

json to_json(const encoders::EncoderConfig& c) {
  return {{"kind", encoders::to_string(c.kind)}, {"hidden_per_direction", c.hidden_per_direction}};
}

json to_json(const ModelConfig& c) {
  return {{"features", to_json(c.features)}, {"encoder", to_json(c.encoder)}};
}

features::FeatureConfig feature_config_from_json(const json& j) {
  features::FeatureConfig c;
  try {
    c.sources.clear();
    for (const auto& s : j.at("sources")) c.sources.push_back(features::parse_source(s.get<std::string>()));
    c.word_dim = j.at("word_dim").get<std::size_t>();
    c.char_emb_dim = j.at("char_emb_dim").get<std::size_t>();
    c.char_encoder_out = j.at("char_encoder_out").get<std::size_t>();
    c.external_dim = j.at("external_dim").get<std::size_t>();
    c.external_bos = j.at("external_bos").get<bool>();
    c.categorical_mode = features::parse_categorical_mode(j.at("categorical_mode").get<std::string>());
    for (const auto& f : j.at("categorical_features")) {
      c.categorical_features.push_back(features::parse_categorical_feature(f.get<std::string>()));
    }
    c.categorical_dim = j.at("categorical_dim").get<std::size_t>();
    c.freeze_word_embeddings = j.at("freeze_word_embeddings").get<bool>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("feature config: ") + e.what());
  }
  c.normalize();
  return c;
}

encoders::EncoderConfig encoder_config_from_json(const json& j) {
  encoders::EncoderConfig c;
  try {
    c.kind = encoders::parse_encoder_kind(j.at("kind").get<std::string>());
    c.hidden_per_direction = j.at("hidden_per_direction").get<std::size_t>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("encoder config: ") + e.what());
  }
  c.validate();
  return c;
}

ModelConfig model_config_from_json(const json& j) {
  if (!j.is_object() || !j.contains("features") || !j.contains("encoder")) {
    throw ConfigError("model config: expected {features, encoder}");
  }
  ModelConfig c{feature_config_from_json(j["features"]), encoder_config_from_json(j["encoder"])};
  c.validate();
  return c;
}

ModelVocab ModelVocab::build(const std::vector<SentenceRecord>& records, const ModelConfig& config) {
  ModelVocab v;
  const auto& f = config.features;
  if (f.has(Source::token_word)) v.tokens = corpus::build_vocab(records, corpus::VocabField::tokens);
  if (f.has(Source::lemma_word)) v.lemmas = corpus::build_vocab(records, corpus::VocabField::lemmas);
  if (f.has(Source::token_char) || f.has(Source::lemma_char)) {
    v.chars = corpus::build_vocab(records, corpus::VocabField::chars);
  }
  if (f.categorical_mode != CategoricalMode::none) {
    auto all = features::categorical_vocabularies(records);
    for (auto feature : f.active_categorical()) v.categorical.emplace(feature, all.at(feature));
  }
  return v;
}

json to_json(const ModelVocab& v) {
  json cats = json::object();
  for (const auto& [feature, vocab] : v.categorical) {
    cats[std::string(features::to_string(feature))] = vocab.entries();
  }
  return {{"tokens", v.tokens.entries()},
          {"lemmas", v.lemmas.entries()},
          {"chars", v.chars.entries()},
          {"categorical", cats}};
}

ModelVocab model_vocab_from_json(const json& j) {
  ModelVocab v;
  try {
    v.tokens = Vocabulary(j.at("tokens").get<std::vector<std::string>>());
    v.lemmas = Vocabulary(j.at("lemmas").get<std::vector<std::string>>());
    v.chars = Vocabulary(j.at("chars").get<std::vector<std::string>>());
    for (const auto& [name, entries] : j.at("categorical").items()) {
      v.categorical.emplace(features::parse_categorical_feature(name),
                            Vocabulary(entries.get<std::vector<std::string>>()));
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("vocabulary block: ") + e.what());
  }
  return v;
}

corpus::Label decide(double p) { return p >= 0.5 ? corpus::Label::positive : corpus::Label::negative; }

json to_json(const PredictionRecord& p) {
  json j = {{"id", p.id},
            {"probability_positive", p.probability_positive},
            {"predicted", corpus::to_string(p.predicted)}};
  if (p.attention) j["attention"] = *p.attention;
  return j;
}

PredictionRecord prediction_from_json(const json& j) {
  PredictionRecord p;
  try {
    p.id = j.at("id").get<std::string>();
    p.probability_positive = j.at("probability_positive").get<double>();
    p.predicted = corpus::parse_label(j.at("predicted").get<std::string>());
    if (j.contains("attention") && !j["attention"].is_null()) {
      p.attention = j["attention"].get<std::vector<double>>();
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("prediction: ") + e.what());
  }
  if (!(p.probability_positive >= 0.0 && p.probability_positive <= 1.0)) {
    throw ValidationError("prediction '" + p.id + "': probability outside [0, 1]");
  }
  if (p.predicted != decide(p.probability_positive)) {
    throw ValidationError("prediction '" + p.id + "': label disagrees with probability");
  }
  return p;
}

void write_predictions(std::ostream& out, const std::vector<PredictionRecord>& preds) {
  for (const auto& p : preds) out << to_json(p).dump() << '\n';
}

void save_predictions(const std::filesystem::path& path, const std::vector<PredictionRecord>& preds) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_predictions(out, preds);
  if (!out) throw Error("write failed for " + path.string());
}

std::vector<PredictionRecord> read_predictions(std::istream& in) {
  std::vector<PredictionRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(prediction_from_json(json::parse(line)));
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("malformed JSON: ") + e.what(), lineno);
    } catch (const ValidationError& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  return out;
}

std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  return read_predictions(in);
}

namespace {

template <typename T>
features::EmbeddingTable<T> word_table(const Vocabulary& vocab, std::size_t dim, bool frozen,
                                       const std::optional<std::filesystem::path>& file,
                                       std::uint64_t file_seed, numerics::Rng& rng) {
  if (file) return features::load_word_vectors<T>(*file, vocab, dim, file_seed, frozen);
  return features::random_table<T>(vocab, dim, rng, frozen);
}

}  // namespace

template <typename T>
Classifier<T>::Classifier(ModelConfig config, ModelVocab vocab, std::uint64_t seed,
                          const ModelResources& resources)
    : config_(std::move(config)), vocab_(std::move(vocab)), seed_(seed) {
  config_.features.normalize();
  config_.validate();
  const auto& f = config_.features;
  numerics::Rng rng(numerics::mix_seed(seed, 7));
  const bool frozen = f.freeze_word_embeddings;
  if (f.has(Source::token_word)) {
    tables_.token_words = word_table<T>(vocab_.tokens, f.word_dim, frozen, resources.token_vectors,
                                        numerics::mix_seed(seed, 11), rng);
  }
  if (f.has(Source::token_char)) tables_.token_chars.emplace(vocab_.chars, f.char_emb_dim, f.char_encoder_out, rng);
  if (f.has(Source::lemma_word)) {
    tables_.lemma_words = word_table<T>(vocab_.lemmas, f.word_dim, frozen, resources.lemma_vectors,
                                        numerics::mix_seed(seed, 12), rng);
  }
  if (f.has(Source::lemma_char)) tables_.lemma_chars.emplace(vocab_.chars, f.char_emb_dim, f.char_encoder_out, rng);
  if (f.categorical_mode != CategoricalMode::none) {
    for (auto feature : f.active_categorical()) {
      if (!vocab_.categorical.count(feature)) {
        throw ConfigError("model vocabulary lacks categorical feature '" +
                          std::string(features::to_string(feature)) + "'");
      }
    }
    tables_.categorical.emplace(vocab_.categorical, f.categorical_dim, rng);
  }
  tables_.external = resources.external;
  encoder_ = encoders::Encoder<T>(config_.encoder, f.token_width(), rng);
  std::size_t head_in = encoder_.output_dim();
  if (f.categorical_mode == CategoricalMode::head) head_in += f.categorical_width();
  head_W_ = encoders::xavier<T>(rng, head_in, 2);
  head_b_ = Tensor<T>::zeros({1, 2}, true);
}

template <typename T>
void Classifier<T>::set_external(std::shared_ptr<const features::ExternalVectors> store) {
  tables_.external = std::move(store);
}

template <typename T>
ForwardResult<T> Classifier<T>::forward(Tape<T>& tape, const SentenceRecord& record,
                                        features::CharCache<T>* cache) const {
  auto seq = features::embed_sequence(tape, record, config_.features, tables_, cache);
  auto encoded = encoder_.encode(tape, seq, ops::Mask(seq.rows(), 1));
  auto vec = encoded.vector;
  if (config_.features.categorical_mode == CategoricalMode::head) {
    const std::vector<Tensor<T>> parts{
        vec, features::embed_categorical(tape, record.metadata, *tables_.categorical,
                                         config_.features.active_categorical())};
    vec = ops::concat<T>(tape, parts, 1);
  }
  auto logits = ops::add(tape, ops::matmul(tape, vec, head_W_), head_b_);
  return {logits, std::move(encoded.attention)};
}

template <typename T>
PredictionRecord Classifier<T>::predict(const SentenceRecord& record) const {
  Tape<T> tape;
  auto out = forward(tape, record);
  const auto probs = ops::softmax_values<T>(out.logits.data());
  PredictionRecord p;
  p.id = record.id;
  p.probability_positive = static_cast<double>(probs[1]);
  p.predicted = decide(p.probability_positive);
  if (out.attention) p.attention = std::vector<double>(out.attention->begin(), out.attention->end());
  return p;
}

template <typename T>
ParameterList<T> Classifier<T>::parameters() const {
  ParameterList<T> out;
  tables_.collect(out);
  encoder_.collect(out, "encoder");
  out.push_back({"head.W", head_W_, true});
  out.push_back({"head.b", head_b_, true});
  return out;
}

template class Classifier<float>;
template class Classifier<double>;

}  // namespace semtag::training
