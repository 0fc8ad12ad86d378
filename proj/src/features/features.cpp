#include "semtag/features/features.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "semtag/numerics/ops.hpp"

namespace semtag::features {

namespace ops = numerics::ops;

std::string_view to_string(Source s) {
  switch (s) {
    case Source::token_word: return "token-word";
    case Source::token_char: return "token-char";
    case Source::lemma_word: return "lemma-word";
    case Source::lemma_char: return "lemma-char";
    case Source::external: return "external";
  }
  return "external";
}

std::string_view to_string(CategoricalMode m) {
  switch (m) {
    case CategoricalMode::none: return "none";
    case CategoricalMode::encoder: return "encoder";
    case CategoricalMode::head: return "head";
  }
  return "none";
}

std::string_view to_string(CategoricalFeature f) {
  switch (f) {
    case CategoricalFeature::author: return "author";
    case CategoricalFeature::century: return "century";
    case CategoricalFeature::form: return "form";
    case CategoricalFeature::structure: return "structure";
  }
  return "author";
}

Source parse_source(std::string_view s) {
  for (auto v : {Source::token_word, Source::token_char, Source::lemma_word, Source::lemma_char,
                 Source::external}) {
    if (to_string(v) == s) return v;
  }
  throw ConfigError("unknown feature source '" + std::string(s) + "'");
}

CategoricalMode parse_categorical_mode(std::string_view s) {
  for (auto v : {CategoricalMode::none, CategoricalMode::encoder, CategoricalMode::head}) {
    if (to_string(v) == s) return v;
  }
  throw ConfigError("unknown categorical mode '" + std::string(s) + "'");
}

CategoricalFeature parse_categorical_feature(std::string_view s) {
  for (auto v : {CategoricalFeature::author, CategoricalFeature::century, CategoricalFeature::form,
                 CategoricalFeature::structure}) {
    if (to_string(v) == s) return v;
  }
  throw ConfigError("unknown categorical feature '" + std::string(s) + "'");
}

bool FeatureConfig::has(Source s) const {
  return std::find(sources.begin(), sources.end(), s) != sources.end();
}

bool FeatureConfig::has(CategoricalFeature f) const {
  return std::find(categorical_features.begin(), categorical_features.end(), f) !=
         categorical_features.end();
}

std::vector<CategoricalFeature> FeatureConfig::active_categorical() const {
  if (categorical_mode == CategoricalMode::none) return {};
  std::vector<CategoricalFeature> out;
  for (auto f : {CategoricalFeature::author, CategoricalFeature::century, CategoricalFeature::form,
                 CategoricalFeature::structure}) {
    if (has(f)) out.push_back(f);
  }
  return out;
}

std::size_t FeatureConfig::categorical_width() const {
  return categorical_dim * active_categorical().size();
}

std::size_t FeatureConfig::token_width() const {
  std::size_t width = 0;
  if (has(Source::token_word)) width += word_dim;
  if (has(Source::token_char)) width += char_encoder_out;
  if (has(Source::lemma_word)) width += word_dim;
  if (has(Source::lemma_char)) width += char_encoder_out;
  if (has(Source::external)) width += external_dim;
  if (categorical_mode == CategoricalMode::encoder) width += categorical_width();
  return width;
}

void FeatureConfig::normalize() {
  std::sort(sources.begin(), sources.end());
  sources.erase(std::unique(sources.begin(), sources.end()), sources.end());
  std::sort(categorical_features.begin(), categorical_features.end());
  categorical_features.erase(std::unique(categorical_features.begin(), categorical_features.end()),
                             categorical_features.end());
  validate();
}

void FeatureConfig::validate() const {
  if (sources.empty()) throw ConfigError("features: at least one source is required");
  if ((has(Source::token_word) || has(Source::lemma_word)) && word_dim == 0) {
    throw ConfigError("features: word_dim must be positive");
  }
  if (has(Source::token_char) || has(Source::lemma_char)) {
    if (char_emb_dim == 0) throw ConfigError("features: char_emb_dim must be positive");
    if (char_encoder_out == 0 || char_encoder_out % 2) {
      throw ConfigError("features: char_encoder_out must be a positive even number");
    }
  }
  if (has(Source::external) && external_dim == 0) {
    throw ConfigError("features: external_dim must be positive");
  }
  if (categorical_mode != CategoricalMode::none) {
    if (categorical_features.empty()) {
      throw ConfigError("features: categorical mode '" + std::string(to_string(categorical_mode)) +
                        "' needs at least one categorical feature");
    }
    if (categorical_dim == 0) throw ConfigError("features: categorical_dim must be positive");
  }
  if (external_bos && (sources.size() != 1 || !has(Source::external))) {
    throw ConfigError("features: a [BOS] row is only supported with the external source alone");
  }
}

template <typename T>
Tensor<T> EmbeddingTable<T>::lookup(Tape<T>& tape, const std::vector<std::string>& surfaces) const {
  std::vector<std::size_t> idx;
  idx.reserve(surfaces.size());
  for (const auto& s : surfaces) idx.push_back(vocab.index(s));
  return ops::embedding_lookup<T>(tape, matrix, idx, Vocabulary::pad);
}

template <typename T>
Tensor<T> EmbeddingTable<T>::row(std::size_t index) const {
  const auto d = dim();
  const auto data = matrix.data();
  return Tensor<T>::row(std::vector<T>(data.begin() + index * d, data.begin() + (index + 1) * d));
}

template <typename T>
EmbeddingTable<T> random_table(const Vocabulary& vocab, std::size_t dim, numerics::Rng& rng,
                               bool frozen) {
  std::vector<T> values(vocab.size() * dim);
  for (auto& v : values) v = static_cast<T>(rng.uniform(-0.1, 0.1));
  std::fill(values.begin(), values.begin() + dim, T{0});
  return {vocab, Tensor<T>({vocab.size(), dim}, std::move(values), !frozen), frozen};
}

template <typename T>
EmbeddingTable<T> load_word_vectors(const std::filesystem::path& path, const Vocabulary& vocab,
                                    std::size_t expected_dim, std::uint64_t seed, bool frozen) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open word vector file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError("missing 'V D' header", 1);
  std::size_t count = 0, dim = 0;
  {
    std::istringstream header(line);
    std::string extra;
    if (!(header >> count >> dim) || (header >> extra)) throw ParseError("malformed 'V D' header", 1);
  }
  if (dim != expected_dim) {
    throw DimensionError("word vectors in " + path.string() + " have dimension " +
                         std::to_string(dim) + ", configured word_dim is " +
                         std::to_string(expected_dim));
  }
  numerics::Rng rng(seed);
  auto table = random_table<T>(vocab, dim, rng, frozen);
  auto values = table.matrix.mutable_data();
  std::size_t lineno = 1, seen = 0;
  std::vector<T> row(dim);
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields(line);
    std::string surface;
    fields >> surface;
    std::size_t n = 0;
    double v;
    while (fields >> v) {
      if (n < dim) row[n] = static_cast<T>(v);
      ++n;
    }
    if (!fields.eof() || n != dim) {
      throw ParseError("expected " + std::to_string(dim) + " values for '" + surface + "'", lineno);
    }
    ++seen;
    if (!vocab.contains(surface)) continue;
    const auto idx = vocab.index(surface);
    if (idx == Vocabulary::pad) continue;
    std::copy(row.begin(), row.end(), values.begin() + idx * dim);
  }
  if (seen != count) {
    throw ParseError("header announces " + std::to_string(count) + " vectors, file has " +
                         std::to_string(seen),
                     lineno);
  }
  return table;
}

template <typename T>
CharEncoder<T>::CharEncoder(const Vocabulary& charset, std::size_t char_dim, std::size_t out_dim,
                            numerics::Rng& rng)
    : chars(random_table<T>(charset, char_dim, rng, false)), lstm(char_dim, out_dim / 2, rng) {}

template <typename T>
Tensor<T> CharEncoder<T>::encode(Tape<T>& tape, std::string_view word) const {
  if (word.empty()) throw ContractError("char encoder: empty word");
  const auto seq = chars.lookup(tape, corpus::utf8_chars(word));
  return lstm.final_states(tape, seq, ops::Mask(seq.rows(), 1));
}

template <typename T>
void CharEncoder<T>::collect(ParameterList<T>& out, const std::string& prefix) const {
  out.push_back({prefix + ".embedding", chars.matrix, true});
  lstm.collect(out, prefix + ".bilstm");
}

std::string categorical_value(const corpus::AuthorMeta& meta, CategoricalFeature feature) {
  switch (feature) {
    case CategoricalFeature::author: return meta.author;
    case CategoricalFeature::century: return std::to_string(meta.century_of_birth);
    case CategoricalFeature::form: return std::string(corpus::to_string(meta.form));
    case CategoricalFeature::structure: return meta.structure;
  }
  return {};
}

std::map<CategoricalFeature, Vocabulary> categorical_vocabularies(
    const std::vector<corpus::SentenceRecord>& records) {
  std::map<CategoricalFeature, Vocabulary> out;
  for (auto f : {CategoricalFeature::author, CategoricalFeature::century, CategoricalFeature::form,
                 CategoricalFeature::structure}) {
    std::set<std::string> values;
    for (const auto& r : records) values.insert(categorical_value(r.metadata, f));
    values.erase(std::string(Vocabulary::pad_surface));
    values.erase(std::string(Vocabulary::unk_surface));
    out.emplace(f, Vocabulary(std::vector<std::string>(values.begin(), values.end())));
  }
  return out;
}

template <typename T>
CategoricalEmbedder<T>::CategoricalEmbedder(const std::map<CategoricalFeature, Vocabulary>& values,
                                            std::size_t dim, numerics::Rng& rng) {
  for (const auto& [feature, vocab] : values) {
    tables.emplace(feature, random_table<T>(vocab, dim, rng, false));
  }
}

template <typename T>
void CategoricalEmbedder<T>::collect(ParameterList<T>& out, const std::string& prefix) const {
  for (const auto& [feature, table] : tables) {
    out.push_back({prefix + "." + std::string(to_string(feature)), table.matrix, true});
  }
}

template <typename T>
Tensor<T> embed_categorical(Tape<T>& tape, const corpus::AuthorMeta& meta,
                            const CategoricalEmbedder<T>& embedder,
                            const std::vector<CategoricalFeature>& features) {
  if (features.empty()) throw ContractError("embed_categorical: no features selected");
  std::vector<Tensor<T>> parts;
  for (auto f : {CategoricalFeature::author, CategoricalFeature::century, CategoricalFeature::form,
                 CategoricalFeature::structure}) {
    if (std::find(features.begin(), features.end(), f) == features.end()) continue;
    auto it = embedder.tables.find(f);
    if (it == embedder.tables.end()) {
      throw ConfigError("embed_categorical: no table for feature '" + std::string(to_string(f)) + "'");
    }
    parts.push_back(it->second.lookup(tape, {categorical_value(meta, f)}));
  }
  return parts.size() == 1 ? parts[0] : ops::concat<T>(tape, parts, 1);
}

void ExternalVectors::add(const std::string& id, Entry entry) {
  if (entry.rows * entry.dim != entry.data.size()) {
    throw DimensionError("external vectors for '" + id + "': ragged rows");
  }
  entries_[id] = std::move(entry);
}

const ExternalVectors::Entry& ExternalVectors::entry(const std::string& id) const {
  auto it = entries_.find(id);
  if (it == entries_.end()) throw LookupError("no external vectors for sentence '" + id + "'");
  return it->second;
}

std::shared_ptr<const ExternalVectors> load_external_vector_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open external vector file " + path.string());
  auto store = std::make_shared<ExternalVectors>();
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("malformed JSON: ") + e.what(), lineno);
    }
    if (!j.is_object() || !j.contains("id") || !j["id"].is_string() || !j.contains("vectors") ||
        !j["vectors"].is_array()) {
      throw ParseError("expected {\"id\": string, \"vectors\": [[...], ...]}", lineno);
    }
    ExternalVectors::Entry entry;
    for (const auto& row : j["vectors"]) {
      if (!row.is_array()) throw ParseError("vector rows must be arrays", lineno);
      if (entry.rows == 0) entry.dim = row.size();
      if (row.size() != entry.dim) {
        throw ParseError("rows of differing length for '" + j["id"].get<std::string>() + "'", lineno);
      }
      for (const auto& v : row) {
        if (!v.is_number()) throw ParseError("non-numeric vector entry", lineno);
        entry.data.push_back(v.get<float>());
      }
      ++entry.rows;
    }
    store->add(j["id"].get<std::string>(), std::move(entry));
  }
  return store;
}

template <typename T>
Tensor<T> load_external_vectors(const ExternalVectors& store, const corpus::SentenceRecord& record,
                                std::size_t expected_dim, bool with_bos) {
  const auto& e = store.entry(record.id);
  const std::size_t want = record.tokens.size() + (with_bos ? 1 : 0);
  if (e.rows != want) {
    throw AlignmentError("external vectors for '" + record.id + "' have " + std::to_string(e.rows) +
                         " rows, expected " + std::to_string(want));
  }
  if (e.dim != expected_dim) {
    throw DimensionError("external vectors for '" + record.id + "' have length " +
                         std::to_string(e.dim) + ", expected " + std::to_string(expected_dim));
  }
  return Tensor<T>({e.rows, e.dim}, std::vector<T>(e.data.begin(), e.data.end()));
}

template <typename T>
void FeatureTables<T>::collect(ParameterList<T>& out) const {
  if (token_words) out.push_back({"features.token_word", token_words->matrix, !token_words->frozen});
  if (token_chars) token_chars->collect(out, "features.token_char");
  if (lemma_words) out.push_back({"features.lemma_word", lemma_words->matrix, !lemma_words->frozen});
  if (lemma_chars) lemma_chars->collect(out, "features.lemma_char");
  if (categorical) categorical->collect(out, "features.categorical");
}

namespace {

template <typename T>
Tensor<T> encode_words(Tape<T>& tape, const CharEncoder<T>& encoder,
                       const std::vector<std::string>& words, const char* kind, CharCache<T>* cache) {
  std::vector<Tensor<T>> rows;
  rows.reserve(words.size());
  for (const auto& w : words) {
    if (!cache) {
      rows.push_back(encoder.encode(tape, w));
      continue;
    }
    const std::string key = std::string(kind) + '\x1f' + w;
    auto it = cache->find(key);
    if (it == cache->end()) it = cache->emplace(key, encoder.encode(tape, w)).first;
    rows.push_back(it->second);
  }
  return ops::concat<T>(tape, rows, 0);
}

[[noreturn]] void missing(Source s) {
  throw ConfigError("features: source '" + std::string(to_string(s)) + "' configured without its table");
}

}  // namespace

template <typename T>
Tensor<T> embed_sequence(Tape<T>& tape, const corpus::SentenceRecord& record,
                         const FeatureConfig& config, const FeatureTables<T>& tables,
                         CharCache<T>* cache) {
  std::vector<Tensor<T>> parts;
  if (config.has(Source::token_word)) {
    if (!tables.token_words) missing(Source::token_word);
    parts.push_back(tables.token_words->lookup(tape, record.tokens));
  }
  if (config.has(Source::token_char)) {
    if (!tables.token_chars) missing(Source::token_char);
    parts.push_back(encode_words(tape, *tables.token_chars, record.tokens, "t", cache));
  }
  if (config.has(Source::lemma_word)) {
    if (!tables.lemma_words) missing(Source::lemma_word);
    parts.push_back(tables.lemma_words->lookup(tape, record.lemmas));
  }
  if (config.has(Source::lemma_char)) {
    if (!tables.lemma_chars) missing(Source::lemma_char);
    parts.push_back(encode_words(tape, *tables.lemma_chars, record.lemmas, "l", cache));
  }
  if (config.has(Source::external)) {
    if (!tables.external) missing(Source::external);
    parts.push_back(load_external_vectors<T>(*tables.external, record, config.external_dim,
                                             config.external_bos));
  }
  if (config.categorical_mode == CategoricalMode::encoder) {
    if (!tables.categorical) {
      throw ConfigError("features: categorical encoder mode configured without embeddings");
    }
    const auto cat = embed_categorical(tape, record.metadata, *tables.categorical,
                                       config.active_categorical());
    // Repeat the sentence-level vector on every row: ones(T×1)·cat.
    const auto ones = Tensor<T>::filled({parts.front().rows(), 1}, T{1});
    parts.push_back(ops::matmul(tape, ones, cat));
  }
  return parts.size() == 1 ? parts[0] : ops::concat<T>(tape, parts, 1);
}

#define SEMTAG_INSTANTIATE_FEATURES(T)                                                         \
  template struct EmbeddingTable<T>;                                                           \
  template EmbeddingTable<T> random_table(const Vocabulary&, std::size_t, numerics::Rng&, bool); \
  template EmbeddingTable<T> load_word_vectors(const std::filesystem::path&, const Vocabulary&, \
                                               std::size_t, std::uint64_t, bool);              \
  template struct CharEncoder<T>;                                                              \
  template struct CategoricalEmbedder<T>;                                                      \
  template Tensor<T> embed_categorical(Tape<T>&, const corpus::AuthorMeta&,                    \
                                       const CategoricalEmbedder<T>&,                          \
                                       const std::vector<CategoricalFeature>&);                \
  template Tensor<T> load_external_vectors(const ExternalVectors&, const corpus::SentenceRecord&, \
                                           std::size_t, bool);                                 \
  template struct FeatureTables<T>;                                                            \
  template Tensor<T> embed_sequence(Tape<T>&, const corpus::SentenceRecord&, const FeatureConfig&, \
                                    const FeatureTables<T>&, CharCache<T>*);

SEMTAG_INSTANTIATE_FEATURES(float)
SEMTAG_INSTANTIATE_FEATURES(double)

#undef SEMTAG_INSTANTIATE_FEATURES

}  // namespace semtag::features
