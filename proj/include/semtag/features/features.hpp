#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "semtag/corpus/record.hpp"
#include "semtag/corpus/vocabulary.hpp"
#include "semtag/encoders/recurrent.hpp"

namespace semtag::features {

using corpus::Vocabulary;
using encoders::ParameterList;
using numerics::Tape;
using numerics::Tensor;

// Declaration order is the concatenation order of embed_sequence.
enum class Source { token_word, token_char, lemma_word, lemma_char, external };
enum class CategoricalMode { none, encoder, head };
// Declaration order is the concatenation order of embed_categorical.
enum class CategoricalFeature { author, century, form, structure };

std::string_view to_string(Source s);
std::string_view to_string(CategoricalMode m);
std::string_view to_string(CategoricalFeature f);
Source parse_source(std::string_view s);
CategoricalMode parse_categorical_mode(std::string_view s);
CategoricalFeature parse_categorical_feature(std::string_view s);

struct FeatureConfig {
  std::vector<Source> sources{Source::lemma_word, Source::lemma_char};
  std::size_t word_dim = 200;
  std::size_t char_emb_dim = 100;
  std::size_t char_encoder_out = 300;
  std::size_t external_dim = 768;
  CategoricalMode categorical_mode = CategoricalMode::none;
  std::vector<CategoricalFeature> categorical_features;
  std::size_t categorical_dim = 64;  // per feature
  bool freeze_word_embeddings = true;
  // External vector files carry a leading [BOS] row.
  bool external_bos = false;

  bool has(Source s) const;
  bool has(CategoricalFeature f) const;
  // Active categorical features in canonical order.
  std::vector<CategoricalFeature> active_categorical() const;
  std::size_t categorical_width() const;
  // Width of one row of embed_sequence.
  std::size_t token_width() const;
  // Sorts and deduplicates sources/features, then checks invariants.
  void normalize();
  void validate() const;

  bool operator==(const FeatureConfig&) const = default;
};

template <typename T>
struct EmbeddingTable {
  Vocabulary vocab;
  Tensor<T> matrix;  // |V|×D, PAD row zero
  bool frozen = true;

  std::size_t dim() const { return matrix.cols(); }
  // T×D rows for the given surfaces (unknown → UNK). PAD receives no gradient.
  Tensor<T> lookup(Tape<T>& tape, const std::vector<std::string>& surfaces) const;
  Tensor<T> row(std::size_t index) const;
};

// Rows uniform in ±0.1 except PAD, which is zero.
template <typename T>
EmbeddingTable<T> random_table(const Vocabulary& vocab, std::size_t dim, numerics::Rng& rng,
                               bool frozen);

// word2vec text format: a "V D" header then "surface v1 … vD" per line.
// Rows for vocabulary entries found in the file are copied; the rest keep a
// seeded uniform ±0.1 initialization. Throws ParseError on arity problems
// and DimensionError when D differs from expected_dim.
template <typename T>
EmbeddingTable<T> load_word_vectors(const std::filesystem::path& path, const Vocabulary& vocab,
                                    std::size_t expected_dim, std::uint64_t seed,
                                    bool frozen = true);

// Character embeddings followed by a BiLSTM; output is the concatenation
// of the final forward and backward states. Always trainable.
template <typename T>
struct CharEncoder {
  EmbeddingTable<T> chars;
  encoders::BiLstm<T> lstm;

  CharEncoder() = default;
  CharEncoder(const Vocabulary& charset, std::size_t char_dim, std::size_t out_dim,
              numerics::Rng& rng);

  std::size_t output_dim() const { return 2 * lstm.hidden(); }
  // 1×output_dim. Empty words are a ContractError.
  Tensor<T> encode(Tape<T>& tape, std::string_view word) const;
  void collect(ParameterList<T>& out, const std::string& prefix) const;
};

// One table per categorical feature. Unseen values map to the UNK row.
template <typename T>
struct CategoricalEmbedder {
  std::map<CategoricalFeature, EmbeddingTable<T>> tables;

  CategoricalEmbedder() = default;
  CategoricalEmbedder(const std::map<CategoricalFeature, Vocabulary>& values, std::size_t dim,
                      numerics::Rng& rng);

  void collect(ParameterList<T>& out, const std::string& prefix) const;
};

std::string categorical_value(const corpus::AuthorMeta& meta, CategoricalFeature feature);

// Distinct values of each feature over the records, for embedder construction.
std::map<CategoricalFeature, Vocabulary> categorical_vocabularies(
    const std::vector<corpus::SentenceRecord>& records);

// 1×(dim·|features|), concatenated in canonical feature order.
template <typename T>
Tensor<T> embed_categorical(Tape<T>& tape, const corpus::AuthorMeta& meta,
                            const CategoricalEmbedder<T>& embedder,
                            const std::vector<CategoricalFeature>& features);

// Precomputed per-token vectors keyed by sentence id, held in single
// precision. File format: JSON lines {"id": …, "vectors": [[…], …]}.
class ExternalVectors {
 public:
  struct Entry {
    std::size_t rows = 0;
    std::size_t dim = 0;
    std::vector<float> data;
  };

  void add(const std::string& id, Entry entry);
  bool contains(const std::string& id) const { return entries_.count(id) != 0; }
  std::size_t size() const { return entries_.size(); }
  const Entry& entry(const std::string& id) const;

 private:
  std::unordered_map<std::string, Entry> entries_;
};

std::shared_ptr<const ExternalVectors> load_external_vector_file(const std::filesystem::path& path);

// Matrix aligned with record.tokens (plus a leading [BOS] row when
// with_bos). LookupError for a missing id, AlignmentError for a row-count
// mismatch, DimensionError for a vector-length mismatch.
template <typename T>
Tensor<T> load_external_vectors(const ExternalVectors& store, const corpus::SentenceRecord& record,
                                std::size_t expected_dim, bool with_bos = false);

template <typename T>
struct FeatureTables {
  std::optional<EmbeddingTable<T>> token_words;
  std::optional<EmbeddingTable<T>> lemma_words;
  std::optional<CharEncoder<T>> token_chars;
  std::optional<CharEncoder<T>> lemma_chars;
  std::optional<CategoricalEmbedder<T>> categorical;
  std::shared_ptr<const ExternalVectors> external;

  void collect(ParameterList<T>& out) const;
};

// Memo of char encodings within one tape, keyed by (kind, surface).
template <typename T>
using CharCache = std::unordered_map<std::string, Tensor<T>>;

// Per-token concatenation [token-word | token-char | lemma-word |
// lemma-char | external | categorical (encoder mode)]. A configured source
// without its table is a ConfigError.
template <typename T>
Tensor<T> embed_sequence(Tape<T>& tape, const corpus::SentenceRecord& record,
                         const FeatureConfig& config, const FeatureTables<T>& tables,
                         CharCache<T>* cache = nullptr);

}  // namespace semtag::features
