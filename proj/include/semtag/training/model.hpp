#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "semtag/corpus/record.hpp"
#include "semtag/encoders/encoder.hpp"
#include "semtag/features/features.hpp"

namespace semtag::training {

using corpus::SentenceRecord;
using corpus::Vocabulary;
using encoders::ParameterList;
using numerics::Tape;
using numerics::Tensor;

struct ModelConfig {
  features::FeatureConfig features;
  encoders::EncoderConfig encoder;

  // Cross-checks features against the encoder; throws ConfigError.
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

nlohmann::json to_json(const features::FeatureConfig& c);
nlohmann::json to_json(const encoders::EncoderConfig& c);
nlohmann::json to_json(const ModelConfig& c);
features::FeatureConfig feature_config_from_json(const nlohmann::json& j);
encoders::EncoderConfig encoder_config_from_json(const nlohmann::json& j);
ModelConfig model_config_from_json(const nlohmann::json& j);

// Vocabularies a model is built over. Only the ones its sources need are
// filled; categorical values come from the training records.
struct ModelVocab {
  Vocabulary tokens;
  Vocabulary lemmas;
  Vocabulary chars;
  std::map<features::CategoricalFeature, Vocabulary> categorical;

  static ModelVocab build(const std::vector<SentenceRecord>& records, const ModelConfig& config);
  bool operator==(const ModelVocab&) const = default;
};

nlohmann::json to_json(const ModelVocab& v);
ModelVocab model_vocab_from_json(const nlohmann::json& j);

struct ModelResources {
  std::optional<std::filesystem::path> token_vectors;  // word2vec text
  std::optional<std::filesystem::path> lemma_vectors;
  std::shared_ptr<const features::ExternalVectors> external;
};

struct PredictionRecord {
  std::string id;
  double probability_positive = 0.0;
  corpus::Label predicted = corpus::Label::negative;
  std::optional<std::vector<double>> attention;

  bool operator==(const PredictionRecord&) const = default;
};

corpus::Label decide(double probability_positive);
nlohmann::json to_json(const PredictionRecord& p);
PredictionRecord prediction_from_json(const nlohmann::json& j);
void write_predictions(std::ostream& out, const std::vector<PredictionRecord>& preds);
void save_predictions(const std::filesystem::path& path, const std::vector<PredictionRecord>& preds);
std::vector<PredictionRecord> read_predictions(std::istream& in);
std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path);

template <typename T>
struct ForwardResult {
  Tensor<T> logits;  // 1×2, index 1 = positive
  std::optional<std::vector<T>> attention;
};

// features → encoder → [categorical when head mode] → affine → 2 logits.
template <typename T>
class Classifier {
 public:
  Classifier() = default;
  Classifier(ModelConfig config, ModelVocab vocab, std::uint64_t seed,
             const ModelResources& resources = {});

  const ModelConfig& config() const { return config_; }
  const ModelVocab& vocab() const { return vocab_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t head_input_dim() const { return head_W_.rows(); }
  std::size_t encoder_output_dim() const { return encoder_.output_dim(); }

  // External vectors are not part of the parameters; swap them in for a new corpus.
  void set_external(std::shared_ptr<const features::ExternalVectors> store);

  ForwardResult<T> forward(Tape<T>& tape, const SentenceRecord& record,
                           features::CharCache<T>* cache = nullptr) const;
  PredictionRecord predict(const SentenceRecord& record) const;

  // Stable order: features, encoder, head. Frozen tables are listed with
  // trainable = false.
  ParameterList<T> parameters() const;
  // Copies values by name; names and shapes must match.
  template <typename U>
  void copy_parameters_from(const Classifier<U>& other);

 private:
  ModelConfig config_;
  ModelVocab vocab_;
  std::uint64_t seed_ = 0;
  features::FeatureTables<T> tables_;
  encoders::Encoder<T> encoder_;
  Tensor<T> head_W_;
  Tensor<T> head_b_;
};

template <typename T>
template <typename U>
void Classifier<T>::copy_parameters_from(const Classifier<U>& other) {
  auto mine = parameters();
  auto theirs = other.parameters();
  if (mine.size() != theirs.size()) {
    throw DimensionError("copy_parameters_from: parameter counts differ");
  }
  for (std::size_t i = 0; i < mine.size(); ++i) {
    if (mine[i].name != theirs[i].name || mine[i].tensor.shape() != theirs[i].tensor.shape()) {
      throw DimensionError("copy_parameters_from: mismatch at " + mine[i].name);
    }
    auto dst = mine[i].tensor.mutable_data();
    auto src = theirs[i].tensor.data();
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] = static_cast<T>(src[k]);
  }
}

}  // namespace semtag::training
