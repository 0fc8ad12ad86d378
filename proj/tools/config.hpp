#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "semtag/training/model.hpp"
#include "semtag/training/train.hpp"

namespace semtag::cli {

struct DataPaths {
  // Either corpus + split (ids), or explicit train/dev/test files.
  std::optional<std::filesystem::path> corpus, split;
  std::optional<std::filesystem::path> train, dev, test;
};

struct ResourcePaths {
  std::optional<std::filesystem::path> token_vectors, lemma_vectors, external_vectors;
};

struct ExperimentConfig {
  training::ModelConfig model;
  training::TrainConfig training;
  DataPaths data;
  ResourcePaths resources;
};

// YAML schema:
//   seed: 1
//   data:      {corpus, split} or {train, dev, test}
//   model:     encoder, hidden, sources, word_dim, char_emb_dim,
//              char_encoder_out, external_dim, external_bos,
//              categorical_mode, categorical_features, categorical_dim,
//              freeze_word_embeddings
//   training:  batch_size, learning_rate, patience, max_epochs, monitor
//   resources: token_vectors, lemma_vectors, external_vectors
// Relative paths resolve against the config file's directory. Errors are
// ConfigError prefixed with file:line.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base,
                              const std::string& source_name = "<config>");

nlohmann::json to_json(const ExperimentConfig& c);

}  // namespace semtag::cli
