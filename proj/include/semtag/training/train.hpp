#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "semtag/training/metrics.hpp"
#include "semtag/training/model.hpp"

namespace semtag::training {

enum class Monitor { dev_loss, dev_f1 };

std::string_view to_string(Monitor m);
Monitor parse_monitor(std::string_view s);

struct TrainConfig {
  std::size_t batch_size = 4;
  double learning_rate = 1e-4;
  std::size_t patience = 5;
  std::size_t max_epochs = 50;
  std::uint64_t seed = 0;
  Monitor monitor = Monitor::dev_loss;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0;
  double dev_loss = 0;
  MetricsReport dev;
  bool improved = false;

  bool operator==(const EpochRecord&) const = default;
};

nlohmann::json to_json(const EpochRecord& e);

struct TrainResult {
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  bool stopped_early = false;
};

struct Evaluation {
  MetricsReport metrics;
  double mean_loss = 0;
  std::vector<PredictionRecord> predictions;  // input order
};

template <typename T>
Evaluation evaluate(const Classifier<T>& model, const std::vector<SentenceRecord>& records);

// Mini-batch Adam on mean cross-entropy; after each epoch the dev set is
// scored and the best parameters (by monitor, strict improvement) are kept.
// Stops after `patience` epochs without improvement or at max_epochs and
// leaves the model holding the best epoch's parameters. Throws
// TrainingDivergence on a non-finite batch loss.
template <typename T>
TrainResult train(Classifier<T>& model, const std::vector<SentenceRecord>& train_set,
                  const std::vector<SentenceRecord>& dev_set, const TrainConfig& config,
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

// Every record tagged; probability descending, then id ascending.
template <typename T>
std::vector<PredictionRecord> tag_corpus(const Classifier<T>& model,
                                         const std::vector<SentenceRecord>& records);

void sort_predictions(std::vector<PredictionRecord>& preds);

}  // namespace semtag::training
