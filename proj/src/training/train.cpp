#include "semtag/training/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "semtag/numerics/adam.hpp"
#include "semtag/numerics/ops.hpp"

namespace semtag::training {

namespace ops = numerics::ops;
using corpus::Label;
using nlohmann::json;

std::string_view to_string(Monitor m) { return m == Monitor::dev_loss ? "dev-loss" : "dev-f1"; }

Monitor parse_monitor(std::string_view s) {
  if (s == "dev-loss") return Monitor::dev_loss;
  if (s == "dev-f1") return Monitor::dev_f1;
  throw ConfigError("unknown monitor '" + std::string(s) + "'");
}

void TrainConfig::validate() const {
  if (batch_size == 0) throw ConfigError("training: batch_size must be positive");
  if (!(learning_rate >= 0) || !std::isfinite(learning_rate)) {
    throw ConfigError("training: learning_rate must be a non-negative number");
  }
  if (patience == 0) throw ConfigError("training: patience must be positive");
  if (max_epochs == 0) throw ConfigError("training: max_epochs must be positive");
}

json to_json(const TrainConfig& c) {
  return {{"batch_size", c.batch_size}, {"learning_rate", c.learning_rate},
          {"patience", c.patience},     {"max_epochs", c.max_epochs},
          {"seed", c.seed},             {"monitor", to_string(c.monitor)}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  try {
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.patience = j.at("patience").get<std::size_t>();
    c.max_epochs = j.at("max_epochs").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.monitor = parse_monitor(j.at("monitor").get<std::string>());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("training config: ") + e.what());
  }
  c.validate();
  return c;
}

json to_json(const EpochRecord& e) {
  return {{"epoch", e.epoch},
          {"train_loss", e.train_loss},
          {"dev_loss", e.dev_loss},
          {"dev", to_json(e.dev)},
          {"improved", e.improved}};
}

namespace {

std::size_t target(const SentenceRecord& r) { return r.label == Label::positive ? 1 : 0; }

template <typename T>
std::vector<T> snapshot(const ParameterList<T>& params) {
  std::vector<T> out;
  for (const auto& p : params) out.insert(out.end(), p.tensor.data().begin(), p.tensor.data().end());
  return out;
}

template <typename T>
void restore(ParameterList<T>& params, const std::vector<T>& values) {
  std::size_t k = 0;
  for (auto& p : params) {
    auto d = p.tensor.mutable_data();
    std::copy(values.begin() + k, values.begin() + k + d.size(), d.begin());
    k += d.size();
  }
}

}  // namespace

template <typename T>
Evaluation evaluate(const Classifier<T>& model, const std::vector<SentenceRecord>& records) {
  Evaluation ev;
  Confusion c;
  double loss = 0;
  for (const auto& r : records) {
    Tape<T> tape;
    auto out = model.forward(tape, r);
    loss += static_cast<double>(ops::cross_entropy(tape, out.logits, target(r)).item());
    const auto probs = ops::softmax_values<T>(out.logits.data());
    PredictionRecord p;
    p.id = r.id;
    p.probability_positive = static_cast<double>(probs[1]);
    p.predicted = decide(p.probability_positive);
    if (out.attention) p.attention = std::vector<double>(out.attention->begin(), out.attention->end());
    c.add(r.label, p.predicted);
    ev.predictions.push_back(std::move(p));
  }
  ev.metrics = compute_metrics(c);
  ev.mean_loss = records.empty() ? 0.0 : loss / static_cast<double>(records.size());
  return ev;
}

template <typename T>
TrainResult train(Classifier<T>& model, const std::vector<SentenceRecord>& train_set,
                  const std::vector<SentenceRecord>& dev_set, const TrainConfig& config,
                  const std::function<void(const EpochRecord&)>& on_epoch) {
  config.validate();
  if (train_set.empty()) throw ContractError("train: empty training set");
  if (dev_set.empty()) throw ContractError("train: empty dev set");

  auto all = model.parameters();
  ParameterList<T> trainable;
  std::vector<Tensor<T>> tensors;
  for (const auto& p : all) {
    if (!p.trainable) continue;
    trainable.push_back(p);
    tensors.push_back(p.tensor);
  }
  numerics::AdamOptions opts;
  opts.learning_rate = config.learning_rate;
  numerics::AdamState<T> adam(tensors, opts);

  TrainResult result;
  std::vector<T> best = snapshot(trainable);
  double best_score = 0;
  std::size_t since_best = 0;
  std::vector<std::size_t> order(train_set.size());

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    numerics::Rng rng(numerics::mix_seed(config.seed, 1000 + epoch));
    rng.shuffle(order);
    double epoch_loss = 0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      for (auto& t : tensors) t.zero_grad();
      Tape<T> tape;
      features::CharCache<T> cache;
      std::vector<Tensor<T>> losses;
      for (std::size_t i = start; i < end; ++i) {
        const auto& r = train_set[order[i]];
        losses.push_back(ops::cross_entropy(tape, model.forward(tape, r, &cache).logits, target(r)));
      }
      auto total = losses.size() == 1 ? losses[0] : ops::sum(tape, ops::concat<T>(tape, losses, 1));
      auto loss = ops::scale(tape, total, static_cast<T>(1.0 / static_cast<double>(end - start)));
      const double value = static_cast<double>(loss.item());
      if (!std::isfinite(value)) throw TrainingDivergence(epoch, batch_index + 1);
      tape.backward(loss);
      numerics::adam_step<T>(tensors, adam);
      epoch_loss += value * static_cast<double>(end - start);
    }

    auto dev = evaluate(model, dev_set);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = epoch_loss / static_cast<double>(train_set.size());
    rec.dev_loss = dev.mean_loss;
    rec.dev = dev.metrics;
    const double score = config.monitor == Monitor::dev_loss ? -dev.mean_loss : dev.metrics.f1;
    rec.improved = epoch == 1 || score > best_score;
    if (rec.improved) {
      best_score = score;
      best = snapshot(trainable);
      result.best_epoch = epoch;
      since_best = 0;
    } else {
      ++since_best;
    }
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
    if (since_best >= config.patience) {
      result.stopped_early = true;
      break;
    }
  }
  restore(trainable, best);
  return result;
}

void sort_predictions(std::vector<PredictionRecord>& preds) {
  std::sort(preds.begin(), preds.end(), [](const PredictionRecord& a, const PredictionRecord& b) {
    if (a.probability_positive != b.probability_positive) {
      return a.probability_positive > b.probability_positive;
    }
    return a.id < b.id;
  });
}

template <typename T>
std::vector<PredictionRecord> tag_corpus(const Classifier<T>& model,
                                         const std::vector<SentenceRecord>& records) {
  std::vector<PredictionRecord> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(model.predict(r));
  sort_predictions(out);
  return out;
}

template Evaluation evaluate(const Classifier<float>&, const std::vector<SentenceRecord>&);
template Evaluation evaluate(const Classifier<double>&, const std::vector<SentenceRecord>&);
template TrainResult train(Classifier<float>&, const std::vector<SentenceRecord>&,
                           const std::vector<SentenceRecord>&, const TrainConfig&,
                           const std::function<void(const EpochRecord&)>&);
template TrainResult train(Classifier<double>&, const std::vector<SentenceRecord>&,
                           const std::vector<SentenceRecord>&, const TrainConfig&,
                           const std::function<void(const EpochRecord&)>&);
template std::vector<PredictionRecord> tag_corpus(const Classifier<float>&,
                                                  const std::vector<SentenceRecord>&);
template std::vector<PredictionRecord> tag_corpus(const Classifier<double>&,
                                                  const std::vector<SentenceRecord>&);

}  // namespace semtag::training
