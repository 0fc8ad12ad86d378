#include "semtag/training/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "semtag/error.hpp"

namespace semtag::training {

using corpus::Label;
using nlohmann::json;

void Confusion::add(Label gold, Label predicted) {
  if (gold == Label::positive) {
    (predicted == Label::positive ? tp : fn)++;
  } else {
    (predicted == Label::positive ? fp : tn)++;
  }
}

namespace {

double ratio(std::size_t num, std::size_t den, bool& degenerate) {
  degenerate = den == 0;
  return den ? static_cast<double>(num) / static_cast<double>(den) : 0.0;
}

}  // namespace

MetricsReport compute_metrics(const Confusion& c) {
  MetricsReport m;
  m.counts = c;
  m.tpr = ratio(c.tp, c.tp + c.fn, m.tpr_degenerate);
  m.tnr = ratio(c.tn, c.fp + c.tn, m.tnr_degenerate);
  m.precision = ratio(c.tp, c.tp + c.fp, m.precision_degenerate);
  // Harmonic mean of precision and TPR, on counts: 2tp / (2tp + fp + fn).
  m.f1 = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn, m.f1_degenerate);
  return m;
}

MetricsReport compute_metrics(const std::vector<Label>& gold, const std::vector<Label>& predicted) {
  if (gold.size() != predicted.size()) {
    throw ContractError("compute_metrics: " + std::to_string(gold.size()) + " gold labels vs " +
                        std::to_string(predicted.size()) + " predictions");
  }
  Confusion c;
  for (std::size_t i = 0; i < gold.size(); ++i) c.add(gold[i], predicted[i]);
  return compute_metrics(c);
}

json to_json(const MetricsReport& m) {
  json degenerate = json::array();
  if (m.tpr_degenerate) degenerate.push_back("tpr");
  if (m.tnr_degenerate) degenerate.push_back("tnr");
  if (m.precision_degenerate) degenerate.push_back("precision");
  if (m.f1_degenerate) degenerate.push_back("f1");
  return {{"tp", m.counts.tp},   {"fp", m.counts.fp},
          {"fn", m.counts.fn},   {"tn", m.counts.tn},
          {"tpr", m.tpr},        {"tnr", m.tnr},
          {"precision", m.precision}, {"f1", m.f1},
          {"degenerate", degenerate}};
}

MetricsReport metrics_from_json(const json& j) {
  try {
    Confusion c{j.at("tp").get<std::size_t>(), j.at("fp").get<std::size_t>(),
                j.at("fn").get<std::size_t>(), j.at("tn").get<std::size_t>()};
    return compute_metrics(c);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("metrics report: ") + e.what());
  }
}

Summary summarize(std::vector<double> values) {
  if (values.empty()) throw ContractError("summarize: no values");
  std::sort(values.begin(), values.end());
  const auto n = values.size();
  Summary s;
  s.median = n % 2 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
  double sum = 0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(n);
  double sq = 0;
  for (double v : values) sq += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(sq / static_cast<double>(n));
  return s;
}

SeedAggregate aggregate(const std::vector<MetricsReport>& reports) {
  if (reports.empty()) throw ContractError("aggregate: no runs");
  std::vector<double> tpr, tnr, precision, f1;
  for (const auto& r : reports) {
    tpr.push_back(r.tpr);
    tnr.push_back(r.tnr);
    precision.push_back(r.precision);
    f1.push_back(r.f1);
  }
  return {reports.size(), summarize(tpr), summarize(tnr), summarize(precision), summarize(f1)};
}

namespace {

json summary_json(const Summary& s) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f ± %.2f", 100.0 * s.median, 100.0 * s.std);
  return {{"median", s.median}, {"mean", s.mean}, {"std", s.std}, {"display", buf}};
}

}  // namespace

json to_json(const SeedAggregate& a) {
  return {{"runs", a.runs},
          {"TPR", summary_json(a.tpr)},
          {"TNR", summary_json(a.tnr)},
          {"Precision", summary_json(a.precision)},
          {"F1", summary_json(a.f1)}};
}

}  // namespace semtag::training
