#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "semtag/corpus/record.hpp"

namespace semtag::training {

struct Confusion {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;

  void add(corpus::Label gold, corpus::Label predicted);
  std::size_t total() const { return tp + fp + fn + tn; }
  bool operator==(const Confusion&) const = default;
};

// Ratios with a zero denominator are reported as 0 and flagged.
struct MetricsReport {
  Confusion counts;
  double tpr = 0, tnr = 0, precision = 0, f1 = 0;
  bool tpr_degenerate = false;
  bool tnr_degenerate = false;
  bool precision_degenerate = false;
  bool f1_degenerate = false;

  bool operator==(const MetricsReport&) const = default;
};

MetricsReport compute_metrics(const Confusion& c);
MetricsReport compute_metrics(const std::vector<corpus::Label>& gold,
                              const std::vector<corpus::Label>& predicted);

nlohmann::json to_json(const MetricsReport& m);
MetricsReport metrics_from_json(const nlohmann::json& j);

struct Summary {
  double median = 0, mean = 0, std = 0;  // population std
  bool operator==(const Summary&) const = default;
};

Summary summarize(std::vector<double> values);

struct SeedAggregate {
  std::size_t runs = 0;
  Summary tpr, tnr, precision, f1;
  bool operator==(const SeedAggregate&) const = default;
};

SeedAggregate aggregate(const std::vector<MetricsReport>& reports);
// Adds "median ± std" strings in percent, mirroring the published tables.
nlohmann::json to_json(const SeedAggregate& a);

}  // namespace semtag::training
