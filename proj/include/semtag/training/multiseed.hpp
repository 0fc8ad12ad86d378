#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include <json.hpp>

#include "semtag/training/metrics.hpp"
#include "semtag/training/train.hpp"

namespace semtag::training {

struct RunReport {
  nlohmann::json config = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  MetricsReport final;
};

nlohmann::json to_json(const RunReport& r);
RunReport run_report_from_json(const nlohmann::json& j);
EpochRecord epoch_from_json(const nlohmann::json& j);

void save_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json load_json(const std::filesystem::path& path);

// <dir>/run-<seed>/report.json
std::filesystem::path run_report_path(const std::filesystem::path& dir, std::uint64_t seed);

using RunFunction = std::function<RunReport(std::uint64_t seed)>;

// Runs seeds seed0 … seed0+n-1 on up to `jobs` threads, persisting each
// report, then folds the aggregate from the persisted files and writes
// <dir>/aggregate.json. The first failure is rethrown after all workers stop.
SeedAggregate run_multiseed(const RunFunction& run, std::uint64_t seed0, std::size_t n,
                            std::size_t jobs, const std::filesystem::path& dir);

// Reads the per-run reports back and aggregates their final metrics.
SeedAggregate aggregate_from_reports(const std::filesystem::path& dir,
                                     const std::vector<std::uint64_t>& seeds);

}  // namespace semtag::training
