#include "semtag/training/multiseed.hpp"

#include <atomic>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

namespace semtag::training {

using nlohmann::json;

json to_json(const RunReport& r) {
  json history = json::array();
  for (const auto& e : r.history) history.push_back(to_json(e));
  return {{"config", r.config},
          {"seed", r.seed},
          {"epoch_history", history},
          {"best_epoch", r.best_epoch},
          {"final", to_json(r.final)}};
}

EpochRecord epoch_from_json(const json& j) {
  EpochRecord e;
  try {
    e.epoch = j.at("epoch").get<std::size_t>();
    e.train_loss = j.at("train_loss").get<double>();
    e.dev_loss = j.at("dev_loss").get<double>();
    e.dev = metrics_from_json(j.at("dev"));
    e.improved = j.at("improved").get<bool>();
  } catch (const json::exception& ex) {
    throw ValidationError(std::string("epoch record: ") + ex.what());
  }
  return e;
}

RunReport run_report_from_json(const json& j) {
  RunReport r;
  try {
    r.config = j.at("config");
    r.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& e : j.at("epoch_history")) r.history.push_back(epoch_from_json(e));
    r.best_epoch = j.at("best_epoch").get<std::size_t>();
    r.final = metrics_from_json(j.at("final"));
  } catch (const json::exception& ex) {
    throw ValidationError(std::string("run report: ") + ex.what());
  }
  return r;
}

void save_json(const std::filesystem::path& path, const json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw Error("write failed for " + path.string());
}

json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::filesystem::path run_report_path(const std::filesystem::path& dir, std::uint64_t seed) {
  return dir / ("run-" + std::to_string(seed)) / "report.json";
}

SeedAggregate run_multiseed(const RunFunction& run, std::uint64_t seed0, std::size_t n,
                            std::size_t jobs, const std::filesystem::path& dir) {
  if (n == 0) throw ContractError("run_multiseed: n_seeds must be at least 1");
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first;
  std::mutex mu;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next++;
      if (i >= n || failed) return;
      const std::uint64_t seed = seed0 + i;
      try {
        auto report = run(seed);
        report.seed = seed;
        save_json(run_report_path(dir, seed), to_json(report));
      } catch (...) {
        std::lock_guard lock(mu);
        if (!first) first = std::current_exception();
        failed = true;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (first) std::rethrow_exception(first);

  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < n; ++i) seeds.push_back(seed0 + i);
  auto agg = aggregate_from_reports(dir, seeds);
  json out = to_json(agg);
  out["seeds"] = seeds;
  save_json(dir / "aggregate.json", out);
  return agg;
}

SeedAggregate aggregate_from_reports(const std::filesystem::path& dir,
                                     const std::vector<std::uint64_t>& seeds) {
  std::vector<MetricsReport> finals;
  for (auto seed : seeds) finals.push_back(run_report_from_json(load_json(run_report_path(dir, seed))).final);
  return aggregate(finals);
}

}  // namespace semtag::training
