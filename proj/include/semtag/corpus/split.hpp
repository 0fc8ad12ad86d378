#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "semtag/corpus/record.hpp"

namespace semtag::corpus {

enum class SplitName { full, partial };

std::string_view to_string(SplitName name);
SplitName parse_split_name(std::string_view s);

struct CorpusSplit {
  SplitName name = SplitName::full;
  std::vector<std::string> train;
  std::vector<std::string> dev;
  std::vector<std::string> test;

  bool operator==(const CorpusSplit&) const = default;
};

struct LabelCounts {
  std::size_t train = 0;
  std::size_t dev = 0;
  std::size_t test = 0;
};

struct SplitTargets {
  LabelCounts positive;
  LabelCounts negative;
};

// Published split sizes.
SplitTargets full_split_targets();
SplitTargets partial_split_targets();
// floor(count × ratio) for every cell.
SplitTargets scale(const SplitTargets& targets, double ratio);

// Test and dev are drawn first from a seeded shuffle of each label's
// records, then train from the remainder. The partial split reuses the full
// split's dev and test and downsamples its train. ratio scales every target.
CorpusSplit build_splits(const std::vector<SentenceRecord>& records, SplitName name,
                         std::uint64_t seed, double ratio = 1.0);

nlohmann::json to_json(const CorpusSplit& split);
CorpusSplit split_from_json(const nlohmann::json& j);
void save_split(const std::filesystem::path& path, const CorpusSplit& split);
CorpusSplit load_split(const std::filesystem::path& path);

struct SplitRecords {
  std::vector<SentenceRecord> train;
  std::vector<SentenceRecord> dev;
  std::vector<SentenceRecord> test;
};

// Resolves ids against records; unknown ids are a LookupError.
SplitRecords materialize(const CorpusSplit& split, const std::vector<SentenceRecord>& records);

}  // namespace semtag::corpus
