#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "semtag/corpus/record.hpp"
#include "semtag/training/metrics.hpp"

namespace semtag::baselines {

struct InventoryRow {
  std::string lemma;
  bool stopword = false;
  bool multiword_only = false;  // only ever attested inside multi-word phrases
  bool figurative = false;

  bool operator==(const InventoryRow&) const = default;
};

// CSV with header `lemma,stopword,multiword_only,figurative`. Flags accept
// 0/1/true/false/yes/no. Duplicate lemmas are rejected.
std::vector<InventoryRow> read_inventory(std::istream& in);
std::vector<InventoryRow> load_inventory(const std::filesystem::path& path);

// One lemma per line; blank lines and `#` comments skipped.
std::set<std::string> read_stopwords(std::istream& in);
std::set<std::string> load_stopwords(const std::filesystem::path& path);

// Sets the stopword flag on rows whose lemma is listed.
void mark_stopwords(std::vector<InventoryRow>& rows, const std::set<std::string>& stopwords);

struct Provenance {
  std::size_t inventory = 0;
  std::size_t stopwords_removed = 0;
  std::size_t multiword_removed = 0;
  std::size_t figurative_removed = 0;

  bool operator==(const Provenance&) const = default;
};

struct Lexicon {
  int variant = 1;
  std::set<std::string> lemmas;
  Provenance provenance;

  bool operator==(const Lexicon&) const = default;
};

// 1 = all lemmas; 2 = minus stopwords; 3 = 2 minus multiword-only;
// 4 = 3 minus figurative. Other variants throw ContractError.
Lexicon build_baseline(const std::vector<InventoryRow>& rows, int variant);

corpus::Label baseline_classify(const Lexicon& lexicon, const corpus::SentenceRecord& record);

struct BaselineResult {
  training::MetricsReport metrics;
  std::vector<corpus::Label> predicted;
};

BaselineResult evaluate_baseline(const Lexicon& lexicon, const std::vector<corpus::SentenceRecord>& records);

nlohmann::json to_json(const Lexicon& lexicon);

}  // namespace semtag::baselines
