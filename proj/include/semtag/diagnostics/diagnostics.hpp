#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "semtag/corpus/record.hpp"
#include "semtag/training/model.hpp"

namespace semtag::diagnostics {

using training::PredictionRecord;

// Gold token at 1-based rank r of T (attention descending, earlier index
// first on ties) scores r/T. Throws ContractError without attention or on
// an out-of-range index.
std::vector<double> relative_rank(const PredictionRecord& prediction,
                                  const std::vector<std::size_t>& gold_indices);

struct RankAnalysis {
  std::vector<double> tp;  // one entry per gold token
  std::vector<double> fn;
};

// Positive gold records only; predictions matched by id. Records without a
// prediction throw LookupError.
RankAnalysis analyze_ranks(const std::vector<PredictionRecord>& predictions,
                           const std::vector<corpus::SentenceRecord>& records);

struct RankBucket {
  double lower = 0, upper = 0;  // (lower, upper]
  std::size_t tp = 0, fn = 0;
};
std::vector<RankBucket> rank_histogram(const RankAnalysis& analysis, std::size_t buckets = 10);

inline const std::vector<std::string> default_punctuation{".", "!", "?", ";", ":", ","};

struct PunctuationRow {
  std::size_t occurrences = 0;
  std::size_t top = 0;  // occurrences holding the sentence argmax
  double rate() const { return occurrences ? double(top) / double(occurrences) : 0.0; }
};

// Only marks that occur appear in the table. The argmax is the earliest
// token with the maximum weight.
std::map<std::string, PunctuationRow> punctuation_attention_stats(
    const std::vector<PredictionRecord>& predictions, const std::vector<corpus::SentenceRecord>& records,
    const std::vector<std::string>& punctuation = default_punctuation);

struct DisguiseModel {
  std::string feature_set;  // e.g. "none", "author", "all"
  const training::Classifier<float>* model = nullptr;
};

struct DisguiseCell {
  std::string feature_set;
  std::string persona;  // author name of the presented metadata
  std::size_t positives = 0;
  std::size_t total = 0;
  double percent = 0;
};

// Every record is re-tagged under each persona's metadata.
std::vector<DisguiseCell> disguise_experiment(const std::vector<DisguiseModel>& models,
                                              const std::vector<corpus::SentenceRecord>& records,
                                              const std::vector<corpus::AuthorMeta>& personas);

void write_rank_csv(std::ostream& out, const std::vector<RankBucket>& histogram);
void write_punctuation_csv(std::ostream& out, const std::map<std::string, PunctuationRow>& table);
void write_disguise_csv(std::ostream& out, const std::vector<DisguiseCell>& cells);

}  // namespace semtag::diagnostics
