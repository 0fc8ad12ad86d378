#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "semtag/corpus/record.hpp"

namespace semtag::corpus {

// Draws up to k sentences per work uniformly without replacement. Works are
// identified by work_id, in order of first appearance. A draw whose token
// sequence equals a known positive is discarded and redrawn until the work
// is exhausted. Sampled records are labeled negative with no gold spans.
std::vector<SentenceRecord> sample_negatives(const std::vector<SentenceRecord>& works,
                                             const std::vector<SentenceRecord>& positives,
                                             std::size_t k, std::uint64_t seed);

struct StatsRow {
  int bucket_start = 0;  // first year of the bucket; negative = BCE
  double word_pct = 0;
  // Share of annotated examples in the bucket, split by whether any gold
  // span is figurative. Both 0 when the bucket has no annotated examples.
  double literal_pct = 0;
  double figurative_pct = 0;
};

// Century c > 0 starts at year 100(c-1); c < 0 starts at 100c.
int century_start_year(int century);

std::vector<StatsRow> corpus_stats(const std::vector<SentenceRecord>& records, int bucket_years);

// Header: bucket,word_pct,literal_pct,figurative_pct
void write_stats_csv(std::ostream& out, const std::vector<StatsRow>& rows);

}  // namespace semtag::corpus
