#include "semtag/corpus/sampling.hpp"

#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <unordered_map>

#include "semtag/error.hpp"
#include "semtag/numerics/rng.hpp"

namespace semtag::corpus {
namespace {

std::string sequence_key(const std::vector<std::string>& tokens) {
  std::string key;
  for (const auto& t : tokens) {
    key += t;
    key += '\x1f';
  }
  return key;
}

}  // namespace

std::vector<SentenceRecord> sample_negatives(const std::vector<SentenceRecord>& works,
                                             const std::vector<SentenceRecord>& positives,
                                             std::size_t k, std::uint64_t seed) {
  if (k == 0) throw ContractError("sample_negatives: k must be at least 1");
  std::set<std::string> known;
  for (const auto& p : positives) known.insert(sequence_key(p.tokens));

  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<const SentenceRecord*>> by_work;
  for (const auto& r : works) {
    auto [it, fresh] = by_work.try_emplace(r.work_id);
    if (fresh) order.push_back(r.work_id);
    it->second.push_back(&r);
  }

  std::vector<SentenceRecord> out;
  for (const auto& work : order) {
    auto candidates = by_work[work];
    numerics::Rng rng(numerics::mix_seed(seed, numerics::hash_name(work)));
    rng.shuffle(candidates);
    std::size_t taken = 0;
    for (const auto* c : candidates) {
      if (taken == k) break;
      if (known.count(sequence_key(c->tokens))) continue;
      SentenceRecord neg = *c;
      neg.label = Label::negative;
      neg.gold_spans.clear();
      out.push_back(std::move(neg));
      ++taken;
    }
  }
  return out;
}

int century_start_year(int century) {
  return century > 0 ? 100 * (century - 1) : 100 * century;
}

std::vector<StatsRow> corpus_stats(const std::vector<SentenceRecord>& records, int bucket_years) {
  if (bucket_years <= 0) throw ContractError("corpus_stats: bucket_years must be positive");
  struct Acc {
    std::size_t words = 0, literal = 0, figurative = 0;
  };
  std::map<int, Acc> buckets;
  std::size_t total_words = 0;
  for (const auto& r : records) {
    const int year = century_start_year(r.metadata.century_of_birth);
    const int start =
        static_cast<int>(std::floor(static_cast<double>(year) / bucket_years)) * bucket_years;
    auto& acc = buckets[start];
    acc.words += r.tokens.size();
    total_words += r.tokens.size();
    if (r.gold_spans.empty()) continue;
    bool figurative = false;
    for (const auto& s : r.gold_spans) figurative = figurative || is_figurative(s.style);
    ++(figurative ? acc.figurative : acc.literal);
  }
  std::vector<StatsRow> rows;
  for (const auto& [start, acc] : buckets) {
    StatsRow row;
    row.bucket_start = start;
    row.word_pct = total_words ? 100.0 * static_cast<double>(acc.words) / total_words : 0.0;
    const auto annotated = acc.literal + acc.figurative;
    if (annotated) {
      row.literal_pct = 100.0 * static_cast<double>(acc.literal) / annotated;
      row.figurative_pct = 100.0 * static_cast<double>(acc.figurative) / annotated;
    }
    rows.push_back(row);
  }
  return rows;
}

void write_stats_csv(std::ostream& out, const std::vector<StatsRow>& rows) {
  out << "bucket,word_pct,literal_pct,figurative_pct\n";
  out << std::fixed << std::setprecision(4);
  for (const auto& r : rows) {
    out << r.bucket_start << ',' << r.word_pct << ',' << r.literal_pct << ',' << r.figurative_pct
        << '\n';
  }
}

}  // namespace semtag::corpus
