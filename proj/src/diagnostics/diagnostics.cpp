#include "semtag/diagnostics/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <unordered_map>

#include "semtag/error.hpp"

namespace semtag::diagnostics {

namespace {

std::unordered_map<std::string, const PredictionRecord*> by_id(const std::vector<PredictionRecord>& preds) {
  std::unordered_map<std::string, const PredictionRecord*> out;
  for (const auto& p : preds) out.emplace(p.id, &p);
  return out;
}

const PredictionRecord& find(const std::unordered_map<std::string, const PredictionRecord*>& index,
                             const std::string& id) {
  auto it = index.find(id);
  if (it == index.end()) throw LookupError("no prediction for record '" + id + "'");
  return *it->second;
}

std::size_t argmax(const std::vector<double>& a) {
  return static_cast<std::size_t>(std::max_element(a.begin(), a.end()) - a.begin());
}

// CSV-quote when needed.
std::string cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

}  // namespace

std::vector<double> relative_rank(const PredictionRecord& prediction,
                                  const std::vector<std::size_t>& gold_indices) {
  if (!prediction.attention) throw ContractError("relative_rank: prediction '" + prediction.id + "' has no attention");
  const auto& a = *prediction.attention;
  const std::size_t T = a.size();
  std::vector<std::size_t> order(T);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a[x] > a[y]; });
  std::vector<std::size_t> rank(T);
  for (std::size_t r = 0; r < T; ++r) rank[order[r]] = r + 1;
  std::vector<double> out;
  for (auto g : gold_indices) {
    if (g >= T) throw ContractError("relative_rank: gold index " + std::to_string(g) + " out of range");
    out.push_back(double(rank[g]) / double(T));
  }
  return out;
}

RankAnalysis analyze_ranks(const std::vector<PredictionRecord>& predictions,
                           const std::vector<corpus::SentenceRecord>& records) {
  const auto index = by_id(predictions);
  RankAnalysis out;
  for (const auto& r : records) {
    if (r.label != corpus::Label::positive || r.gold_spans.empty()) continue;
    const auto& p = find(index, r.id);
    std::vector<std::size_t> gold;
    for (const auto& s : r.gold_spans) gold.push_back(s.token);
    auto ranks = relative_rank(p, gold);
    auto& dst = p.predicted == corpus::Label::positive ? out.tp : out.fn;
    dst.insert(dst.end(), ranks.begin(), ranks.end());
  }
  return out;
}

std::vector<RankBucket> rank_histogram(const RankAnalysis& analysis, std::size_t buckets) {
  if (buckets == 0) throw ContractError("rank_histogram: need at least one bucket");
  std::vector<RankBucket> out(buckets);
  for (std::size_t b = 0; b < buckets; ++b) {
    out[b].lower = double(b) / double(buckets);
    out[b].upper = double(b + 1) / double(buckets);
  }
  // Bucket b holds ranks in (b/n, (b+1)/n]; a small slack keeps r = k/n in bucket k-1.
  auto slot = [&](double r) {
    auto b = static_cast<std::size_t>(std::ceil(r * double(buckets) - 1e-9));
    return std::clamp<std::size_t>(b, 1, buckets) - 1;
  };
  for (double r : analysis.tp) ++out[slot(r)].tp;
  for (double r : analysis.fn) ++out[slot(r)].fn;
  return out;
}

std::map<std::string, PunctuationRow> punctuation_attention_stats(
    const std::vector<PredictionRecord>& predictions, const std::vector<corpus::SentenceRecord>& records,
    const std::vector<std::string>& punctuation) {
  const auto index = by_id(predictions);
  std::map<std::string, PunctuationRow> table;
  for (const auto& r : records) {
    const auto& p = find(index, r.id);
    if (!p.attention) throw ContractError("punctuation_attention_stats: prediction '" + p.id + "' has no attention");
    const auto& a = *p.attention;
    if (a.size() != r.tokens.size()) {
      throw AlignmentError("record '" + r.id + "': attention length differs from token count");
    }
    if (a.empty()) continue;
    const std::size_t top = argmax(a);
    for (std::size_t t = 0; t < r.tokens.size(); ++t) {
      if (std::find(punctuation.begin(), punctuation.end(), r.tokens[t]) == punctuation.end()) continue;
      auto& row = table[r.tokens[t]];
      ++row.occurrences;
      if (t == top) ++row.top;
    }
  }
  return table;
}

std::vector<DisguiseCell> disguise_experiment(const std::vector<DisguiseModel>& models,
                                              const std::vector<corpus::SentenceRecord>& records,
                                              const std::vector<corpus::AuthorMeta>& personas) {
  std::vector<DisguiseCell> out;
  if (records.empty()) return out;
  for (const auto& m : models) {
    if (!m.model) throw ContractError("disguise_experiment: null model for '" + m.feature_set + "'");
    for (const auto& persona : personas) {
      DisguiseCell c{m.feature_set, persona.author, 0, records.size(), 0};
      for (auto r : records) {
        r.metadata = persona;
        if (m.model->predict(r).predicted == corpus::Label::positive) ++c.positives;
      }
      c.percent = 100.0 * double(c.positives) / double(c.total);
      out.push_back(c);
    }
  }
  return out;
}

void write_rank_csv(std::ostream& out, const std::vector<RankBucket>& histogram) {
  out << "lower,upper,tp,fn\n";
  for (const auto& b : histogram) out << b.lower << ',' << b.upper << ',' << b.tp << ',' << b.fn << '\n';
}

void write_punctuation_csv(std::ostream& out, const std::map<std::string, PunctuationRow>& table) {
  out << "mark,occurrences,top,rate\n";
  for (const auto& [mark, row] : table) {
    out << cell(mark) << ',' << row.occurrences << ',' << row.top << ',' << row.rate() << '\n';
  }
}

void write_disguise_csv(std::ostream& out, const std::vector<DisguiseCell>& cells) {
  out << "feature_set,persona,positives,total,percent\n";
  for (const auto& c : cells) {
    out << cell(c.feature_set) << ',' << cell(c.persona) << ',' << c.positives << ',' << c.total << ','
        << c.percent << '\n';
  }
}

}  // namespace semtag::diagnostics
