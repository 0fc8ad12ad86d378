#include "semtag/baselines/baselines.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <sstream>

#include "semtag/error.hpp"

namespace semtag::baselines {

namespace {

std::string trim(std::string s) {
  auto blank = [](unsigned char c) { return std::isspace(c) != 0; };
  s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), blank));
  s.erase(std::find_if_not(s.rbegin(), s.rend(), blank).base(), s.end());
  return s;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_flag(std::string s, std::size_t line) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "1" || s == "true" || s == "yes") return true;
  if (s == "0" || s == "false" || s == "no") return false;
  throw ParseError("bad flag value '" + s + "'", line);
}

std::ifstream open(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  return in;
}

}  // namespace

std::vector<InventoryRow> read_inventory(std::istream& in) {
  std::string line;
  std::size_t n = 0;
  std::vector<InventoryRow> rows;
  std::set<std::string> seen;
  bool header = false;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    if (!header) {
      if (cells != std::vector<std::string>{"lemma", "stopword", "multiword_only", "figurative"}) {
        throw ParseError("expected header lemma,stopword,multiword_only,figurative", n);
      }
      header = true;
      continue;
    }
    if (cells.size() != 4) throw ParseError("expected 4 fields, got " + std::to_string(cells.size()), n);
    if (cells[0].empty()) throw ParseError("empty lemma", n);
    if (!seen.insert(cells[0]).second) throw ParseError("duplicate lemma '" + cells[0] + "'", n);
    rows.push_back({cells[0], parse_flag(cells[1], n), parse_flag(cells[2], n), parse_flag(cells[3], n)});
  }
  if (!header) throw ParseError("missing header", n + 1);
  return rows;
}

std::vector<InventoryRow> load_inventory(const std::filesystem::path& path) {
  auto in = open(path);
  return read_inventory(in);
}

std::set<std::string> read_stopwords(std::istream& in) {
  std::set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    out.insert(line);
  }
  return out;
}

std::set<std::string> load_stopwords(const std::filesystem::path& path) {
  auto in = open(path);
  return read_stopwords(in);
}

void mark_stopwords(std::vector<InventoryRow>& rows, const std::set<std::string>& stopwords) {
  for (auto& r : rows) r.stopword = r.stopword || stopwords.count(r.lemma) > 0;
}

Lexicon build_baseline(const std::vector<InventoryRow>& rows, int variant) {
  if (variant < 1 || variant > 4) {
    throw ContractError("build_baseline: unknown variant " + std::to_string(variant));
  }
  Lexicon lex;
  lex.variant = variant;
  lex.provenance.inventory = rows.size();
  for (const auto& r : rows) {
    if (variant >= 2 && r.stopword) {
      ++lex.provenance.stopwords_removed;
    } else if (variant >= 3 && r.multiword_only) {
      ++lex.provenance.multiword_removed;
    } else if (variant >= 4 && r.figurative) {
      ++lex.provenance.figurative_removed;
    } else {
      lex.lemmas.insert(r.lemma);
    }
  }
  return lex;
}

corpus::Label baseline_classify(const Lexicon& lexicon, const corpus::SentenceRecord& record) {
  for (const auto& l : record.lemmas) {
    if (lexicon.lemmas.count(l)) return corpus::Label::positive;
  }
  return corpus::Label::negative;
}

BaselineResult evaluate_baseline(const Lexicon& lexicon, const std::vector<corpus::SentenceRecord>& records) {
  BaselineResult out;
  std::vector<corpus::Label> gold;
  for (const auto& r : records) {
    gold.push_back(r.label);
    out.predicted.push_back(baseline_classify(lexicon, r));
  }
  out.metrics = training::compute_metrics(gold, out.predicted);
  return out;
}

nlohmann::json to_json(const Lexicon& lexicon) {
  const auto& p = lexicon.provenance;
  return {{"variant", lexicon.variant},
          {"size", lexicon.lemmas.size()},
          {"lemmas", lexicon.lemmas},
          {"provenance",
           {{"inventory", p.inventory},
            {"stopwords_removed", p.stopwords_removed},
            {"multiword_removed", p.multiword_removed},
            {"figurative_removed", p.figurative_removed}}}};
}

}  // namespace semtag::baselines
