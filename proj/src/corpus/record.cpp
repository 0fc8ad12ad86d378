#include "semtag/corpus/record.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_set>

#include "semtag/error.hpp"

namespace semtag::corpus {

using nlohmann::json;

std::string_view to_string(Label label) {
  return label == Label::positive ? "positive" : "negative";
}

std::string_view to_string(Style style) {
  switch (style) {
    case Style::literal: return "literal";
    case Style::metaphor: return "metaphor";
    case Style::metonymy: return "metonymy";
    case Style::other_figurative: return "other-figurative";
  }
  return "literal";
}

std::string_view to_string(Form form) { return form == Form::verse ? "verse" : "prose"; }

Label parse_label(std::string_view s) {
  if (s == "positive") return Label::positive;
  if (s == "negative") return Label::negative;
  throw ValidationError("unknown label '" + std::string(s) + "'");
}

Style parse_style(std::string_view s) {
  if (s == "literal") return Style::literal;
  if (s == "metaphor") return Style::metaphor;
  if (s == "metonymy") return Style::metonymy;
  if (s == "other-figurative") return Style::other_figurative;
  throw ValidationError("unknown style '" + std::string(s) + "'");
}

Form parse_form(std::string_view s) {
  if (s == "verse") return Form::verse;
  if (s == "prose") return Form::prose;
  throw ValidationError("unknown form '" + std::string(s) + "'");
}

void validate(const SentenceRecord& r) {
  const std::string who = "record '" + r.id + "': ";
  if (r.id.empty()) throw ValidationError("record with empty id");
  if (r.tokens.empty()) throw ValidationError(who + "no tokens");
  if (r.lemmas.size() != r.tokens.size()) {
    throw ValidationError(who + std::to_string(r.tokens.size()) + " tokens but " +
                          std::to_string(r.lemmas.size()) + " lemmas");
  }
  if (r.pos && r.pos->size() != r.tokens.size()) {
    throw ValidationError(who + "pos length differs from token count");
  }
  for (const auto& span : r.gold_spans) {
    if (span.token >= r.tokens.size()) {
      throw ValidationError(who + "gold span index " + std::to_string(span.token) +
                            " out of range");
    }
  }
  if (r.label == Label::negative && !r.gold_spans.empty()) {
    throw ValidationError(who + "negative record carries gold spans");
  }
}

json to_json(const AuthorMeta& m) {
  return json{{"author", m.author},
              {"century_of_birth", m.century_of_birth},
              {"form", to_string(m.form)},
              {"structure", m.structure}};
}

json to_json(const SentenceRecord& r) {
  json spans = json::array();
  for (const auto& s : r.gold_spans) spans.push_back({{"index", s.token}, {"style", to_string(s.style)}});
  json j{{"id", r.id},
         {"work_id", r.work_id},
         {"tokens", r.tokens},
         {"lemmas", r.lemmas}};
  if (r.pos) j["pos"] = *r.pos;
  j["label"] = to_string(r.label);
  j["gold_spans"] = std::move(spans);
  j["metadata"] = to_json(r.metadata);
  return j;
}

namespace {

template <typename V>
V field(const json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end()) throw ValidationError(std::string("missing field '") + name + "'");
  try {
    return it->get<V>();
  } catch (const json::exception&) {
    throw ValidationError(std::string("field '") + name + "' has the wrong type");
  }
}

}  // namespace

AuthorMeta meta_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("metadata must be an object");
  AuthorMeta m;
  m.author = field<std::string>(j, "author");
  m.century_of_birth = field<int>(j, "century_of_birth");
  m.form = parse_form(field<std::string>(j, "form"));
  m.structure = field<std::string>(j, "structure");
  return m;
}

SentenceRecord record_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("record must be a JSON object");
  SentenceRecord r;
  r.id = field<std::string>(j, "id");
  r.work_id = field<std::string>(j, "work_id");
  r.tokens = field<std::vector<std::string>>(j, "tokens");
  r.lemmas = field<std::vector<std::string>>(j, "lemmas");
  if (auto it = j.find("pos"); it != j.end() && !it->is_null()) {
    r.pos = field<std::vector<std::string>>(j, "pos");
  }
  r.label = parse_label(field<std::string>(j, "label"));
  if (auto it = j.find("gold_spans"); it != j.end()) {
    if (!it->is_array()) throw ValidationError("field 'gold_spans' must be an array");
    for (const auto& s : *it) {
      GoldSpan span;
      if (s.is_array() && s.size() == 2 && s[0].is_number_unsigned() && s[1].is_string()) {
        span.token = s[0].get<std::size_t>();
        span.style = parse_style(s[1].get<std::string>());
      } else if (s.is_object()) {
        span.token = field<std::size_t>(s, "index");
        span.style = parse_style(field<std::string>(s, "style"));
      } else {
        throw ValidationError("malformed gold span");
      }
      r.gold_spans.push_back(span);
    }
  }
  r.metadata = meta_from_json(field<json>(j, "metadata"));
  validate(r);
  return r;
}

std::vector<SentenceRecord> read_corpus(std::istream& in) {
  std::vector<SentenceRecord> out;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("malformed JSON: ") + e.what(), lineno);
    }
    try {
      auto rec = record_from_json(j);
      if (!seen.insert(rec.id).second) throw ValidationError("duplicate id '" + rec.id + "'");
      out.push_back(std::move(rec));
    } catch (const ParseError&) {
      throw;
    } catch (const ValidationError& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  return out;
}

std::vector<SentenceRecord> load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open corpus file " + path.string());
  return read_corpus(in);
}

void write_corpus(std::ostream& out, const std::vector<SentenceRecord>& records) {
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

void save_corpus(const std::filesystem::path& path, const std::vector<SentenceRecord>& records) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write corpus file " + path.string());
  write_corpus(out, records);
}

}  // namespace semtag::corpus
