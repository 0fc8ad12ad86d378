#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace semtag::corpus {

enum class Label { negative, positive };
enum class Style { literal, metaphor, metonymy, other_figurative };
enum class Form { verse, prose };

std::string_view to_string(Label label);
std::string_view to_string(Style style);
std::string_view to_string(Form form);
Label parse_label(std::string_view s);
Style parse_style(std::string_view s);
Form parse_form(std::string_view s);

// Metonymy counts as non-figurative.
inline bool is_figurative(Style s) {
  return s == Style::metaphor || s == Style::other_figurative;
}

struct AuthorMeta {
  std::string author;
  int century_of_birth = 0;  // negative = BCE
  Form form = Form::prose;
  std::string structure;

  bool operator==(const AuthorMeta&) const = default;
};

struct GoldSpan {
  std::size_t token = 0;
  Style style = Style::literal;

  bool operator==(const GoldSpan&) const = default;
};

struct SentenceRecord {
  std::string id;
  std::string work_id;
  std::vector<std::string> tokens;
  std::vector<std::string> lemmas;
  std::optional<std::vector<std::string>> pos;
  Label label = Label::negative;
  std::vector<GoldSpan> gold_spans;
  AuthorMeta metadata;

  bool operator==(const SentenceRecord&) const = default;
};

// Throws ValidationError when a record breaks its invariants.
void validate(const SentenceRecord& record);

nlohmann::json to_json(const SentenceRecord& record);
nlohmann::json to_json(const AuthorMeta& meta);
// Throws ValidationError on missing or mistyped fields.
SentenceRecord record_from_json(const nlohmann::json& j);
AuthorMeta meta_from_json(const nlohmann::json& j);

// One JSON object per line; blank lines are skipped. Records are validated
// and ids must be unique.
std::vector<SentenceRecord> read_corpus(std::istream& in);
std::vector<SentenceRecord> load_corpus(const std::filesystem::path& path);

void write_corpus(std::ostream& out, const std::vector<SentenceRecord>& records);
void save_corpus(const std::filesystem::path& path, const std::vector<SentenceRecord>& records);

}  // namespace semtag::corpus
