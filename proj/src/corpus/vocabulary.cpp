#include "semtag/corpus/vocabulary.hpp"

#include <algorithm>
#include <map>

#include "semtag/error.hpp"

namespace semtag::corpus {

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(const std::vector<std::string>& entries) {
  surfaces_.emplace_back(pad_surface);
  surfaces_.emplace_back(unk_surface);
  surfaces_.insert(surfaces_.end(), entries.begin(), entries.end());
  for (std::size_t i = 0; i < surfaces_.size(); ++i) {
    if (!index_.emplace(surfaces_[i], i).second) {
      throw ValidationError("vocabulary: duplicate entry '" + surfaces_[i] + "'");
    }
  }
}

std::size_t Vocabulary::index(std::string_view s) const {
  auto it = index_.find(std::string(s));
  return it == index_.end() ? unk : it->second;
}

std::vector<std::string> Vocabulary::entries() const {
  return {surfaces_.begin() + 2, surfaces_.end()};
}

std::vector<std::string> utf8_chars(std::string_view word) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < word.size()) {
    const auto lead = static_cast<unsigned char>(word[i]);
    std::size_t len = 1;
    if (lead >= 0xF0) len = 4;
    else if (lead >= 0xE0) len = 3;
    else if (lead >= 0xC0) len = 2;
    len = std::min(len, word.size() - i);
    out.emplace_back(word.substr(i, len));
    i += len;
  }
  return out;
}

Vocabulary build_vocab(const std::vector<SentenceRecord>& records, VocabField field) {
  std::map<std::string, std::size_t> counts;
  auto count_word = [&](const std::string& w) {
    if (field == VocabField::chars) {
      for (auto& c : utf8_chars(w)) ++counts[c];
    } else {
      ++counts[w];
    }
  };
  for (const auto& r : records) {
    if (field == VocabField::tokens || field == VocabField::chars) {
      for (const auto& t : r.tokens) count_word(t);
    }
    if (field == VocabField::lemmas || field == VocabField::chars) {
      for (const auto& l : r.lemmas) count_word(l);
    }
  }
  counts.erase(std::string(Vocabulary::pad_surface));
  counts.erase(std::string(Vocabulary::unk_surface));
  std::vector<std::pair<std::string, std::size_t>> ordered(counts.begin(), counts.end());
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> entries;
  entries.reserve(ordered.size());
  for (auto& [s, _] : ordered) entries.push_back(s);
  return Vocabulary(entries);
}

}  // namespace semtag::corpus
