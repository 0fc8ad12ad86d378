#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "semtag/corpus/record.hpp"

namespace semtag::corpus {

// Bijective string↔index map with PAD at 0 and UNK at 1.
class Vocabulary {
 public:
  static constexpr std::size_t pad = 0;
  static constexpr std::size_t unk = 1;
  static constexpr std::string_view pad_surface = "<pad>";
  static constexpr std::string_view unk_surface = "<unk>";

  Vocabulary();
  // Entries after the two reserved ones, in index order.
  explicit Vocabulary(const std::vector<std::string>& entries);

  std::size_t size() const { return surfaces_.size(); }
  bool contains(std::string_view s) const { return index_.count(std::string(s)) != 0; }
  // UNK for unseen surfaces.
  std::size_t index(std::string_view s) const;
  const std::string& surface(std::size_t i) const { return surfaces_.at(i); }
  // Every surface, reserved ones included.
  const std::vector<std::string>& surfaces() const { return surfaces_; }
  std::vector<std::string> entries() const;

  bool operator==(const Vocabulary& other) const { return surfaces_ == other.surfaces_; }

 private:
  std::vector<std::string> surfaces_;
  std::unordered_map<std::string, std::size_t> index_;
};

enum class VocabField { tokens, lemmas, chars };

// UTF-8 code points of a word, each as its own string.
std::vector<std::string> utf8_chars(std::string_view word);

// Ordered by frequency descending, then lexicographically. The chars field
// covers the characters of both tokens and lemmas.
Vocabulary build_vocab(const std::vector<SentenceRecord>& records, VocabField field);

}  // namespace semtag::corpus
