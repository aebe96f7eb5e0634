#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "lexcluster/corpus.hpp"
#include "lexcluster/error.hpp"
#include "lexcluster/stopwords.hpp"

namespace lexcluster {

struct TokenizerConfig {
  std::unordered_set<std::string> stopwords;
  std::size_t min_len = 3;
  std::size_t max_len = 15;
  bool strip_urls = true;
  bool strip_mentions = true;
  bool lowercase = true;

  /// Defaults with the bundled English stopword list.
  static TokenizerConfig with_default_stopwords() {
    TokenizerConfig c;
    for (auto w : kDefaultStopwords) c.stopwords.emplace(w);
    return c;
  }

  void validate() const {
    if (min_len < 1) throw ParameterError("tokenizer min_len must be >= 1");
    if (max_len < min_len) throw ParameterError("tokenizer max_len must be >= min_len");
  }
};

/// One lowercase word per line; '#' starts a comment, blank lines ignored.
inline std::unordered_set<std::string> load_stopwords(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open stopword file: " + path);
  std::unordered_set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    auto e = line.find_last_not_of(" \t\r");
    words.insert(line.substr(b, e - b + 1));
  }
  return words;
}

namespace utf8 {

struct Decoded {
  char32_t cp;
  std::size_t len;
};

/// Decodes one scalar value at s[i]. Invalid bytes decode as U+FFFD of
/// length 1 so malformed input never stalls the scanner.
inline Decoded decode(std::string_view s, std::size_t i) {
  auto byte = [&](std::size_t k) { return static_cast<unsigned char>(s[k]); };
  unsigned char c = byte(i);
  if (c < 0x80) return {c, 1};
  auto cont = [&](std::size_t k) {
    return k < s.size() && (byte(k) & 0xC0) == 0x80;
  };
  if ((c & 0xE0) == 0xC0 && cont(i + 1))
    return {static_cast<char32_t>(((c & 0x1F) << 6) | (byte(i + 1) & 0x3F)), 2};
  if ((c & 0xF0) == 0xE0 && cont(i + 1) && cont(i + 2))
    return {static_cast<char32_t>(((c & 0x0F) << 12) | ((byte(i + 1) & 0x3F) << 6) |
                                  (byte(i + 2) & 0x3F)),
            3};
  if ((c & 0xF8) == 0xF0 && cont(i + 1) && cont(i + 2) && cont(i + 3))
    return {static_cast<char32_t>(((c & 0x07) << 18) | ((byte(i + 1) & 0x3F) << 12) |
                                  ((byte(i + 2) & 0x3F) << 6) | (byte(i + 3) & 0x3F)),
            4};
  return {0xFFFD, 1};
}

inline std::size_t length(std::string_view s) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < s.size(); i += decode(s, i).len) ++n;
  return n;
}

}  // namespace utf8

namespace detail {

inline bool is_space(char32_t c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' ||
         c == '\f' || c == 0x00A0 || (c >= 0x2000 && c <= 0x200B) ||
         c == 0x2028 || c == 0x2029 || c == 0x202F || c == 0x205F || c == 0x3000;
}

inline bool is_punct(char32_t c) {
  if (c < 0x80) {
    return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) ||
           (c >= 0x5B && c <= 0x60) || (c >= 0x7B && c <= 0x7E);
  }
  return c == 0x00A1 || c == 0x00AB || c == 0x00BB || c == 0x00BF ||
         (c >= 0x2010 && c <= 0x2027) || (c >= 0x2030 && c <= 0x205E) ||
         (c >= 0x3001 && c <= 0x3003) || (c >= 0x3008 && c <= 0x3011);
}

/// Strips boundary punctuation. A leading '@' is kept so mentions can be
/// recognized afterwards; '#' is stripped so hashtags keep their word.
inline std::string_view strip_boundary(std::string_view tok) {
  std::size_t b = 0;
  while (b < tok.size()) {
    auto d = utf8::decode(tok, b);
    if (d.cp == '@' || !is_punct(d.cp)) break;
    b += d.len;
  }
  std::size_t e = tok.size();
  while (e > b) {
    // Step back to the start of the previous scalar value.
    std::size_t k = e - 1;
    while (k > b && (static_cast<unsigned char>(tok[k]) & 0xC0) == 0x80) --k;
    auto d = utf8::decode(tok, k);
    if (!is_punct(d.cp)) break;
    e = k;
  }
  return tok.substr(b, e - b);
}

inline std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

inline bool is_url(std::string_view lower) {
  return lower.find("://") != std::string_view::npos || lower.starts_with("www.") ||
         lower.starts_with("t.co/");
}

}  // namespace detail

/// Whitespace split, boundary punctuation strip, then the filters: URLs,
/// mentions, stopwords, length bounds (in Unicode scalar values).
inline std::vector<std::string> tokenize(std::string_view text,
                                         const TokenizerConfig& config) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size()) {
      auto d = utf8::decode(text, i);
      if (!detail::is_space(d.cp)) break;
      i += d.len;
    }
    std::size_t start = i;
    while (i < text.size()) {
      auto d = utf8::decode(text, i);
      if (detail::is_space(d.cp)) break;
      i += d.len;
    }
    if (start == i) continue;

    std::string_view tok = detail::strip_boundary(text.substr(start, i - start));
    if (tok.empty()) continue;
    std::string lower = detail::ascii_lower(tok);
    if (config.strip_urls && detail::is_url(lower)) continue;
    if (config.strip_mentions && tok.front() == '@') continue;
    if (config.stopwords.contains(lower)) continue;
    std::size_t len = utf8::length(tok);
    if (len < config.min_len || len > config.max_len) continue;
    out.push_back(config.lowercase ? std::move(lower) : std::string(tok));
  }
  return out;
}

/// Returns a copy of the corpus with every document tokenized.
inline Corpus tokenize_corpus(const Corpus& corpus, const TokenizerConfig& config) {
  config.validate();
  std::vector<Document> docs = corpus.documents();
  for (Document& d : docs) d.tokens = tokenize(d.text, config);
  return Corpus(std::move(docs), corpus.kind());
}

/// Word list ordered by descending frequency, ties lexicographic.
class Vocabulary {
 public:
  Vocabulary() = default;

  /// Builds from (word, count) pairs, sorting them into canonical order.
  explicit Vocabulary(std::vector<std::pair<std::string, std::uint64_t>> entries) {
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    for (auto& [w, c] : entries) push_back(std::move(w), c);
  }

  /// Appends without reordering; used by loaders that carry their own order.
  void push_back(std::string word, std::uint64_t count) {
    if (index_.contains(word)) throw DuplicateError("duplicate vocabulary word: " + word);
    index_.emplace(word, words_.size());
    words_.push_back(std::move(word));
    counts_.push_back(count);
  }

  std::size_t size() const { return words_.size(); }
  bool empty() const { return words_.empty(); }
  const std::string& word(std::size_t i) const { return words_[i]; }
  std::uint64_t count(std::size_t i) const { return counts_[i]; }
  const std::vector<std::string>& words() const { return words_; }
  const std::vector<std::uint64_t>& counts() const { return counts_; }

  std::optional<std::size_t> find(std::string_view word) const {
    auto it = index_.find(std::string(word));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  bool contains(std::string_view word) const { return find(word).has_value(); }

  std::size_t index(std::string_view word) const {
    auto i = find(word);
    if (!i) throw VocabularyError("word not in vocabulary: " + std::string(word));
    return *i;
  }

 private:
  std::vector<std::string> words_;
  std::vector<std::uint64_t> counts_;
  std::unordered_map<std::string, std::size_t> index_;
};

inline Vocabulary build_vocabulary(const Corpus& corpus, std::uint64_t min_count) {
  if (!corpus.tokenized())
    throw StateError("build_vocabulary requires a tokenized corpus");
  std::unordered_map<std::string, std::uint64_t> freq;
  for (const Document& d : corpus.documents())
    for (const auto& t : *d.tokens) ++freq[t];
  std::vector<std::pair<std::string, std::uint64_t>> kept;
  for (auto& [w, c] : freq)
    if (c >= min_count) kept.emplace_back(w, c);
  return Vocabulary(std::move(kept));
}

}  // namespace lexcluster
