#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lexcluster/error.hpp"
#include "lexcluster/rng.hpp"

namespace lexcluster {

/// One post. `tokens` stays empty (nullopt) until the text is tokenized.
struct Document {
  std::string id;
  std::string text;
  std::optional<int> label;
  std::optional<std::vector<std::string>> tokens;

  bool positive() const { return label.value_or(0) == 1; }
};

enum class CorpusKind { labeled, unlabeled };

inline const char* to_string(CorpusKind kind) {
  return kind == CorpusKind::labeled ? "labeled" : "unlabeled";
}

/// Immutable, validated collection of documents.
///
/// Construction checks that ids are non-empty and unique and that label
/// presence matches the kind, so every Corpus value in the program holds
/// those invariants.
class Corpus {
 public:
  Corpus(std::vector<Document> documents, CorpusKind kind)
      : documents_(std::move(documents)), kind_(kind) {
    std::unordered_set<std::string> seen;
    seen.reserve(documents_.size());
    for (std::size_t i = 0; i < documents_.size(); ++i) {
      const Document& d = documents_[i];
      if (d.id.empty())
        throw SchemaError("document " + std::to_string(i) + " has an empty id");
      if (!seen.insert(d.id).second)
        throw DuplicateError("duplicate document id: " + d.id);
      if (kind_ == CorpusKind::labeled) {
        if (!d.label)
          throw SchemaError("document " + d.id + " has no label in a labeled corpus");
        if (*d.label != 0 && *d.label != 1)
          throw SchemaError("document " + d.id + " has a non-binary label");
      } else if (d.label) {
        throw SchemaError("document " + d.id + " has a label in an unlabeled corpus");
      }
    }
  }

  const std::vector<Document>& documents() const { return documents_; }
  CorpusKind kind() const { return kind_; }
  std::size_t size() const { return documents_.size(); }
  bool empty() const { return documents_.empty(); }
  const Document& operator[](std::size_t i) const { return documents_[i]; }

  bool tokenized() const {
    return std::all_of(documents_.begin(), documents_.end(),
                       [](const Document& d) { return d.tokens.has_value(); });
  }

  std::size_t positives() const {
    return static_cast<std::size_t>(std::count_if(
        documents_.begin(), documents_.end(),
        [](const Document& d) { return d.positive(); }));
  }

  /// True when both labels occur.
  bool both_classes() const {
    std::size_t pos = positives();
    return kind_ == CorpusKind::labeled && pos > 0 && pos < size();
  }

 private:
  std::vector<Document> documents_;
  CorpusKind kind_;
};

namespace detail {

inline Document parse_record(const std::string& line, std::size_t line_no,
                             CorpusKind kind) {
  const std::string where = "line " + std::to_string(line_no);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(where + ": malformed JSON: " + e.what());
  }
  if (!j.is_object()) throw ParseError(where + ": record is not a JSON object");

  Document d;
  auto id = j.find("id");
  if (id == j.end() || !id->is_string())
    throw SchemaError(where + ": missing or non-string \"id\"");
  d.id = id->get<std::string>();
  if (d.id.empty()) throw SchemaError(where + ": empty \"id\"");

  auto text = j.find("text");
  if (text == j.end() || !text->is_string())
    throw SchemaError(where + ": missing or non-string \"text\"");
  d.text = text->get<std::string>();

  auto label = j.find("label");
  if (kind == CorpusKind::labeled) {
    if (label == j.end())
      throw SchemaError(where + ": missing \"label\" in a labeled corpus");
    if (!label->is_number_integer() ||
        (label->get<long long>() != 0 && label->get<long long>() != 1))
      throw SchemaError(where + ": \"label\" must be 0 or 1");
    d.label = label->get<int>();
  } else if (label != j.end()) {
    throw SchemaError(where + ": \"label\" present in an unlabeled corpus");
  }

  if (auto tokens = j.find("tokens"); tokens != j.end()) {
    if (!tokens->is_array())
      throw SchemaError(where + ": \"tokens\" must be an array of strings");
    std::vector<std::string> toks;
    for (const auto& t : *tokens) {
      if (!t.is_string())
        throw SchemaError(where + ": \"tokens\" must be an array of strings");
      toks.push_back(t.get<std::string>());
    }
    d.tokens = std::move(toks);
  }
  return d;
}

}  // namespace detail

/// Parses line-delimited JSON records. Blank lines are skipped; line numbers
/// in errors are 1-based physical lines.
inline Corpus parse_corpus(std::istream& in, CorpusKind kind) {
  std::vector<Document> docs;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    Document d = detail::parse_record(line, line_no, kind);
    if (!seen.insert(d.id).second)
      throw DuplicateError("line " + std::to_string(line_no) +
                           ": duplicate id \"" + d.id + "\"");
    docs.push_back(std::move(d));
  }
  return Corpus(std::move(docs), kind);
}

inline Corpus load_corpus(const std::string& path, CorpusKind kind) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus file: " + path);
  return parse_corpus(in, kind);
}

/// Serializes back to the line-delimited format. Tokens are written when
/// present so a preprocessed corpus can be reloaded without re-tokenizing.
inline std::string serialize_corpus(const Corpus& corpus) {
  std::string out;
  for (const Document& d : corpus.documents()) {
    nlohmann::ordered_json j;
    j["id"] = d.id;
    j["text"] = d.text;
    if (d.label) j["label"] = *d.label;
    if (d.tokens) j["tokens"] = *d.tokens;
    out += j.dump();
    out += '\n';
  }
  return out;
}

struct CorpusStats {
  std::size_t n_total = 0;
  std::size_t n_positive = 0;
  std::size_t vocab_size = 0;
  double mean_tokens_per_doc = 0.0;
  bool labeled = false;

  bool operator==(const CorpusStats&) const = default;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["n_total"] = n_total;
    j["n_positive"] = n_positive;
    j["vocab_size"] = vocab_size;
    j["mean_tokens_per_doc"] = mean_tokens_per_doc;
    j["labeled"] = labeled;
    return j;
  }
};

inline CorpusStats stats(const Corpus& corpus) {
  if (corpus.empty()) throw EmptyInputError("stats of an empty corpus");
  CorpusStats s;
  s.n_total = corpus.size();
  s.labeled = corpus.kind() == CorpusKind::labeled;
  s.n_positive = s.labeled ? corpus.positives() : 0;
  if (corpus.tokenized()) {
    std::set<std::string_view> distinct;
    std::size_t tokens = 0;
    for (const Document& d : corpus.documents()) {
      tokens += d.tokens->size();
      for (const auto& t : *d.tokens) distinct.insert(t);
    }
    s.vocab_size = distinct.size();
    s.mean_tokens_per_doc =
        static_cast<double>(tokens) / static_cast<double>(s.n_total);
  }
  return s;
}

struct SplitSpec {
  double train_fraction = 0.7;
  std::uint64_t seed = 0;
};

namespace detail {

inline Corpus select(const Corpus& corpus, std::span<const std::size_t> idx) {
  std::vector<Document> docs;
  docs.reserve(idx.size());
  for (std::size_t i : idx) docs.push_back(corpus[i]);
  return Corpus(std::move(docs), corpus.kind());
}

inline std::vector<std::size_t> iota_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  return idx;
}

}  // namespace detail

/// Seeded shuffle then cut: train gets floor(n * f) documents.
inline std::pair<Corpus, Corpus> split(const Corpus& corpus, const SplitSpec& spec) {
  if (corpus.kind() != CorpusKind::labeled)
    throw KindError("split requires a labeled corpus");
  if (corpus.size() < 2) throw BoundsError("split requires at least 2 documents");
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0))
    throw ParameterError("train_fraction must lie in (0, 1)");
  auto idx = detail::iota_indices(corpus.size());
  Rng rng(spec.seed);
  rng.shuffle(std::span<std::size_t>(idx));
  const auto cut = static_cast<std::size_t>(
      std::floor(static_cast<double>(corpus.size()) * spec.train_fraction));
  std::span<const std::size_t> all(idx);
  return {detail::select(corpus, all.first(cut)),
          detail::select(corpus, all.subspan(cut))};
}

/// Uniform sample of n documents without replacement (partial Fisher-Yates).
inline Corpus subsample(const Corpus& corpus, std::size_t n, std::uint64_t seed) {
  if (n > corpus.size())
    throw BoundsError("subsample of " + std::to_string(n) + " from a corpus of " +
                      std::to_string(corpus.size()));
  auto idx = detail::iota_indices(corpus.size());
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng.below(idx.size() - i));
    std::swap(idx[i], idx[j]);
  }
  return detail::select(corpus, std::span<const std::size_t>(idx).first(n));
}

}  // namespace lexcluster
