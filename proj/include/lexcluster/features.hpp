#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "lexcluster/clustering.hpp"
#include "lexcluster/corpus.hpp"
#include "lexcluster/error.hpp"
#include "lexcluster/hash.hpp"

namespace lexcluster {

/// Sparse binary matrix: each row stores its set columns in ascending order.
class BinaryMatrix {
 public:
  explicit BinaryMatrix(std::size_t cols = 0) : cols_(cols) {}

  void add_row(std::vector<std::uint32_t> active) {
    std::sort(active.begin(), active.end());
    active.erase(std::unique(active.begin(), active.end()), active.end());
    if (!active.empty() && active.back() >= cols_)
      throw ShapeError("column index out of range for binary matrix");
    indices_.insert(indices_.end(), active.begin(), active.end());
    offsets_.push_back(indices_.size());
  }

  std::size_t rows() const { return offsets_.size() - 1; }
  std::size_t cols() const { return cols_; }
  std::span<const std::uint32_t> row(std::size_t i) const {
    return std::span<const std::uint32_t>(indices_).subspan(offsets_[i], offsets_[i + 1] - offsets_[i]);
  }

  std::vector<std::uint8_t> dense_row(std::size_t i) const {
    std::vector<std::uint8_t> out(cols_, 0);
    for (auto c : row(i)) out[c] = 1;
    return out;
  }

  static BinaryMatrix from_dense(const std::vector<std::vector<std::uint8_t>>& rows,
                                 std::size_t cols) {
    BinaryMatrix m(cols);
    for (const auto& r : rows) {
      if (r.size() != cols) throw ShapeError("dense row has the wrong width");
      std::vector<std::uint32_t> active;
      for (std::size_t c = 0; c < cols; ++c)
        if (r[c]) active.push_back(static_cast<std::uint32_t>(c));
      m.add_row(std::move(active));
    }
    return m;
  }

  /// Rows selected by index, in the given order.
  BinaryMatrix select_rows(std::span<const std::size_t> idx) const {
    BinaryMatrix m(cols_);
    for (std::size_t i : idx) {
      auto r = row(i);
      m.add_row({r.begin(), r.end()});
    }
    return m;
  }

 private:
  std::size_t cols_;
  std::vector<std::size_t> offsets_{0};
  std::vector<std::uint32_t> indices_;
};

/// Smoothed document-frequency PMI difference per word of the training set.
struct PmiTable {
  std::vector<std::string> words;
  std::vector<std::size_t> df_pos;
  std::vector<std::size_t> df_neg;
  std::vector<double> score;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
};

/// score(t) = log2(p(t|pos) / p(t|neg)) with p(t|c) = (df_c(t) + 1) / (n_c + 2).
///
/// Evaluated as log2((df_pos+1)(n_neg+2)) - log2((df_neg+1)(n_pos+2)): both
/// products are exact integers, and swapping the classes negates the result
/// bit for bit.
inline double pmi_score(std::size_t df_pos, std::size_t n_pos, std::size_t df_neg,
                        std::size_t n_neg) {
  const double a = (static_cast<double>(df_pos) + 1.0) * (static_cast<double>(n_neg) + 2.0);
  const double b = (static_cast<double>(df_neg) + 1.0) * (static_cast<double>(n_pos) + 2.0);
  return std::log2(a) - std::log2(b);
}

inline PmiTable pmi_scores(const Corpus& train) {
  if (train.kind() != CorpusKind::labeled) throw KindError("pmi_scores needs a labeled corpus");
  if (!train.tokenized()) throw StateError("pmi_scores needs a tokenized corpus");
  if (!train.both_classes()) throw ClassError("pmi_scores needs both classes present");
  PmiTable t;
  std::unordered_map<std::string, std::size_t> index;
  for (const Document& d : train.documents()) {
    const bool pos = d.positive();
    (pos ? t.n_pos : t.n_neg) += 1;
    std::vector<std::string_view> uniq(d.tokens->begin(), d.tokens->end());
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    for (auto w : uniq) {
      auto [it, inserted] = index.try_emplace(std::string(w), t.words.size());
      if (inserted) {
        t.words.emplace_back(w);
        t.df_pos.push_back(0);
        t.df_neg.push_back(0);
      }
      (pos ? t.df_pos : t.df_neg)[it->second] += 1;
    }
  }
  // Canonical word order keeps the table independent of document order.
  std::vector<std::size_t> order(t.words.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return t.words[a] < t.words[b]; });
  PmiTable sorted;
  sorted.n_pos = t.n_pos;
  sorted.n_neg = t.n_neg;
  for (std::size_t i : order) {
    sorted.words.push_back(t.words[i]);
    sorted.df_pos.push_back(t.df_pos[i]);
    sorted.df_neg.push_back(t.df_neg[i]);
    sorted.score.push_back(pmi_score(t.df_pos[i], t.n_pos, t.df_neg[i], t.n_neg));
  }
  return sorted;
}

enum class FeatureScheme { bow_topk, clusters };

/// Either a selected word list (bag of words) or a word clustering (bag of
/// clusters). Feature dimension is the word count or the cluster count.
class FeatureSpec {
 public:
  static FeatureSpec bow(std::vector<std::string> words) {
    FeatureSpec s;
    s.scheme_ = FeatureScheme::bow_topk;
    for (std::size_t i = 0; i < words.size(); ++i)
      if (!s.word_index_.emplace(words[i], static_cast<std::uint32_t>(i)).second)
        throw DuplicateError("duplicate feature word: " + words[i]);
    s.words_ = std::move(words);
    return s;
  }

  static FeatureSpec clusters(std::shared_ptr<const WordClustering> clustering,
                              std::string source = {}) {
    if (!clustering) throw ParameterError("cluster feature spec needs a clustering");
    FeatureSpec s;
    s.scheme_ = FeatureScheme::clusters;
    s.clustering_ = std::move(clustering);
    s.source_ = std::move(source);
    return s;
  }

  FeatureScheme scheme() const { return scheme_; }
  const std::vector<std::string>& bow_words() const { return words_; }
  const WordClustering& clustering() const { return *clustering_; }
  const std::shared_ptr<const WordClustering>& clustering_ptr() const { return clustering_; }
  const std::string& source() const { return source_; }

  std::size_t dim() const {
    return scheme_ == FeatureScheme::bow_topk ? words_.size() : clustering_->k();
  }

  /// Feature index for a token, if it contributes one.
  std::optional<std::uint32_t> feature_of(const std::string& token) const {
    if (scheme_ == FeatureScheme::bow_topk) {
      auto it = word_index_.find(token);
      if (it == word_index_.end()) return std::nullopt;
      return it->second;
    }
    auto c = clustering_->cluster_of(token);
    if (!c) return std::nullopt;
    return static_cast<std::uint32_t>(*c);
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    if (scheme_ == FeatureScheme::bow_topk) {
      j["scheme"] = "bow_topk";
      j["dim"] = dim();
      j["words"] = words_;
    } else {
      j["scheme"] = "clusters";
      j["dim"] = dim();
      j["cluster_file"] = source_;
      j["cluster_hash"] = content_hash(serialize_clustering(*clustering_));
    }
    return j;
  }

  std::string hash() const {
    auto j = to_json();
    j.erase("cluster_file");
    return content_hash(j.dump());
  }

  /// Inverse of to_json. Cluster specs reload their cluster file and check
  /// its content hash.
  static FeatureSpec from_json(const nlohmann::json& j) {
    const std::string scheme = j.value("scheme", "");
    if (scheme == "bow_topk") {
      if (!j.contains("words") || !j["words"].is_array())
        throw SchemaError("bow_topk feature spec needs a \"words\" array");
      return bow(j["words"].get<std::vector<std::string>>());
    }
    if (scheme == "clusters") {
      const std::string path = j.value("cluster_file", "");
      if (path.empty()) throw SchemaError("clusters feature spec needs \"cluster_file\"");
      auto c = std::make_shared<WordClustering>(load_clustering(path));
      if (j.contains("cluster_hash") &&
          j["cluster_hash"].get<std::string>() != content_hash(serialize_clustering(*c)))
        throw FormatError("cluster file " + path + " does not match the spec's content hash");
      return clusters(std::move(c), path);
    }
    throw SchemaError("unknown feature scheme: \"" + scheme + "\"");
  }

 private:
  FeatureScheme scheme_ = FeatureScheme::bow_topk;
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::uint32_t> word_index_;
  std::shared_ptr<const WordClustering> clustering_;
  std::string source_;
};

struct TopK {
  FeatureSpec spec;
  bool fewer_than_k = false;  // the table had fewer than k words
};

/// The k highest-scoring words; ties prefer larger df_pos, then the
/// lexicographically smaller word.
inline TopK select_top_k(const PmiTable& table, std::size_t k) {
  if (k < 1) throw ParameterError("select_top_k needs k >= 1");
  std::vector<std::size_t> order(table.words.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  auto better = [&](std::size_t a, std::size_t b) {
    if (table.score[a] != table.score[b]) return table.score[a] > table.score[b];
    if (table.df_pos[a] != table.df_pos[b]) return table.df_pos[a] > table.df_pos[b];
    return table.words[a] < table.words[b];
  };
  const std::size_t take = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                    better);
  std::vector<std::string> words;
  for (std::size_t i = 0; i < take; ++i) words.push_back(table.words[order[i]]);
  return {FeatureSpec::bow(std::move(words)), take < k};
}

/// Set feature indices for a token list; OOV tokens contribute nothing.
inline std::vector<std::uint32_t> active_features(std::span<const std::string> tokens,
                                                  const FeatureSpec& spec) {
  std::vector<std::uint32_t> out;
  for (const auto& t : tokens)
    if (auto f = spec.feature_of(t)) out.push_back(*f);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline std::vector<std::uint8_t> featurize(const Document& doc, const FeatureSpec& spec) {
  if (!doc.tokens) throw StateError("featurize needs a tokenized document: " + doc.id);
  std::vector<std::uint8_t> x(spec.dim(), 0);
  for (auto f : active_features(*doc.tokens, spec)) x[f] = 1;
  return x;
}

inline BinaryMatrix featurize_corpus(const Corpus& corpus, const FeatureSpec& spec) {
  BinaryMatrix m(spec.dim());
  for (const Document& d : corpus.documents()) {
    if (!d.tokens) throw StateError("featurize needs a tokenized document: " + d.id);
    m.add_row(active_features(*d.tokens, spec));
  }
  return m;
}

inline std::vector<int> labels_of(const Corpus& corpus) {
  std::vector<int> y;
  y.reserve(corpus.size());
  for (const Document& d : corpus.documents()) y.push_back(d.label.value_or(0));
  return y;
}

}  // namespace lexcluster
