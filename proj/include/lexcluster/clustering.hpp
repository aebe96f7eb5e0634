#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "lexcluster/error.hpp"

namespace lexcluster {

enum class ClusterAlgorithm { brown, kmeans, external };

inline const char* to_string(ClusterAlgorithm a) {
  switch (a) {
    case ClusterAlgorithm::brown: return "brown";
    case ClusterAlgorithm::kmeans: return "kmeans";
    case ClusterAlgorithm::external: return "external";
  }
  return "external";
}

struct Provenance {
  ClusterAlgorithm algorithm = ClusterAlgorithm::external;
  std::string corpus_tag;
};

/// Maps relabel targets so ids appear in order of first occurrence.
inline std::vector<std::size_t> relabel_by_first_occurrence(
    const std::vector<std::size_t>& raw) {
  std::unordered_map<std::size_t, std::size_t> remap;
  std::vector<std::size_t> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    auto [it, inserted] = remap.try_emplace(raw[i], remap.size());
    out[i] = it->second;
  }
  return out;
}

/// Hard assignment of words to k clusters with dense ids 0..k-1.
class WordClustering {
 public:
  WordClustering() = default;

  WordClustering(std::vector<std::string> words, std::vector<std::size_t> ids,
                 Provenance provenance = {})
      : words_(std::move(words)), ids_(std::move(ids)), provenance_(std::move(provenance)) {
    if (words_.size() != ids_.size())
      throw ShapeError("clustering words and ids differ in length");
    std::size_t max_id = 0;
    for (std::size_t i = 0; i < words_.size(); ++i) {
      if (!index_.emplace(words_[i], i).second)
        throw DuplicateError("word assigned twice in clustering: " + words_[i]);
      max_id = std::max(max_id, ids_[i]);
    }
    k_ = words_.empty() ? 0 : max_id + 1;
    std::vector<bool> used(k_, false);
    for (std::size_t id : ids_) used[id] = true;
    for (std::size_t c = 0; c < k_; ++c)
      if (!used[c])
        throw SchemaError("cluster ids are not dense: id " + std::to_string(c) +
                          " unused");
  }

  std::size_t k() const { return k_; }
  std::size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }
  const std::vector<std::size_t>& ids() const { return ids_; }
  const Provenance& provenance() const { return provenance_; }

  std::optional<std::size_t> cluster_of(const std::string& word) const {
    auto it = index_.find(word);
    if (it == index_.end()) return std::nullopt;
    return ids_[it->second];
  }

  std::vector<std::vector<std::string>> members() const {
    std::vector<std::vector<std::string>> out(k_);
    for (std::size_t i = 0; i < words_.size(); ++i) out[ids_[i]].push_back(words_[i]);
    return out;
  }

 private:
  std::vector<std::string> words_;
  std::vector<std::size_t> ids_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t k_ = 0;
  Provenance provenance_;
};

/// `cluster_id<TAB>word`, one line per word.
inline std::string serialize_clustering(const WordClustering& c) {
  std::string out;
  for (std::size_t i = 0; i < c.size(); ++i) {
    out += std::to_string(c.ids()[i]);
    out += '\t';
    out += c.words()[i];
    out += '\n';
  }
  return out;
}

inline WordClustering parse_clustering(std::istream& in, Provenance provenance = {}) {
  std::vector<std::string> words;
  std::vector<std::size_t> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 == line.size())
      throw FormatError("cluster file line " + std::to_string(line_no) +
                        ": expected cluster_id<TAB>word");
    std::size_t id;
    try {
      std::size_t used = 0;
      id = std::stoul(line.substr(0, tab), &used);
      if (used != tab) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw FormatError("cluster file line " + std::to_string(line_no) +
                        ": bad cluster id");
    }
    ids.push_back(id);
    words.push_back(line.substr(tab + 1));
  }
  if (words.empty()) throw EmptyInputError("cluster file is empty");
  return WordClustering(std::move(words), std::move(ids), std::move(provenance));
}

inline WordClustering load_clustering(const std::string& path, Provenance provenance = {}) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open cluster file: " + path);
  if (provenance.corpus_tag.empty()) provenance.corpus_tag = path;
  return parse_clustering(in, std::move(provenance));
}

}  // namespace lexcluster
