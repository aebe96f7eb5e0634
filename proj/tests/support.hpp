#pragma once

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "lexcluster/corpus.hpp"

namespace testing_support {

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("lexcluster_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

/// Labeled corpus whose documents are already tokenized.
inline lexcluster::Corpus tokenized_corpus(const std::vector<std::vector<std::string>>& docs,
                                           const std::vector<int>& labels) {
  std::vector<lexcluster::Document> out;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    lexcluster::Document d;
    d.id = "d" + std::to_string(i);
    for (const auto& t : docs[i]) d.text += (d.text.empty() ? "" : " ") + t;
    if (!labels.empty()) d.label = labels[i];
    d.tokens = docs[i];
    out.push_back(std::move(d));
  }
  return lexcluster::Corpus(std::move(out), labels.empty() ? lexcluster::CorpusKind::unlabeled
                                                           : lexcluster::CorpusKind::labeled);
}

inline lexcluster::Corpus unlabeled_corpus(const std::vector<std::vector<std::string>>& docs) {
  return tokenized_corpus(docs, {});
}

}  // namespace testing_support
