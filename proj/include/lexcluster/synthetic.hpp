#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "lexcluster/clustering.hpp"
#include "lexcluster/corpus.hpp"
#include "lexcluster/error.hpp"
#include "lexcluster/io.hpp"
#include "lexcluster/rng.hpp"

namespace lexcluster {

/// Parameters of the planted-cluster benchmark generator.
///
/// Word i belongs to cluster i mod n_clusters. A document of class y picks
/// `topics_per_doc` clusters from a class-dependent cluster distribution
/// (positives favor the first `informative_clusters` clusters by
/// `topic_boost`), then draws each token from one of its clusters. Within a
/// cluster, words follow a Zipf law with exponent `within_cluster_zipf`;
/// with `word_tilt` > 1, half of each cluster's words lean positive and the
/// other half negative, which gives individual words signal that their
/// cluster does not carry.
struct SyntheticConfig {
  std::size_t vocab_size = 200;
  std::size_t n_clusters = 10;
  std::size_t topics_per_doc = 2;
  std::size_t doc_len_min = 8;
  std::size_t doc_len_max = 14;
  double positive_prior = 0.3;
  double negative_prior = 0.7;
  std::size_t informative_clusters = 2;
  double topic_boost = 4.0;
  double within_cluster_zipf = 0.5;
  double word_tilt = 1.0;
  std::size_t n_train = 1400;
  std::size_t n_test = 600;
  std::size_t n_unlabeled = 50000;
  std::uint64_t seed = 1;

  void validate() const {
    if (n_clusters < 1) throw ParameterError("n_clusters must be >= 1");
    if (vocab_size < 2 * n_clusters) throw ParameterError("vocab_size must be >= 2 * n_clusters");
    if (topics_per_doc < 1) throw ParameterError("topics_per_doc must be >= 1");
    if (doc_len_min < 1 || doc_len_max < doc_len_min)
      throw ParameterError("need 1 <= doc_len_min <= doc_len_max");
    if (positive_prior < 0 || negative_prior < 0 ||
        std::abs(positive_prior + negative_prior - 1.0) > 1e-9)
      throw ParameterError("class priors must be non-negative and sum to 1");
    if (informative_clusters > n_clusters)
      throw ParameterError("informative_clusters exceeds n_clusters");
    if (!(topic_boost > 0) || !(word_tilt > 0) || within_cluster_zipf < 0)
      throw ParameterError("topic_boost and word_tilt must be > 0, zipf >= 0");
  }

  static SyntheticConfig from_json(const nlohmann::json& j) {
    SyntheticConfig c;
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j[key].get<std::decay_t<decltype(field)>>();
    };
    get("vocab_size", c.vocab_size);
    get("n_clusters", c.n_clusters);
    get("topics_per_doc", c.topics_per_doc);
    get("doc_len_min", c.doc_len_min);
    get("doc_len_max", c.doc_len_max);
    if (j.contains("class_priors")) {
      auto pr = j["class_priors"].get<std::vector<double>>();
      if (pr.size() != 2) throw ParameterError("class_priors must have two entries");
      c.positive_prior = pr[0];
      c.negative_prior = pr[1];
    }
    get("informative_clusters", c.informative_clusters);
    get("topic_boost", c.topic_boost);
    get("within_cluster_zipf", c.within_cluster_zipf);
    get("word_tilt", c.word_tilt);
    get("n_train", c.n_train);
    get("n_test", c.n_test);
    get("n_unlabeled", c.n_unlabeled);
    get("seed", c.seed);
    return c;
  }
};

struct SyntheticData {
  Corpus train{{}, CorpusKind::labeled};
  Corpus test{{}, CorpusKind::labeled};
  Corpus unlabeled{{}, CorpusKind::unlabeled};
  WordClustering planted;
};

inline std::string synthetic_word(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "w%04zu", i);
  return buf;
}

namespace detail {

class Categorical {
 public:
  explicit Categorical(std::vector<double> weights) : cdf_(std::move(weights)) {
    for (std::size_t i = 1; i < cdf_.size(); ++i) cdf_[i] += cdf_[i - 1];
  }
  std::size_t draw(Rng& rng) const {
    const double u = rng.uniform() * cdf_.back();
    std::size_t i = 0;
    while (i + 1 < cdf_.size() && cdf_[i] <= u) ++i;
    return i;
  }

 private:
  std::vector<double> cdf_;
};

}  // namespace detail

inline SyntheticData gen_synthetic(const SyntheticConfig& cfg) {
  cfg.validate();
  const std::size_t c = cfg.n_clusters;
  std::vector<std::vector<std::size_t>> members(c);
  for (std::size_t w = 0; w < cfg.vocab_size; ++w) members[w % c].push_back(w);

  // Per class: cluster distribution and per-cluster word distributions.
  std::vector<detail::Categorical> topic_dist;
  std::vector<std::vector<detail::Categorical>> word_dist(2);
  for (int y = 0; y < 2; ++y) {
    std::vector<double> tw(c, 1.0);
    if (y == 1)
      for (std::size_t k = 0; k < cfg.informative_clusters; ++k) tw[k] = cfg.topic_boost;
    topic_dist.emplace_back(std::move(tw));
    for (std::size_t k = 0; k < c; ++k) {
      std::vector<double> ww;
      for (std::size_t r = 0; r < members[k].size(); ++r) {
        double weight = 1.0 / std::pow(static_cast<double>(r + 1), cfg.within_cluster_zipf);
        const bool leans_positive = r % 2 == 0;
        if (leans_positive == (y == 1)) weight *= cfg.word_tilt;
        ww.push_back(weight);
      }
      word_dist[y].emplace_back(std::move(ww));
    }
  }

  Rng rng(cfg.seed);
  std::vector<std::size_t> topics(cfg.topics_per_doc);
  auto make_docs = [&](std::size_t n, const std::string& prefix, bool labeled) {
    std::vector<Document> docs;
    docs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const int y = rng.bernoulli(cfg.positive_prior) ? 1 : 0;
      for (auto& t : topics) t = topic_dist[y].draw(rng);
      const std::size_t len =
          cfg.doc_len_min + static_cast<std::size_t>(rng.below(cfg.doc_len_max - cfg.doc_len_min + 1));
      Document d;
      char id[32];
      std::snprintf(id, sizeof id, "%s-%06zu", prefix.c_str(), i);
      d.id = id;
      for (std::size_t t = 0; t < len; ++t) {
        const std::size_t k = topics[static_cast<std::size_t>(rng.below(topics.size()))];
        const std::size_t w = members[k][word_dist[y][k].draw(rng)];
        if (t) d.text += ' ';
        d.text += synthetic_word(w);
      }
      if (labeled) d.label = y;
      docs.push_back(std::move(d));
    }
    return docs;
  };

  SyntheticData out;
  out.train = Corpus(make_docs(cfg.n_train, "train", true), CorpusKind::labeled);
  out.test = Corpus(make_docs(cfg.n_test, "test", true), CorpusKind::labeled);
  out.unlabeled = Corpus(make_docs(cfg.n_unlabeled, "unl", false), CorpusKind::unlabeled);
  std::vector<std::string> words;
  std::vector<std::size_t> ids;
  for (std::size_t w = 0; w < cfg.vocab_size; ++w) {
    words.push_back(synthetic_word(w));
    ids.push_back(w % c);
  }
  out.planted = WordClustering(std::move(words), std::move(ids),
                               {ClusterAlgorithm::external, "planted"});
  return out;
}

}  // namespace lexcluster
