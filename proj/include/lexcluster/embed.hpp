#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "lexcluster/corpus.hpp"
#include "lexcluster/error.hpp"
#include "lexcluster/io.hpp"
#include "lexcluster/rng.hpp"
#include "lexcluster/tokenize.hpp"

namespace lexcluster {

struct SgnsConfig {
  std::size_t dim = 20;
  std::size_t window = 100;
  std::size_t negatives = 5;
  double subsample_threshold = 1e-3;
  std::size_t epochs = 5;
  double initial_learning_rate = 0.025;
  std::uint64_t seed = 0;

  void validate() const {
    if (dim < 1) throw ParameterError("embedding dim must be >= 1");
    if (window < 1) throw ParameterError("window must be >= 1");
    if (negatives < 1) throw ParameterError("negatives must be >= 1");
    if (!(subsample_threshold > 0.0)) throw ParameterError("subsample threshold must be > 0");
    if (!(initial_learning_rate > 0.0)) throw ParameterError("learning rate must be > 0");
  }
};

/// Row-major |V| x dim tables of input (v_w) and output (v'_w) vectors.
/// Pretrained matrices carry the input table only.
struct EmbeddingMatrix {
  Vocabulary vocab;
  std::size_t dim = 0;
  std::vector<double> input;
  std::vector<double> output;

  bool has_output() const { return !output.empty(); }

  std::span<double> input_row(std::size_t i) { return {input.data() + i * dim, dim}; }
  std::span<const double> input_row(std::size_t i) const {
    return {input.data() + i * dim, dim};
  }
  std::span<double> output_row(std::size_t i) { return {output.data() + i * dim, dim}; }
  std::span<const double> output_row(std::size_t i) const {
    return {output.data() + i * dim, dim};
  }

  /// The table k-means should cluster: output vectors when trained locally,
  /// otherwise the only table there is.
  const std::vector<double>& clustering_table() const { return has_output() ? output : input; }

  bool all_finite() const {
    auto finite = [](double x) { return std::isfinite(x); };
    return std::all_of(input.begin(), input.end(), finite) &&
           std::all_of(output.begin(), output.end(), finite);
  }
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double log_sigmoid(double x) {
  return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

/// Skip-gram softmax p(neighbor | target) over the whole vocabulary,
/// stabilized by subtracting the largest logit.
inline double softmax_probability(const std::string& target, const std::string& neighbor,
                                  const EmbeddingMatrix& emb) {
  if (!emb.has_output())
    throw StateError("softmax_probability needs an output vector table");
  const std::size_t t = emb.vocab.index(target);
  const std::size_t n = emb.vocab.index(neighbor);
  const auto vt = emb.input_row(t);
  std::vector<double> logits(emb.vocab.size());
  for (std::size_t w = 0; w < logits.size(); ++w) logits[w] = dot(emb.output_row(w), vt);
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double l : logits) z += std::exp(l - mx);
  return std::exp(logits[n] - mx) / z;
}

/// Per-sample SGNS coefficient: label minus predicted probability. The pair
/// loss gradient wrt an output vector is -coef * v_target and wrt the target
/// is -sum(coef * v'_sample); training steps along the negated gradient.
inline double sgns_coefficient(int label, double score) {
  return static_cast<double>(label) - sigmoid(score);
}

/// Negative log-likelihood of one (target, neighbor) pair with its negative
/// samples: -log s(v'_N.v_T) - sum_k log s(-v'_k.v_T).
inline double sgns_pair_loss(std::span<const double> target, std::span<const double> positive,
                             std::span<const std::span<const double>> negatives) {
  double loss = -log_sigmoid(dot(positive, target));
  for (auto neg : negatives) loss -= log_sigmoid(-dot(neg, target));
  return loss;
}

struct SgnsPairGradient {
  std::vector<double> target;
  std::vector<double> positive;
  std::vector<std::vector<double>> negatives;
};

inline SgnsPairGradient sgns_pair_gradient(
    std::span<const double> target, std::span<const double> positive,
    std::span<const std::span<const double>> negatives) {
  const std::size_t p = target.size();
  SgnsPairGradient g;
  g.target.assign(p, 0.0);
  auto accumulate = [&](std::span<const double> out_vec, int label) {
    const double coef = sgns_coefficient(label, dot(out_vec, target));
    std::vector<double> g_out(p);
    for (std::size_t d = 0; d < p; ++d) {
      g.target[d] -= coef * out_vec[d];
      g_out[d] = -coef * target[d];
    }
    return g_out;
  };
  g.positive = accumulate(positive, 1);
  for (auto neg : negatives) g.negatives.push_back(accumulate(neg, 0));
  return g;
}

namespace detail {

/// Draws word ids from counts^0.75 by inverse CDF.
class UnigramSampler {
 public:
  explicit UnigramSampler(const std::vector<std::uint64_t>& counts) {
    cdf_.resize(counts.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      acc += std::pow(static_cast<double>(counts[i]), 0.75);
      cdf_[i] = acc;
    }
  }
  std::size_t draw(Rng& rng) const {
    const double u = rng.uniform() * cdf_.back();
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
  }

 private:
  std::vector<double> cdf_;
};

}  // namespace detail

/// Single-threaded skip-gram with negative sampling. Every in-post pair
/// within `window` positions is a training pair; results are a pure
/// function of (corpus, vocab, config).
inline EmbeddingMatrix sgns_train(const Corpus& corpus, const Vocabulary& vocab,
                                  const SgnsConfig& config) {
  config.validate();
  if (!corpus.tokenized()) throw StateError("sgns_train requires a tokenized corpus");
  if (vocab.empty()) throw EmptyInputError("sgns_train: empty vocabulary");

  const std::size_t v = vocab.size();
  const std::size_t p = config.dim;
  EmbeddingMatrix emb;
  emb.vocab = vocab;
  emb.dim = p;
  emb.input.resize(v * p);
  emb.output.assign(v * p, 0.0);
  Rng rng(config.seed);
  for (double& x : emb.input) x = (rng.uniform() - 0.5) / static_cast<double>(p);

  std::vector<std::vector<std::uint32_t>> docs;
  docs.reserve(corpus.size());
  std::vector<std::uint64_t> counts(v, 0);
  std::uint64_t train_words = 0;
  for (const Document& d : corpus.documents()) {
    std::vector<std::uint32_t> ids;
    for (const auto& t : *d.tokens)
      if (auto i = vocab.find(t)) {
        ids.push_back(static_cast<std::uint32_t>(*i));
        ++counts[*i];
      }
    train_words += ids.size();
    docs.push_back(std::move(ids));
  }
  if (train_words == 0) throw EmptyInputError("sgns_train: no in-vocabulary tokens");
  if (config.epochs == 0) return emb;

  std::vector<double> keep(v, 1.0);
  for (std::size_t w = 0; w < v; ++w) {
    const double f = static_cast<double>(counts[w]) / static_cast<double>(train_words);
    if (f > config.subsample_threshold) keep[w] = std::sqrt(config.subsample_threshold / f);
  }
  detail::UnigramSampler sampler(counts);

  const double total = static_cast<double>(config.epochs) * static_cast<double>(train_words);
  double processed = 0.0;
  std::vector<std::uint32_t> kept;
  std::vector<double> grad_target(p);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::uint64_t kept_total = 0;
    for (const auto& doc : docs) {
      kept.clear();
      for (std::uint32_t w : doc)
        if (keep[w] >= 1.0 || rng.uniform() < keep[w]) kept.push_back(w);
      kept_total += kept.size();
      for (std::size_t i = 0; i < kept.size(); ++i) {
        const double lr = config.initial_learning_rate *
                          std::max(1e-4, 1.0 - processed / total);
        const std::size_t lo = i >= config.window ? i - config.window : 0;
        const std::size_t hi = std::min(kept.size(), i + config.window + 1);
        auto vt = emb.input_row(kept[i]);
        for (std::size_t j = lo; j < hi; ++j) {
          if (j == i) continue;
          const std::uint32_t neighbor = kept[j];
          std::fill(grad_target.begin(), grad_target.end(), 0.0);
          for (std::size_t s = 0; s <= config.negatives; ++s) {
            std::size_t word = neighbor;
            int label = 1;
            if (s > 0) {
              word = sampler.draw(rng);
              if (word == neighbor) continue;
              label = 0;
            }
            auto vo = emb.output_row(word);
            const double step = lr * sgns_coefficient(label, dot(vo, vt));
            for (std::size_t d = 0; d < p; ++d) {
              grad_target[d] += step * vo[d];
              vo[d] += step * vt[d];
            }
          }
          for (std::size_t d = 0; d < p; ++d) vt[d] += grad_target[d];
        }
      }
      processed += static_cast<double>(doc.size());
    }
    if (epoch == 0 && kept_total == 0)
      throw EmptyInputError("sgns_train: corpus is empty after subsampling");
    if (!emb.all_finite())
      throw NumericError("sgns_train produced non-finite vectors in epoch " +
                         std::to_string(epoch + 1));
  }
  return emb;
}

/// Text format: header `|V| p`, then `word v1 ... vp` per line.
inline std::string serialize_embeddings(const Vocabulary& vocab, std::size_t dim,
                                        const std::vector<double>& table) {
  std::string out = std::to_string(vocab.size()) + " " + std::to_string(dim) + "\n";
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    out += vocab.word(i);
    for (std::size_t d = 0; d < dim; ++d) {
      out += ' ';
      out += format_real(table[i * dim + d], 9);
    }
    out += '\n';
  }
  return out;
}

inline EmbeddingMatrix parse_embeddings(std::istream& in, const std::string& name = "embeddings") {
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& msg) {
    throw FormatError(name + " line " + std::to_string(line_no) + ": " + msg);
  };
  if (!std::getline(in, line)) throw FormatError(name + ": missing header");
  ++line_no;
  std::size_t rows = 0, dim = 0;
  {
    std::istringstream hs(line);
    std::string extra;
    if (!(hs >> rows >> dim) || (hs >> extra) || dim == 0)
      fail("header must be `<rows> <dim>` with dim > 0");
  }
  EmbeddingMatrix emb;
  emb.dim = dim;
  emb.input.reserve(rows * dim);
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (emb.vocab.size() == rows) fail("more rows than the header declares");
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    std::string field;
    std::size_t got = 0;
    while (ls >> field) {
      if (got == dim) fail("more than " + std::to_string(dim) + " values");
      char* end = nullptr;
      const double x = std::strtod(field.c_str(), &end);
      if (end != field.c_str() + field.size()) fail("bad number '" + field + "'");
      if (!std::isfinite(x)) fail("non-finite value '" + field + "'");
      emb.input.push_back(x);
      ++got;
    }
    if (got != dim)
      fail("expected " + std::to_string(dim) + " values, found " + std::to_string(got));
    try {
      emb.vocab.push_back(word, 0);
    } catch (const DuplicateError&) {
      fail("duplicate word '" + word + "'");
    }
  }
  if (emb.vocab.size() != rows)
    throw FormatError(name + ": header declares " + std::to_string(rows) + " rows, found " +
                      std::to_string(emb.vocab.size()));
  return emb;
}

inline EmbeddingMatrix load_pretrained(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open embedding file: " + path);
  return parse_embeddings(in, path);
}

}  // namespace lexcluster
