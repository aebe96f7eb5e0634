#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "lexcluster/clustering.hpp"
#include "lexcluster/embed.hpp"
#include "lexcluster/error.hpp"
#include "lexcluster/rng.hpp"

namespace lexcluster {

struct KmeansConfig {
  std::size_t k = 0;
  std::size_t max_iters = 100;
  double tolerance = 1e-6;  // relative objective change
  std::uint64_t seed = 0;
  std::size_t restarts = 3;
  bool normalize = false;   // cluster unit-length copies of the vectors
  bool refine = true;       // single-point improvement pass after Lloyd

  void validate() const {
    if (k < 1) throw ParameterError("k must be >= 1");
    if (max_iters < 1) throw ParameterError("max_iters must be >= 1");
    if (!(tolerance >= 0.0)) throw ParameterError("tolerance must be >= 0");
    if (restarts < 1) throw ParameterError("restarts must be >= 1");
  }
};

struct KmeansFit {
  std::vector<std::size_t> assignment;  // dense ids, first-occurrence order
  std::vector<double> centroids;        // k x dim, row-major, matching ids
  double objective = 0.0;
  std::size_t best_restart = 0;
  /// Objective after every assignment and every update step, per restart.
  std::vector<std::vector<double>> traces;
};

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

namespace detail {

struct LloydRun {
  std::vector<std::size_t> assignment;
  std::vector<double> centroids;
  double objective = 0.0;
  std::vector<double> trace;
};

/// Single-point moves after Lloyd converges: a point leaves its cluster when
/// the exact change in objective, including both centroid shifts, is
/// negative. Sweeps repeat until no point moves.
inline void hartigan_refine(std::span<const double> points, std::size_t n, std::size_t dim,
                            std::size_t k, LloydRun& run) {
  auto point = [&](std::size_t i) { return points.subspan(i * dim, dim); };
  auto centroid = [&](std::size_t c) { return std::span<double>(run.centroids).subspan(c * dim, dim); };
  std::vector<std::size_t> sizes(k, 0);
  for (auto a : run.assignment) ++sizes[a];
  for (std::size_t sweep = 0; sweep < 10 * n + 10; ++sweep) {
    bool moved = false;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t a = run.assignment[i];
      if (sizes[a] <= 1) continue;
      const double na = static_cast<double>(sizes[a]);
      const double removal = na / (na - 1.0) * squared_distance(point(i), centroid(a));
      std::size_t target = a;
      double best_gain = 1e-12 * removal;
      for (std::size_t b = 0; b < k; ++b) {
        if (b == a) continue;
        const double nb = static_cast<double>(sizes[b]);
        const double gain = removal - nb / (nb + 1.0) * squared_distance(point(i), centroid(b));
        if (gain > best_gain) {
          best_gain = gain;
          target = b;
        }
      }
      if (target == a) continue;
      const double nb = static_cast<double>(sizes[target]);
      auto ca = centroid(a), cb = centroid(target);
      auto x = point(i);
      for (std::size_t d = 0; d < dim; ++d) {
        ca[d] = (na * ca[d] - x[d]) / (na - 1.0);
        cb[d] = (nb * cb[d] + x[d]) / (nb + 1.0);
      }
      --sizes[a];
      ++sizes[target];
      run.assignment[i] = target;
      moved = true;
    }
    if (!moved) break;
    // Recompute exactly so incremental centroid updates do not drift.
    std::fill(run.centroids.begin(), run.centroids.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      auto ci = centroid(run.assignment[i]);
      for (std::size_t d = 0; d < dim; ++d) ci[d] += point(i)[d];
    }
    for (std::size_t c = 0; c < k; ++c)
      for (double& v : centroid(c)) v /= static_cast<double>(sizes[c]);
    double objective = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      objective += squared_distance(point(i), centroid(run.assignment[i]));
    run.trace.push_back(objective);
    run.objective = objective;
  }
}

inline LloydRun lloyd(std::span<const double> points, std::size_t n, std::size_t dim,
                      const KmeansConfig& config, Rng& rng) {
  const std::size_t k = config.k;
  auto point = [&](std::size_t i) { return points.subspan(i * dim, dim); };
  LloydRun run;
  run.centroids.resize(k * dim);
  auto centroid = [&](std::size_t c) { return std::span<double>(run.centroids).subspan(c * dim, dim); };

  // Greedy k-means++ seeding: each new center is the best of a few
  // D^2-sampled candidates, judged by the potential it leaves behind.
  const std::size_t trials = 2 + static_cast<std::size_t>(std::log(static_cast<double>(k)));
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::vector<double> cand_d2(n), best_d2(n);
  std::vector<bool> chosen(n, false);
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t pick = n;
    if (c == 0) {
      pick = static_cast<std::size_t>(rng.below(n));
      for (std::size_t i = 0; i < n; ++i) best_d2[i] = squared_distance(point(i), point(pick));
    } else {
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) total += d2[i];
      if (total > 0.0) {
        double best_potential = std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t < trials; ++t) {
          double u = rng.uniform() * total;
          std::size_t cand = n;
          for (std::size_t i = 0; i < n; ++i) {
            if (d2[i] <= 0.0) continue;
            cand = i;
            u -= d2[i];
            if (u < 0.0) break;
          }
          double potential = 0.0;
          for (std::size_t i = 0; i < n; ++i) {
            cand_d2[i] = std::min(d2[i], squared_distance(point(i), point(cand)));
            potential += cand_d2[i];
          }
          if (potential < best_potential) {
            best_potential = potential;
            pick = cand;
            best_d2.swap(cand_d2);
          }
        }
      } else {
        // Every point coincides with a center: take a uniform unchosen one.
        std::vector<std::size_t> rest;
        for (std::size_t i = 0; i < n; ++i)
          if (!chosen[i]) rest.push_back(i);
        pick = rest[static_cast<std::size_t>(rng.below(rest.size()))];
        for (std::size_t i = 0; i < n; ++i)
          best_d2[i] = std::min(d2[i], squared_distance(point(i), point(pick)));
      }
    }
    chosen[pick] = true;
    std::copy_n(point(pick).begin(), dim, centroid(c).begin());
    d2.swap(best_d2);
  }

  run.assignment.assign(n, 0);
  std::vector<double> dist(n);
  std::vector<std::size_t> sizes(k);
  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t iter = 0; iter < config.max_iters; ++iter) {
    // Assignment step; ties go to the lowest cluster id.
    bool changed = iter == 0;
    std::fill(sizes.begin(), sizes.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double d = squared_distance(point(i), centroid(c));
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      changed |= run.assignment[i] != best;
      run.assignment[i] = best;
      dist[i] = best_d;
      ++sizes[best];
    }
    // Empty-cluster repair: move the point farthest from its centroid.
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] != 0) continue;
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i)
        if (sizes[run.assignment[i]] > 1 && (far == n || dist[i] > dist[far])) far = i;
      --sizes[run.assignment[far]];
      run.assignment[far] = c;
      sizes[c] = 1;
      dist[far] = 0.0;
      std::copy_n(point(far).begin(), dim, centroid(c).begin());
      changed = true;
    }
    double assigned = 0.0;
    for (double d : dist) assigned += d;
    run.trace.push_back(assigned);

    // Update step.
    std::fill(run.centroids.begin(), run.centroids.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      auto ci = centroid(run.assignment[i]);
      auto pi = point(i);
      for (std::size_t d = 0; d < dim; ++d) ci[d] += pi[d];
    }
    for (std::size_t c = 0; c < k; ++c)
      for (double& x : centroid(c)) x /= static_cast<double>(sizes[c]);
    double objective = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      objective += squared_distance(point(i), centroid(run.assignment[i]));
    run.trace.push_back(objective);
    run.objective = objective;

    if (!changed) break;
    if (std::isfinite(previous) && previous - objective <= config.tolerance * previous) break;
    previous = objective;
  }
  if (config.refine) hartigan_refine(points, n, dim, k, run);
  return run;
}

}  // namespace detail

/// Lloyd's algorithm from k-means++ seeds; best of `restarts` runs by final
/// objective (earliest run wins ties).
inline KmeansFit kmeans(std::span<const double> points, std::size_t dim,
                        const KmeansConfig& config) {
  config.validate();
  if (dim == 0) throw ParameterError("k-means needs dim >= 1");
  const std::size_t n = points.size() / dim;
  if (config.k > n)
    throw ParameterError("k=" + std::to_string(config.k) + " exceeds the number of points (" +
                         std::to_string(n) + ")");
  for (double x : points)
    if (!std::isfinite(x)) throw NumericError("k-means input has non-finite values");

  std::vector<double> normalized;
  if (config.normalize) {
    normalized.assign(points.begin(), points.end());
    for (std::size_t i = 0; i < n; ++i) {
      std::span<double> row(normalized.data() + i * dim, dim);
      const double norm = std::sqrt(dot(row, row));
      if (norm > 0.0)
        for (double& x : row) x /= norm;
    }
    points = normalized;
  }

  Rng rng(config.seed);
  KmeansFit fit;
  detail::LloydRun best;
  for (std::size_t r = 0; r < config.restarts; ++r) {
    detail::LloydRun run = detail::lloyd(points, n, dim, config, rng);
    fit.traces.push_back(run.trace);
    if (r == 0 || run.objective < best.objective) {
      best = std::move(run);
      fit.best_restart = r;
    }
  }
  fit.objective = best.objective;
  fit.assignment = relabel_by_first_occurrence(best.assignment);
  fit.centroids.assign(config.k * dim, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    std::copy_n(best.centroids.begin() + static_cast<std::ptrdiff_t>(best.assignment[i] * dim),
                dim, fit.centroids.begin() + static_cast<std::ptrdiff_t>(fit.assignment[i] * dim));
  return fit;
}

inline WordClustering kmeans_cluster(const EmbeddingMatrix& emb, const KmeansConfig& config,
                                     std::string corpus_tag = {}) {
  const auto& table = emb.clustering_table();
  if (config.k > emb.vocab.size())
    throw ParameterError("k=" + std::to_string(config.k) + " exceeds vocabulary size " +
                         std::to_string(emb.vocab.size()));
  KmeansFit fit = kmeans(table, emb.dim, config);
  return WordClustering(emb.vocab.words(), std::move(fit.assignment),
                        {ClusterAlgorithm::kmeans, std::move(corpus_tag)});
}

/// Sum of squared distances to centroids recomputed from the assignment.
inline double kmeans_objective(std::span<const double> points, std::size_t dim,
                               std::span<const std::size_t> assignment, std::size_t k) {
  const std::size_t n = points.size() / dim;
  std::vector<double> centroids(k * dim, 0.0);
  std::vector<std::size_t> sizes(k, 0);
  for (std::size_t i = 0; i < n; ++i) {
    ++sizes[assignment[i]];
    for (std::size_t d = 0; d < dim; ++d) centroids[assignment[i] * dim + d] += points[i * dim + d];
  }
  for (std::size_t c = 0; c < k; ++c)
    if (sizes[c] > 0)
      for (std::size_t d = 0; d < dim; ++d) centroids[c * dim + d] /= static_cast<double>(sizes[c]);
  double obj = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    obj += squared_distance(points.subspan(i * dim, dim),
                            std::span<const double>(centroids).subspan(assignment[i] * dim, dim));
  return obj;
}

inline double kmeans_objective(const EmbeddingMatrix& emb, const WordClustering& clustering) {
  std::vector<std::size_t> assignment(emb.vocab.size());
  for (std::size_t i = 0; i < emb.vocab.size(); ++i) {
    auto c = clustering.cluster_of(emb.vocab.word(i));
    if (!c) throw VocabularyError("clustering does not cover word: " + emb.vocab.word(i));
    assignment[i] = *c;
  }
  return kmeans_objective(emb.clustering_table(), emb.dim, assignment, clustering.k());
}

}  // namespace lexcluster
