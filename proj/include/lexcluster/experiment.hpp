#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "lexcluster/brown.hpp"
#include "lexcluster/corpus.hpp"
#include "lexcluster/embed.hpp"
#include "lexcluster/error.hpp"
#include "lexcluster/features.hpp"
#include "lexcluster/io.hpp"
#include "lexcluster/kmeans.hpp"
#include "lexcluster/metrics.hpp"
#include "lexcluster/model.hpp"

namespace lexcluster {

enum class SchemeKind {
  bow,     // PMI top-k words, refit on every resample
  brown,   // dendrogram cut at k
  kmeans,  // k-means at k over an embedding table
  fixed,   // a given clustering, evaluated at its own k only
};

/// A named feature pipeline. Only the artifact its kind needs is set.
struct Scheme {
  std::string name;
  SchemeKind kind = SchemeKind::bow;
  std::shared_ptr<const Dendrogram> dendrogram;
  std::shared_ptr<const EmbeddingMatrix> embeddings;
  KmeansConfig kmeans;  // k is overridden per cell
  std::shared_ptr<const WordClustering> clustering;
  std::vector<std::size_t> k_values;  // overrides the grid's list when non-empty

  bool uses_clusters() const { return kind != SchemeKind::bow; }

  static Scheme bow(std::string name) { return {std::move(name), SchemeKind::bow, {}, {}, {}, {}, {}}; }
};

struct ExperimentGrid {
  std::vector<std::size_t> train_sizes{20, 50, 100, 200, 500, 1000};
  std::vector<std::size_t> k_values{50, 100, 200, 500, 1000, 2000};
  std::vector<Scheme> schemes;
  std::size_t resamples = 10;
  std::uint64_t base_seed = 0;
  std::vector<double> lambda_grid = default_lambda_grid();
  /// Leave-one-out up to this training size; k-fold with `cv_folds` above it.
  std::size_t loo_max_size = std::numeric_limits<std::size_t>::max();
  std::size_t cv_folds = 10;

  void validate() const {
    if (train_sizes.empty()) throw ParameterError("grid train_sizes is empty");
    if (k_values.empty()) throw ParameterError("grid k_values is empty");
    if (schemes.empty()) throw ParameterError("grid has no schemes");
    if (resamples < 1) throw ParameterError("resamples must be >= 1");
    if (lambda_grid.empty()) throw ParameterError("lambda grid is empty");
  }

  const std::vector<std::size_t>& ks_for(const Scheme& s) const {
    return s.k_values.empty() ? k_values : s.k_values;
  }
};

struct ResultCell {
  std::string scheme;
  std::size_t train_size = 0;
  std::size_t k = 0;
  double mean_auc = 0.0;
  double std_auc = 0.0;  // population standard deviation over resamples
  std::vector<double> per_seed_auc;
  std::vector<std::uint64_t> seeds;  // seed actually used for each resample
  std::vector<double> lambdas;       // lambda chosen by cross-validation
  std::size_t redraws = 0;           // single-class subsamples replaced

  bool operator==(const ResultCell&) const = default;
};

using LogFn = std::function<void(const std::string&)>;

/// What a cell featurizes with: PMI top-k per resample, or a fixed spec.
struct CellFeatures {
  std::optional<FeatureSpec> spec;  // empty means bag of words refit per resample

  static CellFeatures bow() { return {}; }
  static CellFeatures clusters(std::shared_ptr<const WordClustering> c) {
    return {FeatureSpec::clusters(std::move(c))};
  }
};

inline void aggregate(ResultCell& cell) {
  const double n = static_cast<double>(cell.per_seed_auc.size());
  double sum = 0.0;
  for (double a : cell.per_seed_auc) sum += a;
  cell.mean_auc = sum / n;
  double ss = 0.0;
  for (double a : cell.per_seed_auc) ss += (a - cell.mean_auc) * (a - cell.mean_auc);
  cell.std_auc = std::sqrt(ss / n);
}

/// One (scheme, size, k) cell: `resamples` subsamples drawn with seeds
/// base_seed, base_seed+1, ...; a single-class subsample is replaced by the
/// next seed. Each resample selects lambda by cross-validation, trains, and
/// scores AUC on the fixed test set.
inline ResultCell run_cell(const Corpus& train, const Corpus& test, const CellFeatures& features,
                           const std::string& scheme_name, std::size_t size, std::size_t k,
                           std::size_t resamples, std::uint64_t base_seed,
                           const ExperimentGrid& settings = {}, const LogFn& log = {}) {
  const std::string where = "cell (scheme=" + scheme_name + ", size=" + std::to_string(size) +
                            ", k=" + std::to_string(k) + "): ";
  try {
    if (size > train.size())
      throw BoundsError("train size " + std::to_string(size) + " exceeds the training pool (" +
                        std::to_string(train.size()) + ")");
    if (!test.both_classes()) throw ClassError("test set needs both classes");
    if (resamples < 1) throw ParameterError("resamples must be >= 1");

    ResultCell cell;
    cell.scheme = scheme_name;
    cell.train_size = size;
    cell.k = k;
    const std::vector<int> y_test = labels_of(test);
    std::optional<BinaryMatrix> x_test_fixed;
    if (features.spec) x_test_fixed = featurize_corpus(test, *features.spec);

    CvOptions cv;
    cv.folds = size <= settings.loo_max_size ? 0 : settings.cv_folds;
    const std::size_t max_attempts = 1000 * resamples;
    std::uint64_t seed = base_seed;
    std::size_t attempts = 0;
    while (cell.per_seed_auc.size() < resamples) {
      if (++attempts > max_attempts)
        throw ClassError("could not draw a two-class subsample after " +
                         std::to_string(max_attempts) + " attempts");
      const std::uint64_t s = seed++;
      Corpus sub = subsample(train, size, s);
      if (!sub.both_classes()) {
        ++cell.redraws;
        if (log) log(where + "seed " + std::to_string(s) + " drew a single-class subsample; redrawing");
        continue;
      }
      FeatureSpec spec = features.spec ? *features.spec : select_top_k(pmi_scores(sub), k).spec;
      const BinaryMatrix x = featurize_corpus(sub, spec);
      const std::vector<int> y = labels_of(sub);
      const LambdaSelection sel = loocv_select_lambda(x, y, settings.lambda_grid, cv);
      const TrainedModel model = lr_train(x, y, sel.lambda, cv.lr);
      const BinaryMatrix x_test = x_test_fixed ? *x_test_fixed : featurize_corpus(test, spec);
      std::vector<double> scores(test.size());
      for (std::size_t i = 0; i < test.size(); ++i) scores[i] = score_row(model, x_test.row(i));
      cell.per_seed_auc.push_back(auc(scores, y_test));
      cell.seeds.push_back(s);
      cell.lambdas.push_back(sel.lambda);
    }
    aggregate(cell);
    return cell;
  } catch (const Error& e) {
    throw Error(e.kind(), where + e.what());
  }
}

/// Builds every cluster-scheme clustering the grid needs, keyed by (scheme
/// index, k). Fails before any training when an artifact is missing or a k
/// cannot be realized.
inline std::map<std::pair<std::size_t, std::size_t>, std::shared_ptr<const WordClustering>>
resolve_clusterings(const ExperimentGrid& grid) {
  std::map<std::pair<std::size_t, std::size_t>, std::shared_ptr<const WordClustering>> out;
  for (std::size_t si = 0; si < grid.schemes.size(); ++si) {
    const Scheme& s = grid.schemes[si];
    if (!s.uses_clusters()) continue;
    const std::vector<std::size_t> ks = s.kind == SchemeKind::fixed && s.k_values.empty() && s.clustering
                                            ? std::vector<std::size_t>{s.clustering->k()}
                                            : grid.ks_for(s);
    for (std::size_t k : ks) {
      const std::string where = "scheme " + s.name + " at k=" + std::to_string(k) + ": ";
      try {
        switch (s.kind) {
          case SchemeKind::brown:
            if (!s.dendrogram) throw ResolutionError(where + "no dendrogram");
            out[{si, k}] = std::make_shared<WordClustering>(cut(*s.dendrogram, k, s.name));
            break;
          case SchemeKind::kmeans: {
            if (!s.embeddings) throw ResolutionError(where + "no embedding matrix");
            KmeansConfig cfg = s.kmeans;
            cfg.k = k;
            out[{si, k}] = std::make_shared<WordClustering>(kmeans_cluster(*s.embeddings, cfg, s.name));
            break;
          }
          case SchemeKind::fixed:
            if (!s.clustering) throw ResolutionError(where + "no clustering");
            if (s.clustering->k() != k)
              throw ResolutionError(where + "fixed clustering has k=" + std::to_string(s.clustering->k()));
            out[{si, k}] = s.clustering;
            break;
          case SchemeKind::bow:
            break;
        }
      } catch (const ResolutionError&) {
        throw;
      } catch (const Error& e) {
        throw ResolutionError(where + e.what());
      }
    }
  }
  return out;
}

struct GridResult {
  std::vector<ResultCell> cells;
  std::vector<std::string> scheme_order;
  std::vector<std::size_t> train_sizes;
};

struct GridOptions {
  std::size_t jobs = 1;
  LogFn log;
};

/// Evaluates the full cross product; cells come back ordered by (scheme as
/// listed, size as listed, k as listed) whatever the job count.
inline GridResult run_grid(const Corpus& train, const Corpus& test, const ExperimentGrid& grid,
                           const GridOptions& options = {}) {
  grid.validate();
  auto clusterings = resolve_clusterings(grid);

  struct Job {
    std::size_t scheme;
    std::size_t size;
    std::size_t k;
  };
  std::vector<Job> jobs;
  for (std::size_t si = 0; si < grid.schemes.size(); ++si) {
    const Scheme& s = grid.schemes[si];
    for (std::size_t size : grid.train_sizes) {
      if (s.kind == SchemeKind::fixed && s.k_values.empty()) {
        jobs.push_back({si, size, s.clustering->k()});
        continue;
      }
      for (std::size_t k : grid.ks_for(s)) jobs.push_back({si, size, k});
    }
  }

  GridResult result;
  for (const auto& s : grid.schemes) result.scheme_order.push_back(s.name);
  result.train_sizes = grid.train_sizes;
  result.cells.resize(jobs.size());

  std::mutex log_mutex;
  LogFn log;
  if (options.log)
    log = [&](const std::string& msg) {
      std::lock_guard lock(log_mutex);
      options.log(msg);
    };
  auto run_job = [&](std::size_t j) {
    const Job& job = jobs[j];
    const Scheme& s = grid.schemes[job.scheme];
    CellFeatures features = s.uses_clusters() ? CellFeatures::clusters(clusterings.at({job.scheme, job.k}))
                                              : CellFeatures::bow();
    result.cells[j] = run_cell(train, test, features, s.name, job.size, job.k, grid.resamples,
                               grid.base_seed, grid, log);
  };

  const std::size_t workers = std::max<std::size_t>(1, std::min(options.jobs, jobs.size()));
  if (workers == 1) {
    for (std::size_t j = 0; j < jobs.size(); ++j) run_job(j);
    return result;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t j; (j = next++) < jobs.size();) {
        try {
          run_job(j);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = jobs.size();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return result;
}

// ---- Summary tables ------------------------------------------------------

/// Name of the best-of-cluster-schemes column.
inline constexpr const char* kBestClusterColumn = "SS*";

struct SummaryTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string csv() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ',';
        out += cells[i];
      }
      out += '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    return out;
  }

  std::string text() const {
    std::vector<std::size_t> width(header.size(), 0);
    auto measure = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) width[i] = std::max(width[i], cells[i].size());
    };
    measure(header);
    for (const auto& r : rows) measure(r);
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += "  ";
        out += std::string(width[i] - cells[i].size(), ' ');
        out += cells[i];
      }
      out += '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    return out;
  }
};

inline std::string format_fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

/// Long form: one row per resample.
inline std::string long_csv(const GridResult& r) {
  std::string out = "scheme,train_size,k,seed,auc\n";
  for (const auto& c : r.cells)
    for (std::size_t i = 0; i < c.per_seed_auc.size(); ++i)
      out += c.scheme + "," + std::to_string(c.train_size) + "," + std::to_string(c.k) + "," +
             std::to_string(c.seeds[i]) + "," + format_real(c.per_seed_auc[i]) + "\n";
  return out;
}

inline std::string aggregated_csv(const GridResult& r) {
  std::string out = "scheme,train_size,k,mean_auc,std_auc\n";
  for (const auto& c : r.cells)
    out += c.scheme + "," + std::to_string(c.train_size) + "," + std::to_string(c.k) + "," +
           format_real(c.mean_auc) + "," + format_real(c.std_auc) + "\n";
  return out;
}

/// Best cell over k for (scheme, size); ties go to the smaller k.
inline const ResultCell* best_over_k(const GridResult& r, const std::string& scheme, std::size_t size) {
  const ResultCell* best = nullptr;
  for (const auto& c : r.cells) {
    if (c.scheme != scheme || c.train_size != size) continue;
    if (!best || c.mean_auc > best->mean_auc || (c.mean_auc == best->mean_auc && c.k < best->k))
      best = &c;
  }
  return best;
}

/// Best mean AUC over k per scheme and size, plus the best cluster scheme.
inline SummaryTable best_over_k_table(const GridResult& r, const std::vector<std::string>& cluster_schemes) {
  SummaryTable t;
  t.header.push_back("train_size");
  for (const auto& s : r.scheme_order) t.header.push_back(s);
  if (!cluster_schemes.empty()) t.header.push_back(kBestClusterColumn);
  for (std::size_t size : r.train_sizes) {
    std::vector<std::string> row{std::to_string(size)};
    double best_cluster = -1.0;
    for (const auto& s : r.scheme_order) {
      const ResultCell* c = best_over_k(r, s, size);
      row.push_back(c ? format_fixed(c->mean_auc, 3) : "");
      if (c && std::find(cluster_schemes.begin(), cluster_schemes.end(), s) != cluster_schemes.end())
        best_cluster = std::max(best_cluster, c->mean_auc);
    }
    if (!cluster_schemes.empty()) row.push_back(best_cluster >= 0 ? format_fixed(best_cluster, 3) : "");
    t.rows.push_back(std::move(row));
  }
  return t;
}

/// k achieving the best mean AUC per scheme and size.
inline SummaryTable best_k_table(const GridResult& r) {
  SummaryTable t;
  t.header.push_back("train_size");
  for (const auto& s : r.scheme_order) t.header.push_back(s);
  for (std::size_t size : r.train_sizes) {
    std::vector<std::string> row{std::to_string(size)};
    for (const auto& s : r.scheme_order) {
      const ResultCell* c = best_over_k(r, s, size);
      row.push_back(c ? std::to_string(c->k) : "");
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace lexcluster
