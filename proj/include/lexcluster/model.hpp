#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "lexcluster/embed.hpp"
#include "lexcluster/error.hpp"
#include "lexcluster/features.hpp"

namespace lexcluster {

/// L2-regularized logistic regression:
///   f(w, b) = (1/n) sum_i log(1 + exp(-y_i (w.x_i + b))) + lambda ||w||^2
/// with y_i in {-1, +1}; the bias is not penalized.
struct TrainedModel {
  std::vector<double> weights;
  double bias = 0.0;
  double lambda = 0.0;
  std::string feature_spec_hash;
  std::size_t iterations = 0;
  double gradient_norm = 0.0;
  bool converged = false;

  std::size_t dim() const { return weights.size(); }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["weights"] = weights;
    j["bias"] = bias;
    j["lambda"] = lambda;
    j["feature_spec_hash"] = feature_spec_hash;
    j["dim"] = dim();
    j["objective"] = "mean_logloss + lambda * ||w||^2 (bias unpenalized)";
    return j;
  }

  static TrainedModel from_json(const nlohmann::json& j) {
    TrainedModel m;
    try {
      m.weights = j.at("weights").get<std::vector<double>>();
      m.bias = j.at("bias").get<double>();
      m.lambda = j.at("lambda").get<double>();
      m.feature_spec_hash = j.value("feature_spec_hash", "");
      if (j.contains("dim") && j["dim"].get<std::size_t>() != m.weights.size())
        throw SchemaError("model dim does not match its weight vector");
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(std::string("malformed model file: ") + e.what());
    }
    for (double w : m.weights)
      if (!std::isfinite(w)) throw FormatError("model has non-finite weights");
    m.converged = true;
    return m;
  }
};

struct LrOptions {
  double tolerance = 1e-8;  // on the Euclidean norm of the full gradient
  std::size_t max_iterations = 500;
  /// Optional starting point (weights then bias); zeros when empty.
  std::vector<double> initial;
  /// When set, receives the objective value at every accepted iterate.
  std::vector<double>* trace = nullptr;
};

namespace detail {

inline double softplus(double t) { return t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

inline double signed_label(int y) { return y == 1 ? 1.0 : -1.0; }

inline void check_problem(const BinaryMatrix& x, std::span<const int> y, double lambda) {
  if (x.rows() != y.size()) throw ShapeError("X and y have different row counts");
  if (x.rows() < 1) throw BoundsError("logistic regression needs at least one example");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ParameterError("lambda must be finite and > 0");
  std::size_t pos = 0;
  for (int v : y) {
    if (v != 0 && v != 1) throw ParameterError("labels must be 0 or 1");
    pos += v == 1;
  }
  if (pos == 0 || pos == y.size()) throw ClassError("logistic regression needs both classes");
}

inline void margins(const BinaryMatrix& x, std::span<const double> theta, std::vector<double>& z) {
  const std::size_t m = x.cols();
  z.resize(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double s = theta[m];
    for (auto c : x.row(i)) s += theta[c];
    z[i] = s;
  }
}

}  // namespace detail

/// Objective value at theta = (w, b) packed as weights then bias.
inline double lr_objective(const BinaryMatrix& x, std::span<const int> y,
                           std::span<const double> theta, double lambda) {
  const std::size_t m = x.cols();
  std::vector<double> z;
  detail::margins(x, theta, z);
  double loss = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) loss += detail::softplus(-detail::signed_label(y[i]) * z[i]);
  double reg = 0.0;
  for (std::size_t c = 0; c < m; ++c) reg += theta[c] * theta[c];
  return loss / static_cast<double>(z.size()) + lambda * reg;
}

/// Gradient of lr_objective, same packing as theta.
inline std::vector<double> lr_gradient(const BinaryMatrix& x, std::span<const int> y,
                                       std::span<const double> theta, double lambda) {
  const std::size_t m = x.cols();
  const double inv_n = 1.0 / static_cast<double>(x.rows());
  std::vector<double> z;
  detail::margins(x, theta, z);
  std::vector<double> g(m + 1, 0.0);
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double s = detail::signed_label(y[i]);
    const double r = -s * sigmoid(-s * z[i]) * inv_n;
    for (auto c : x.row(i)) g[c] += r;
    g[m] += r;
  }
  for (std::size_t c = 0; c < m; ++c) g[c] += 2.0 * lambda * theta[c];
  return g;
}

/// Damped Newton with conjugate-gradient inner solves and Armijo
/// backtracking, so the objective decreases at every accepted step. The
/// problem is strictly convex; the optimum does not depend on the start.
inline TrainedModel lr_train(const BinaryMatrix& x, std::span<const int> y, double lambda,
                             const LrOptions& options = {}) {
  detail::check_problem(x, y, lambda);
  const std::size_t m = x.cols();
  const std::size_t n = x.rows();
  const double inv_n = 1.0 / static_cast<double>(n);

  std::vector<double> theta(m + 1, 0.0);
  if (!options.initial.empty()) {
    if (options.initial.size() != m + 1) throw ShapeError("initial point has the wrong size");
    theta = options.initial;
  }

  std::vector<double> z, curv(n), dir(m + 1), r(m + 1), p(m + 1), hp(m + 1), trial(m + 1), xv(n);
  auto hess_vec = [&](std::span<const double> v, std::span<double> out) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = v[m];
      for (auto c : x.row(i)) s += v[c];
      xv[i] = s * curv[i];
    }
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (auto c : x.row(i)) out[c] += xv[i];
      out[m] += xv[i];
    }
    for (std::size_t c = 0; c < m; ++c) out[c] += 2.0 * lambda * v[c];
  };
  auto norm = [](std::span<const double> v) { return std::sqrt(dot(v, v)); };

  TrainedModel model;
  model.lambda = lambda;
  double f = lr_objective(x, y, theta, lambda);
  if (options.trace) options.trace->push_back(f);
  std::vector<double> g = lr_gradient(x, y, theta, lambda);
  double gnorm = norm(g);
  std::size_t iter = 0;
  // Newton-CG direction into dir; cg_tol bounds the CG residual.
  auto newton_direction = [&](double cg_tol) {
    detail::margins(x, theta, z);
    for (std::size_t i = 0; i < n; ++i) {
      const double s = sigmoid(z[i]);
      curv[i] = s * (1.0 - s) * inv_n;
    }
    // CG on H d = -g, forcing term min(0.5, ||g||) for quadratic local rate.
    std::fill(dir.begin(), dir.end(), 0.0);
    for (std::size_t c = 0; c <= m; ++c) r[c] = -g[c];
    p = r;
    double rr = dot(r, r);
    for (std::size_t k = 0; k < 2 * (m + 1) && std::sqrt(rr) > cg_tol; ++k) {
      hess_vec(p, hp);
      const double php = dot(p, hp);
      if (!(php > 0.0)) break;
      const double alpha = rr / php;
      for (std::size_t c = 0; c <= m; ++c) {
        dir[c] += alpha * p[c];
        r[c] -= alpha * hp[c];
      }
      const double rr_new = dot(r, r);
      const double beta = rr_new / rr;
      rr = rr_new;
      for (std::size_t c = 0; c <= m; ++c) p[c] = r[c] + beta * p[c];
    }
  };
  while (gnorm > options.tolerance && iter < options.max_iterations) {
    newton_direction(std::min(0.5, gnorm) * gnorm);
    double slope = dot(g, dir);
    if (!(slope < 0.0)) {
      for (std::size_t c = 0; c <= m; ++c) dir[c] = -g[c];
      slope = -gnorm * gnorm;
    }
    double step = 1.0;
    bool accepted = false;
    double f_trial = f;
    for (int tries = 0; tries < 60; ++tries) {
      for (std::size_t c = 0; c <= m; ++c) trial[c] = theta[c] + step * dir[c];
      f_trial = lr_objective(x, y, trial, lambda);
      if (f_trial <= f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted || f_trial > f) break;
    theta.swap(trial);
    f = f_trial;
    if (options.trace) options.trace->push_back(f);
    g = lr_gradient(x, y, theta, lambda);
    gnorm = norm(g);
    ++iter;
  }
  // A gradient at the tolerance still leaves weights off by up to
  // ||g|| / (2 lambda). A couple of full Newton steps, kept only while the
  // gradient keeps shrinking, pin the optimum to rounding level.
  for (int polish = 0; polish < 2 && gnorm <= options.tolerance && gnorm > 0.0; ++polish) {
    newton_direction(1e-3 * gnorm);
    for (std::size_t c = 0; c <= m; ++c) trial[c] = theta[c] + dir[c];
    std::vector<double> g_trial = lr_gradient(x, y, trial, lambda);
    const double n_trial = norm(g_trial);
    const double f_trial = lr_objective(x, y, trial, lambda);
    if (!(n_trial < gnorm) || f_trial > f + 1e-12 * std::abs(f)) break;
    theta.swap(trial);
    g.swap(g_trial);
    gnorm = n_trial;
    f = std::min(f, f_trial);
    if (options.trace) options.trace->push_back(f);
  }
  for (double t : theta)
    if (!std::isfinite(t)) throw NumericError("logistic regression diverged to non-finite weights");
  model.weights.assign(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(m));
  model.bias = theta[m];
  model.iterations = iter;
  model.gradient_norm = gnorm;
  model.converged = gnorm <= options.tolerance;
  return model;
}

/// sigma(w.x + b) for a dense binary vector.
inline double score(const TrainedModel& model, std::span<const std::uint8_t> x) {
  if (x.size() != model.dim())
    throw ShapeError("feature vector has dimension " + std::to_string(x.size()) +
                     ", model expects " + std::to_string(model.dim()));
  double z = model.bias;
  for (std::size_t c = 0; c < x.size(); ++c)
    if (x[c]) z += model.weights[c];
  return sigmoid(z);
}

inline double score_row(const TrainedModel& model, std::span<const std::uint32_t> active) {
  double z = model.bias;
  for (auto c : active) {
    if (c >= model.dim()) throw ShapeError("feature index beyond model dimension");
    z += model.weights[c];
  }
  return sigmoid(z);
}

struct Threshold {
  double theta = 0.5;
};

/// 1 iff the score is strictly above the threshold.
inline int classify(const TrainedModel& model, std::span<const std::uint8_t> x, Threshold thr) {
  return score(model, x) > thr.theta ? 1 : 0;
}

inline const std::vector<double>& default_lambda_grid() {
  static const std::vector<double> grid{1e-3, 1e-2, 1e-1, 1.0, 10.0};
  return grid;
}

struct LambdaSelection {
  double lambda = 0.0;
  std::vector<std::pair<double, double>> mean_loss;  // (lambda, held-out log-loss)
};

struct CvOptions {
  /// 0 selects leave-one-out; otherwise k-fold with fold = index mod k.
  std::size_t folds = 0;
  LrOptions lr;
};

/// Cross-validated choice of lambda by mean held-out log-loss; ties go to
/// the larger lambda. A fold whose training part holds a single class
/// predicts that part's base rate for its held-out examples.
inline LambdaSelection loocv_select_lambda(const BinaryMatrix& x, std::span<const int> y,
                                           std::span<const double> grid,
                                           const CvOptions& options = {}) {
  const std::size_t n = x.rows();
  if (y.size() != n) throw ShapeError("X and y have different row counts");
  if (n < 2) throw BoundsError("cross-validation needs at least 2 examples");
  if (grid.empty()) throw ParameterError("lambda grid is empty");
  for (double l : grid)
    if (!(l > 0.0)) throw ParameterError("lambda grid values must be > 0");
  const std::size_t folds = options.folds == 0 ? n : std::min(options.folds, n);
  if (folds < 2) throw ParameterError("cross-validation needs at least 2 folds");

  std::vector<std::vector<std::size_t>> train_idx(folds), test_idx(folds);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t f = 0; f < folds; ++f) (i % folds == f ? test_idx[f] : train_idx[f]).push_back(i);
  std::vector<BinaryMatrix> fold_x;
  std::vector<std::vector<int>> fold_y;
  for (std::size_t f = 0; f < folds; ++f) {
    fold_x.push_back(x.select_rows(train_idx[f]));
    std::vector<int> yy;
    for (std::size_t i : train_idx[f]) yy.push_back(y[i]);
    fold_y.push_back(std::move(yy));
  }

  std::size_t pos_total = 0;
  for (int v : y) pos_total += v == 1;
  const bool full_both = pos_total > 0 && pos_total < n;

  LambdaSelection sel;
  double best = std::numeric_limits<double>::infinity();
  for (double lambda : grid) {
    LrOptions lr = options.lr;
    lr.trace = nullptr;
    if (full_both) {
      TrainedModel full = lr_train(x, y, lambda, lr);
      lr.initial = full.weights;
      lr.initial.push_back(full.bias);
    }
    double total = 0.0;
    for (std::size_t f = 0; f < folds; ++f) {
      std::size_t pos = 0;
      for (int v : fold_y[f]) pos += v == 1;
      const bool single = pos == 0 || pos == fold_y[f].size();
      TrainedModel model;
      if (!single) model = lr_train(fold_x[f], fold_y[f], lambda, lr);
      const double base = static_cast<double>(pos) / static_cast<double>(fold_y[f].size());
      for (std::size_t i : test_idx[f]) {
        if (single) {
          const double p = std::clamp(y[i] == 1 ? base : 1.0 - base, 1e-15, 1.0);
          total += -std::log(p);
        } else {
          double zi = model.bias;
          for (auto c : x.row(i)) zi += model.weights[c];
          total += detail::softplus(-detail::signed_label(y[i]) * zi);
        }
      }
    }
    const double mean = total / static_cast<double>(n);
    sel.mean_loss.emplace_back(lambda, mean);
    if (mean < best || (mean == best && lambda > sel.lambda)) {
      best = mean;
      sel.lambda = lambda;
    }
  }
  return sel;
}

}  // namespace lexcluster
