#include <gtest/gtest.h>

#include "lexcluster/model.hpp"
#include "oracles.hpp"

using namespace lexcluster;

namespace {

struct Problem {
  BinaryMatrix x;
  std::vector<int> y;
  std::vector<std::vector<double>> dense;
};

Problem random_problem(std::size_t n, std::size_t m, Rng& rng, double density = 0.3) {
  Problem p{BinaryMatrix(m), {}, {}};
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::uint8_t> row(m);
    std::vector<double> d(m);
    for (std::size_t c = 0; c < m; ++c) {
      row[c] = rng.bernoulli(density) ? 1 : 0;
      d[c] = row[c];
    }
    std::vector<std::uint32_t> active;
    for (std::size_t c = 0; c < m; ++c)
      if (row[c]) active.push_back(static_cast<std::uint32_t>(c));
    p.x.add_row(active);
    p.dense.push_back(d);
    p.y.push_back(rng.bernoulli(0.4) ? 1 : 0);
  }
  p.y[0] = 1;
  p.y[1] = 0;
  return p;
}

double norm(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

TrainedModel model_of(std::vector<double> w, double b) {
  TrainedModel m;
  m.weights = std::move(w);
  m.bias = b;
  m.lambda = 1;
  return m;
}

}  // namespace

TEST(LrGradient, MatchesCentralDifferences) {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.below(49), m = 1 + rng.below(20);
    Problem p = random_problem(n, m, rng);
    const double lambda = std::exp(rng.uniform(std::log(1e-3), std::log(10.0)));
    std::vector<double> theta(m + 1);
    for (double& t : theta) t = rng.uniform(-2.0, 2.0);
    auto f = [&](const std::vector<double>& t) { return lr_objective(p.x, p.y, t, lambda); };
    auto fd = oracle::central_difference(f, theta, 1e-6);
    EXPECT_LT(oracle::relative_error(lr_gradient(p.x, p.y, theta, lambda), fd), 1e-5) << "trial " << trial;
  }
}

TEST(LrTrain, SingleClassRejected) {
  BinaryMatrix x = BinaryMatrix::from_dense({{1}, {0}}, 1);
  std::vector<int> y{1, 1};
  EXPECT_THROW(lr_train(x, y, 1.0), ClassError);
  std::vector<int> y2{1, 0};
  EXPECT_THROW(lr_train(x, y2, 0.0), ParameterError);
  std::vector<int> y3{1};
  EXPECT_THROW(lr_train(x, y3, 1.0), ShapeError);
}

TEST(LrTrain, SeparableOneDimensionShrinksWithLambda) {
  BinaryMatrix x = BinaryMatrix::from_dense({{0}, {1}}, 1);
  std::vector<int> y{0, 1};
  double previous = std::numeric_limits<double>::infinity();
  for (double lambda : {0.1, 1.0, 10.0}) {
    TrainedModel m = lr_train(x, y, lambda);
    EXPECT_TRUE(m.converged);
    EXPECT_GT(m.weights[0], 0.0);
    EXPECT_LT(m.weights[0], previous);
    previous = m.weights[0];
  }
}

TEST(LrTrain, MatchesDenseNewtonOracle) {
  Rng rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    Problem p = random_problem(5 + rng.below(40), 1 + rng.below(10), rng);
    const double lambda = std::exp(rng.uniform(std::log(1e-3), std::log(10.0)));
    TrainedModel m = lr_train(p.x, p.y, lambda);
    auto theta = oracle::dense_logreg(p.dense, p.y, lambda);
    for (std::size_t c = 0; c < m.weights.size(); ++c) EXPECT_NEAR(m.weights[c], theta[c], 1e-7);
    EXPECT_NEAR(m.bias, theta.back(), 1e-7);
  }
}

TEST(LrTrain, ObjectiveDecreasesEveryIteration) {
  Rng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    Problem p = random_problem(30, 8, rng);
    std::vector<double> trace;
    LrOptions opts;
    opts.trace = &trace;
    opts.initial.assign(9, 0.0);
    for (double& t : opts.initial) t = rng.uniform(-5.0, 5.0);
    TrainedModel m = lr_train(p.x, p.y, 1e-3, opts);
    EXPECT_TRUE(m.converged);
    EXPECT_LE(m.gradient_norm, 1e-8);
    for (std::size_t i = 1; i < trace.size(); ++i) EXPECT_LE(trace[i], trace[i - 1]);
  }
}

TEST(LrTrain, IndependentOfInitialization) {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    Problem p = random_problem(2 + rng.below(49), 1 + rng.below(20), rng);
    const double lambda = std::exp(rng.uniform(std::log(1e-3), std::log(10.0)));
    LrOptions a, b;
    b.initial.resize(p.x.cols() + 1);
    for (double& t : b.initial) t = rng.uniform(-3.0, 3.0);
    TrainedModel ma = lr_train(p.x, p.y, lambda, a), mb = lr_train(p.x, p.y, lambda, b);
    for (std::size_t c = 0; c < ma.weights.size(); ++c) EXPECT_NEAR(ma.weights[c], mb.weights[c], 1e-8);
    EXPECT_NEAR(ma.bias, mb.bias, 1e-8);
  }
}

TEST(LrTrain, WeightNormNonIncreasingInLambda) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    Problem p = random_problem(40, 10, rng);
    double previous = std::numeric_limits<double>::infinity();
    for (double lambda : default_lambda_grid()) {
      const double w = norm(lr_train(p.x, p.y, lambda).weights);
      EXPECT_LE(w, previous + 1e-12);
      previous = w;
    }
  }
}

TEST(Score, Examples) {
  EXPECT_DOUBLE_EQ(score(model_of({0, 0}, 0), std::vector<std::uint8_t>{1, 0}), 0.5);
  EXPECT_NEAR(score(model_of({std::log(3.0)}, 0), std::vector<std::uint8_t>{1}), 0.75, 1e-15);
  EXPECT_THROW(score(model_of({1}, 0), std::vector<std::uint8_t>{1, 1}), ShapeError);
  const std::vector<std::uint32_t> bad{3};
  EXPECT_THROW(score_row(model_of({1}, 0), bad), ShapeError);
}

TEST(Score, MonotoneAndInOpenUnitInterval) {
  Rng rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> w(6);
    for (double& v : w) v = rng.uniform(-10.0, 10.0);
    TrainedModel m = model_of(w, rng.uniform(-5.0, 5.0));
    std::vector<std::uint8_t> x(6);
    for (auto& b : x) b = rng.bernoulli(0.5);
    const double s = score(m, x);
    EXPECT_GT(s, 0.0);
    EXPECT_LT(s, 1.0);
    for (std::size_t c = 0; c < 6; ++c)
      if (!x[c] && w[c] > 0) {
        auto more = x;
        more[c] = 1;
        EXPECT_GE(score(m, more), s);
      }
  }
}

TEST(Classify, StrictThreshold) {
  TrainedModel m = model_of({std::log(0.7 / 0.3)}, 0);
  EXPECT_EQ(classify(m, std::vector<std::uint8_t>{1}, {0.5}), 1);
  EXPECT_EQ(classify(m, std::vector<std::uint8_t>{0}, {0.5}), 0);  // score exactly 0.5
  Rng rng(7);
  for (int i = 0; i < 100; ++i) {
    TrainedModel r = model_of({rng.uniform(-20.0, 20.0)}, rng.uniform(-20.0, 20.0));
    EXPECT_EQ(classify(r, std::vector<std::uint8_t>{static_cast<std::uint8_t>(i % 2)}, {1.0}), 0);
  }
}

TEST(Classify, InvariantUnderMonotoneTransform) {
  // Comparing logit(score) with logit(theta) gives the same decisions.
  Rng rng(8);
  for (int i = 0; i < 200; ++i) {
    TrainedModel m = model_of({rng.uniform(-4.0, 4.0)}, rng.uniform(-4.0, 4.0));
    const double theta = rng.uniform(0.01, 0.99);
    std::vector<std::uint8_t> x{static_cast<std::uint8_t>(rng.below(2))};
    const double s = score(m, x);
    const int transformed = std::log(s / (1 - s)) > std::log(theta / (1 - theta)) ? 1 : 0;
    EXPECT_EQ(classify(m, x, {theta}), transformed);
  }
}

TEST(Loocv, SingleValueGrid) {
  Rng rng(9);
  Problem p = random_problem(10, 3, rng);
  std::vector<double> grid{0.37};
  EXPECT_EQ(loocv_select_lambda(p.x, p.y, grid).lambda, 0.37);
}

TEST(Loocv, MatchesFromScratchReimplementation) {
  const std::vector<std::vector<double>> dense{{1, 0}, {1, 1}, {0, 1}, {0, 0}};
  const std::vector<int> y{1, 1, 0, 0};
  BinaryMatrix x = BinaryMatrix::from_dense({{1, 0}, {1, 1}, {0, 1}, {0, 0}}, 2);
  std::vector<double> grid{0.01, 1.0};
  LambdaSelection sel = loocv_select_lambda(x, y, grid);
  auto expected = oracle::loocv_losses(dense, y, grid);
  ASSERT_EQ(sel.mean_loss.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) EXPECT_NEAR(sel.mean_loss[i].second, expected[i], 1e-8);
  EXPECT_EQ(sel.lambda, expected[0] < expected[1] ? 0.01 : 1.0);
}

TEST(Loocv, RandomProblemsMatchReimplementation) {
  Rng rng(10);
  for (int trial = 0; trial < 10; ++trial) {
    Problem p = random_problem(6 + rng.below(10), 1 + rng.below(4), rng);
    std::vector<double> grid(default_lambda_grid());
    LambdaSelection sel = loocv_select_lambda(p.x, p.y, grid);
    auto expected = oracle::loocv_losses(p.dense, p.y, grid);
    std::size_t best = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      EXPECT_NEAR(sel.mean_loss[i].second, expected[i], 1e-7);
      if (expected[i] <= expected[best]) best = i;
    }
    EXPECT_EQ(sel.lambda, grid[best]);
  }
}

TEST(Loocv, SingleClassRemainderUsesBaseRate) {
  // Holding out the lone positive leaves only negatives: that fold predicts
  // p(pos) = 0 and pays the clipped log-loss.
  BinaryMatrix x = BinaryMatrix::from_dense({{1}, {0}, {0}, {1}}, 1);
  std::vector<int> y{1, 0, 0, 0};
  std::vector<double> grid{1.0};
  LambdaSelection sel = loocv_select_lambda(x, y, grid);
  auto expected = oracle::loocv_losses({{1}, {0}, {0}, {1}}, y, grid);
  EXPECT_NEAR(sel.mean_loss[0].second, expected[0], 1e-8);
  EXPECT_GT(sel.mean_loss[0].second, -std::log(1e-15) / 4);
}

TEST(Loocv, DuplicateGridEntriesAndTies) {
  Rng rng(11);
  Problem p = random_problem(12, 3, rng);
  std::vector<double> grid{0.1, 0.1, 1.0};
  LambdaSelection sel = loocv_select_lambda(p.x, p.y, grid);
  EXPECT_EQ(sel.mean_loss[0].second, sel.mean_loss[1].second);
  // All-zero features make every lambda equivalent; ties go to the larger.
  BinaryMatrix zero = BinaryMatrix::from_dense({{0}, {0}, {0}, {0}}, 1);
  std::vector<int> y{1, 0, 1, 0};
  std::vector<double> grid2{0.01, 10.0, 1.0};
  EXPECT_EQ(loocv_select_lambda(zero, y, grid2).lambda, 10.0);
}

TEST(Loocv, KFoldWithNFoldsEqualsLeaveOneOut) {
  Rng rng(12);
  Problem p = random_problem(15, 4, rng);
  std::vector<double> grid(default_lambda_grid());
  CvOptions kfold;
  kfold.folds = 15;
  auto a = loocv_select_lambda(p.x, p.y, grid);
  auto b = loocv_select_lambda(p.x, p.y, grid, kfold);
  EXPECT_EQ(a.lambda, b.lambda);
  for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_NEAR(a.mean_loss[i].second, b.mean_loss[i].second, 1e-12);
  kfold.folds = 3;
  EXPECT_EQ(loocv_select_lambda(p.x, p.y, grid, kfold).mean_loss.size(), grid.size());
}

TEST(Loocv, Errors) {
  BinaryMatrix one = BinaryMatrix::from_dense({{1}}, 1);
  std::vector<int> y{1};
  std::vector<double> grid{1.0};
  EXPECT_THROW(loocv_select_lambda(one, y, grid), BoundsError);
  BinaryMatrix two = BinaryMatrix::from_dense({{1}, {0}}, 1);
  std::vector<int> y2{1, 0};
  EXPECT_THROW(loocv_select_lambda(two, y2, std::vector<double>{}), ParameterError);
  EXPECT_THROW(loocv_select_lambda(two, y2, std::vector<double>{-1.0}), ParameterError);
}

TEST(ModelFile, JsonRoundTrip) {
  TrainedModel m = model_of({0.25, -1.5}, 0.125);
  m.feature_spec_hash = "abc";
  TrainedModel back = TrainedModel::from_json(nlohmann::json::parse(m.to_json().dump()));
  EXPECT_EQ(back.weights, m.weights);
  EXPECT_EQ(back.bias, m.bias);
  EXPECT_EQ(back.feature_spec_hash, "abc");
  EXPECT_THROW(TrainedModel::from_json(nlohmann::json{{"bias", 1}}), SchemaError);
  EXPECT_THROW(TrainedModel::from_json(nlohmann::json{{"weights", {1.0}}, {"bias", 0.0}, {"lambda", 1.0}, {"dim", 3}}),
               SchemaError);
}
