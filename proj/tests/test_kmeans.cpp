#include <gtest/gtest.h>

#include <set>

#include "lexcluster/kmeans.hpp"
#include "oracles.hpp"

using namespace lexcluster;

namespace {

EmbeddingMatrix matrix_of(const std::vector<std::vector<double>>& rows) {
  EmbeddingMatrix e;
  e.dim = rows.empty() ? 0 : rows[0].size();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    e.vocab.push_back("w" + std::to_string(i), 1);
    e.input.insert(e.input.end(), rows[i].begin(), rows[i].end());
  }
  return e;
}

std::vector<double> flatten(const std::vector<std::vector<double>>& rows) {
  std::vector<double> out;
  for (const auto& r : rows) out.insert(out.end(), r.begin(), r.end());
  return out;
}

KmeansConfig config(std::size_t k, std::uint64_t seed = 0) {
  KmeansConfig c;
  c.k = k;
  c.seed = seed;
  return c;
}

}  // namespace

TEST(Kmeans, KEqualsVocabularyGivesSingletons) {
  const std::vector<std::vector<double>> pts{{0, 1}, {3, 4}, {-2, 7}, {5, 5}, {1, 1}};
  KmeansFit fit = kmeans(flatten(pts), 2, config(5));
  EXPECT_EQ(fit.objective, 0.0);
  EXPECT_EQ(std::set<std::size_t>(fit.assignment.begin(), fit.assignment.end()).size(), 5u);
}

TEST(Kmeans, FourPointExample) {
  const std::vector<std::vector<double>> pts{{0, 0}, {0, 1}, {10, 10}, {10, 11}};
  EXPECT_DOUBLE_EQ(oracle::best_partition_cost(pts, 2), 1.0);
  WordClustering c = kmeans_cluster(matrix_of(pts), config(2, 3));
  EXPECT_EQ(c.ids(), (std::vector<std::size_t>{0, 0, 1, 1}));
  EXPECT_DOUBLE_EQ(kmeans_objective(matrix_of(pts), c), 1.0);
  EXPECT_EQ(c.provenance().algorithm, ClusterAlgorithm::kmeans);
}

TEST(Kmeans, SingleClusterCentroidIsMean) {
  const std::vector<std::vector<double>> pts{{1, 2}, {3, 6}, {5, 1}};
  KmeansFit fit = kmeans(flatten(pts), 2, config(1));
  EXPECT_DOUBLE_EQ(fit.centroids[0], 3.0);
  EXPECT_DOUBLE_EQ(fit.centroids[1], 3.0);
  EXPECT_DOUBLE_EQ(fit.objective, oracle::partition_cost(pts, {0, 0, 0}, 1));
}

TEST(KmeansObjective, Examples) {
  EmbeddingMatrix e = matrix_of({{0, 0}, {2, 0}});
  EXPECT_DOUBLE_EQ(kmeans_objective(e, WordClustering({"w0", "w1"}, {0, 0})), 2.0);
  EXPECT_DOUBLE_EQ(kmeans_objective(e, WordClustering({"w0", "w1"}, {0, 1})), 0.0);
  EXPECT_THROW(kmeans_objective(e, WordClustering({"w0"}, {0})), VocabularyError);
}

TEST(KmeansObjective, UsesOutputTableWhenPresent) {
  EmbeddingMatrix e = matrix_of({{0, 0}, {2, 0}});
  e.output = {0, 0, 4, 0};
  EXPECT_DOUBLE_EQ(kmeans_objective(e, WordClustering({"w0", "w1"}, {0, 0})), 8.0);
}

TEST(Kmeans, MatchesExhaustiveOptimumOnTinyInstances) {
  Rng rng(42);
  int matched = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 3 + rng.below(6);
    const int k = 1 + static_cast<int>(rng.below(3));
    std::vector<std::vector<double>> pts(n, std::vector<double>(2));
    for (auto& p : pts)
      for (double& x : p) x = rng.uniform(-5.0, 5.0);
    KmeansFit fit = kmeans(flatten(pts), 2, config(static_cast<std::size_t>(k), 1000 + trial));
    const double best = oracle::best_partition_cost(pts, k);
    if (fit.objective <= best + 1e-9 * std::max(1.0, best)) ++matched;
    for (const auto& trace : fit.traces)
      for (std::size_t t = 1; t < trace.size(); ++t) EXPECT_LE(trace[t], trace[t - 1] + 1e-12);
  }
  EXPECT_GE(matched, 95);
}

TEST(Kmeans, ObjectiveNeverIncreasesOnLargerData) {
  Rng rng(7);
  std::vector<double> pts(300 * 5);
  for (double& x : pts) x = rng.uniform(-1.0, 1.0);
  KmeansFit fit = kmeans(pts, 5, config(12, 5));
  for (const auto& trace : fit.traces) {
    ASSERT_GE(trace.size(), 2u);
    for (std::size_t t = 1; t < trace.size(); ++t) EXPECT_LE(trace[t], trace[t - 1] + 1e-12);
  }
  EXPECT_NEAR(fit.objective, kmeans_objective(pts, 5, fit.assignment, 12), 1e-9);
}

TEST(Kmeans, RepairKeepsClustersDense) {
  // Identical points leave all but one seed without members.
  const std::vector<std::vector<double>> same(6, std::vector<double>{1.0, 1.0});
  KmeansFit fit = kmeans(flatten(same), 2, config(3));
  EXPECT_EQ(std::set<std::size_t>(fit.assignment.begin(), fit.assignment.end()).size(), 3u);
  EXPECT_EQ(fit.objective, 0.0);
  // Duplicated clumps with more clusters than distinct locations.
  std::vector<std::vector<double>> clumps;
  for (int i = 0; i < 4; ++i) {
    clumps.push_back({0, 0});
    clumps.push_back({5, 5});
  }
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    KmeansFit f = kmeans(flatten(clumps), 2, config(5, seed));
    EXPECT_EQ(std::set<std::size_t>(f.assignment.begin(), f.assignment.end()).size(), 5u);
  }
}

TEST(Kmeans, AssignmentIdsFollowFirstOccurrence) {
  Rng rng(1);
  std::vector<double> pts(40 * 3);
  for (double& x : pts) x = rng.uniform(-1.0, 1.0);
  KmeansFit fit = kmeans(pts, 3, config(6, 2));
  std::size_t next = 0;
  for (auto id : fit.assignment) {
    EXPECT_LE(id, next);
    if (id == next) ++next;
  }
  EXPECT_EQ(next, 6u);
}

TEST(Kmeans, DeterministicPerSeed) {
  Rng rng(3);
  std::vector<double> pts(100 * 4);
  for (double& x : pts) x = rng.uniform(-1.0, 1.0);
  KmeansFit a = kmeans(pts, 4, config(7, 11));
  KmeansFit b = kmeans(pts, 4, config(7, 11));
  EXPECT_EQ(a.assignment, b.assignment);
  EXPECT_EQ(a.centroids, b.centroids);
  EXPECT_EQ(a.traces, b.traces);
}

TEST(Kmeans, NormalizeClustersByDirection) {
  const std::vector<std::vector<double>> pts{{1, 0}, {10, 0.5}, {0, 1}, {0.2, 8}};
  KmeansConfig c = config(2, 1);
  c.normalize = true;
  WordClustering w = kmeans_cluster(matrix_of(pts), c);
  EXPECT_EQ(w.ids(), (std::vector<std::size_t>{0, 0, 1, 1}));
}

TEST(Kmeans, Errors) {
  EmbeddingMatrix e = matrix_of({{0, 0}, {1, 1}});
  EXPECT_THROW(kmeans_cluster(e, config(3)), ParameterError);
  EXPECT_THROW(kmeans_cluster(e, config(0)), ParameterError);
  KmeansConfig bad = config(1);
  bad.restarts = 0;
  EXPECT_THROW(kmeans_cluster(e, bad), ParameterError);
  e.input[0] = std::nan("");
  EXPECT_THROW(kmeans_cluster(e, config(1)), NumericError);
}

TEST(Kmeans, RefinementNeverWorsensTheLloydResult) {
  Rng rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> pts(30 * 2);
    for (double& x : pts) x = rng.uniform(-3.0, 3.0);
    KmeansConfig plain = config(4, trial);
    plain.refine = false;
    KmeansConfig refined = config(4, trial);
    const KmeansFit a = kmeans(pts, 2, plain);
    const KmeansFit b = kmeans(pts, 2, refined);
    EXPECT_LE(b.objective, a.objective + 1e-12);
    for (const auto& trace : a.traces)
      for (std::size_t t = 1; t < trace.size(); ++t) EXPECT_LE(trace[t], trace[t - 1] + 1e-12);
  }
}
