#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <vector>

#include "lexcluster/error.hpp"

namespace lexcluster {

/// Rank-based (Mann-Whitney) ROC AUC with midranks for ties:
/// (concordant pairs + 0.5 * tied pairs) / (n_pos * n_neg).
///
/// Twice the U statistic is accumulated as an integer, so the result is the
/// exact ratio rounded once.
inline double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw ShapeError("auc: scores and labels differ in length");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::uint64_t n_pos = 0;
  for (int l : labels) n_pos += l == 1;
  const std::uint64_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw ClassError("auc needs both classes");

  // Sum of doubled midranks of the positives; ranks are 1-based.
  std::uint64_t rank_sum2 = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const std::uint64_t midrank2 = (i + 1) + j;  // (i+1) + j == 2 * average rank
    for (std::size_t k = i; k < j; ++k)
      if (labels[order[k]] == 1) rank_sum2 += midrank2;
    i = j;
  }
  const std::uint64_t u2 = rank_sum2 - n_pos * (n_pos + 1);
  return static_cast<double>(u2) / static_cast<double>(2 * n_pos * n_neg);
}

/// Adjusted Rand index between two flat labelings of the same items.
inline double adjusted_rand_index(std::span<const std::size_t> a, std::span<const std::size_t> b) {
  if (a.size() != b.size()) throw ShapeError("ARI: labelings differ in length");
  const std::size_t n = a.size();
  if (n < 2) return 1.0;
  std::map<std::pair<std::size_t, std::size_t>, std::uint64_t> joint;
  std::map<std::size_t, std::uint64_t> ra, rb;
  for (std::size_t i = 0; i < n; ++i) {
    ++joint[{a[i], b[i]}];
    ++ra[a[i]];
    ++rb[b[i]];
  }
  auto choose2 = [](std::uint64_t m) { return static_cast<double>(m) * static_cast<double>(m - 1) / 2.0; };
  double index = 0.0, sa = 0.0, sb = 0.0;
  for (auto& [_, c] : joint) index += choose2(c);
  for (auto& [_, c] : ra) sa += choose2(c);
  for (auto& [_, c] : rb) sb += choose2(c);
  const double expected = sa * sb / choose2(n);
  const double max_index = 0.5 * (sa + sb);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

}  // namespace lexcluster
