#pragma once

#include "lmc/point_cloud.hpp"

#include <algorithm>
#include <filesystem>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace lmc::test {

inline RowMatrix random_points(Index n, int dim, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  RowMatrix p(n, dim);
  for (Index i = 0; i < n; ++i)
    for (int c = 0; c < dim; ++c) p(i, c) = u(rng);
  return p;
}

inline RowMatrix line_points(const std::vector<double>& xs) {
  RowMatrix p(static_cast<Index>(xs.size()), 1);
  for (std::size_t i = 0; i < xs.size(); ++i) p(static_cast<Index>(i), 0) = xs[i];
  return p;
}

/// O(n^2) neighbor scan, ties by lower index.
inline std::vector<std::pair<double, Index>> brute_knn(const RowMatrix& p, Index i, Index k) {
  std::vector<std::pair<double, Index>> all;
  for (Index j = 0; j < p.rows(); ++j)
    if (j != i) all.emplace_back((p.row(i) - p.row(j)).squaredNorm(), j);
  std::sort(all.begin(), all.end());
  all.resize(static_cast<std::size_t>(k));
  return all;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("lmc_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace lmc::test
