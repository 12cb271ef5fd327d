/* SPDX-License-Identifier: Apache-2.0 */
// Shared helpers for the unit tests.
#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "sgdiff/graph.hpp"

namespace sgdiff::test {

inline Coords random_coords(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Coords x(n, 3);
  for (int r = 0; r < n; ++r)
    for (int k = 0; k < 3; ++k) x(r, k) = nd(rng);
  return x;
}

/// Random simple graph: each pair present with probability p, labels uniform in 1..labels.
inline SpatialGraph random_graph(int n, double p, int labels, std::mt19937_64& rng) {
  std::bernoulli_distribution keep(p);
  std::uniform_int_distribution<int> lab(1, labels);
  SpatialGraph g(random_coords(n, rng));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (keep(rng)) g.add_edge(i, j, lab(rng));
  return g;
}

inline SpatialGraph path_graph(const std::vector<Label>& labels) {
  const int n = static_cast<int>(labels.size()) + 1;
  SpatialGraph g(Coords::Zero(n, 3));
  for (int k = 0; k + 1 < n; ++k) g.add_edge(k, k + 1, labels[static_cast<std::size_t>(k)]);
  return g;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("sgdiff_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace sgdiff::test
