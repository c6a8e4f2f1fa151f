#pragma once

#include <random>
#include <tuple>
#include <vector>

#include "hosc/graph.hpp"

namespace hosc::test {

/// G(n, p) with unit weights, deterministic per seed.
inline SparseGraph random_graph(int n, double p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::tuple<int, int, double>> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (u(rng) < p) edges.emplace_back(i, j, 1.0);
  return build_graph(edges, n);
}

inline SparseGraph complete_graph(int n) {
  std::vector<std::tuple<int, int, double>> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) edges.emplace_back(i, j, 1.0);
  return build_graph(edges, n);
}

inline SparseGraph path_graph(int n) {
  std::vector<std::tuple<int, int, double>> edges;
  for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1, 1.0);
  return build_graph(edges, n);
}

/// `count` disjoint triangles: nodes {3c, 3c+1, 3c+2} form triangle c.
inline SparseGraph disjoint_triangles(int count) {
  std::vector<std::tuple<int, int, double>> edges;
  for (int c = 0; c < count; ++c) {
    int b = 3 * c;
    edges.emplace_back(b, b + 1, 1.0);
    edges.emplace_back(b + 1, b + 2, 1.0);
    edges.emplace_back(b, b + 2, 1.0);
  }
  return build_graph(edges, 3 * count);
}

inline Matrix random_row_stochastic(int n, int k, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(1e-3, 1.0);
  Matrix s(n, k);
  for (int i = 0; i < n; ++i) {
    double total = 0.0;
    for (int j = 0; j < k; ++j) {
      s(i, j) = u(rng);
      total += s(i, j);
    }
    s.row(i) /= total;
  }
  return s;
}

inline Matrix one_hot(const std::vector<int>& labels, int k) {
  Matrix s = Matrix::Zero(static_cast<int>(labels.size()), k);
  for (std::size_t i = 0; i < labels.size(); ++i) s(static_cast<int>(i), labels[i]) = 1.0;
  return s;
}

}  // namespace hosc::test
