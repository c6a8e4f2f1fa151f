#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace hosc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Compressed sparse row matrix with sorted, unique column indices per row.
struct CsrMatrix {
  int n = 0;
  std::vector<int> row_ptr;  // size n+1
  std::vector<int> col_idx;
  std::vector<double> values;

  int nnz() const { return static_cast<int>(col_idx.size()); }

  double row_sum(int i) const {
    double s = 0.0;
    for (int p = row_ptr[i]; p < row_ptr[i + 1]; ++p) s += values[p];
    return s;
  }

  double at(int i, int j) const {
    auto lo = col_idx.begin() + row_ptr[i];
    auto hi = col_idx.begin() + row_ptr[i + 1];
    auto it = std::lower_bound(lo, hi, j);
    if (it != hi && *it == j) return values[it - col_idx.begin()];
    return 0.0;
  }

  Matrix dense() const {
    Matrix m = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int p = row_ptr[i]; p < row_ptr[i + 1]; ++p)
        m(i, col_idx[p]) = values[p];
    return m;
  }

  // y = M * x for a dense right operand.
  Matrix multiply(const Matrix& x) const {
    Matrix y = Matrix::Zero(n, x.cols());
    for (int i = 0; i < n; ++i)
      for (int p = row_ptr[i]; p < row_ptr[i + 1]; ++p)
        y.row(i) += values[p] * x.row(col_idx[p]);
    return y;
  }
};

/// Build a CSR matrix from (i, j, value) triplets; duplicates are summed.
inline CsrMatrix csr_from_triplets(int n,
                                   std::vector<std::tuple<int, int, double>> triplets) {
  std::sort(triplets.begin(), triplets.end());
  CsrMatrix m;
  m.n = n;
  m.row_ptr.assign(n + 1, 0);
  for (auto& [i, j, v] : triplets) {
    (void)j;
    (void)v;
    m.row_ptr[i + 1]++;
  }
  std::vector<std::tuple<int, int, double>> merged;
  merged.reserve(triplets.size());
  for (std::size_t t = 0; t < triplets.size(); ++t) {
    if (!merged.empty() && std::get<0>(merged.back()) == std::get<0>(triplets[t]) &&
        std::get<1>(merged.back()) == std::get<1>(triplets[t])) {
      std::get<2>(merged.back()) += std::get<2>(triplets[t]);
    } else {
      merged.push_back(triplets[t]);
    }
  }
  m.row_ptr.assign(n + 1, 0);
  for (auto& [i, j, v] : merged) {
    (void)j;
    (void)v;
    m.row_ptr[i + 1]++;
  }
  for (int i = 0; i < n; ++i) m.row_ptr[i + 1] += m.row_ptr[i];
  m.col_idx.reserve(merged.size());
  m.values.reserve(merged.size());
  for (auto& [i, j, v] : merged) {
    (void)i;
    m.col_idx.push_back(j);
    m.values.push_back(v);
  }
  return m;
}

/// Undirected weighted graph in CSR form, optionally with node features and
/// labels. Adjacency is symmetric with a zero diagonal; weights are stored as
/// doubles even for unweighted graphs.
struct SparseGraph {
  int n = 0;
  CsrMatrix adj;
  std::optional<Matrix> features;          // N x F
  std::optional<std::vector<int>> node_labels;
  std::optional<int> graph_label;

  int num_edges() const { return adj.nnz() / 2; }

  double total_edge_weight() const {
    double s = 0.0;
    for (double v : adj.values) s += v;
    return s / 2.0;
  }
};

struct DegreeVector {
  Vector d;
};

/// Values of D^{-1/2} A D^{-1/2}. Rows/columns of isolated nodes are zero.
struct NormalizedAdjacency {
  CsrMatrix m;
};

/// Build a graph from an undirected edge list. Duplicate undirected edges
/// collapse by summing weights; self-loops in the input are discarded.
inline SparseGraph build_graph(const std::vector<std::tuple<int, int, double>>& edges,
                               int n,
                               std::optional<Matrix> features = std::nullopt) {
  std::map<std::pair<int, int>, double> acc;
  for (auto& [i, j, w] : edges) {
    if (i < 0 || i >= n || j < 0 || j >= n)
      throw std::out_of_range("build_graph: node index out of range");
    if (w < 0) throw std::invalid_argument("build_graph: negative edge weight");
    if (i == j) continue;
    auto key = std::minmax(i, j);
    acc[{key.first, key.second}] += w;
  }
  std::vector<std::tuple<int, int, double>> triplets;
  triplets.reserve(acc.size() * 2);
  for (auto& [ij, w] : acc) {
    triplets.emplace_back(ij.first, ij.second, w);
    triplets.emplace_back(ij.second, ij.first, w);
  }
  SparseGraph g;
  g.n = n;
  g.adj = csr_from_triplets(n, std::move(triplets));
  if (features) {
    if (features->rows() != n)
      throw std::invalid_argument("build_graph: feature row count != n");
    g.features = std::move(*features);
  }
  return g;
}

inline DegreeVector degrees(const SparseGraph& g) {
  Vector d(g.n);
  for (int i = 0; i < g.n; ++i) d[i] = g.adj.row_sum(i);
  return {std::move(d)};
}

inline NormalizedAdjacency sym_normalize(const SparseGraph& g) {
  Vector d = degrees(g).d;
  Vector dinv(g.n);
  for (int i = 0; i < g.n; ++i) dinv[i] = d[i] > 0 ? 1.0 / std::sqrt(d[i]) : 0.0;
  NormalizedAdjacency a;
  a.m = g.adj;
  for (int i = 0; i < a.m.n; ++i)
    for (int p = a.m.row_ptr[i]; p < a.m.row_ptr[i + 1]; ++p)
      a.m.values[p] *= dinv[i] * dinv[a.m.col_idx[p]];
  return a;
}

/// Drops weights: every stored edge becomes weight 1.
inline SparseGraph binarize(const SparseGraph& g) {
  SparseGraph b = g;
  std::fill(b.adj.values.begin(), b.adj.values.end(), 1.0);
  return b;
}

}  // namespace hosc
