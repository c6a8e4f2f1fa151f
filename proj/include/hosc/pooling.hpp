#pragma once

#include <cmath>
#include <random>
#include <stdexcept>

#include "hosc/autodiff.hpp"
#include "hosc/graph.hpp"

namespace hosc {

/// Coarsened graph produced by one pooling step. All tensors stay on the
/// tape, so gradients flow through S and X.
struct PooledGraph {
  ad::Tensor adj_pool;       // K x K, self-loops removed, symmetrically normalised
  ad::Tensor adj_pool_raw;   // K x K, S^T A S before diagonal removal
  ad::Tensor x_pool;         // K x F
  ad::Tensor s_used;         // N x K
};

namespace detail {

/// Zeroes the diagonal of a square tensor (constant-mask hadamard).
inline ad::Tensor drop_diagonal(const ad::Tensor& a) {
  int k = a.rows();
  Matrix mask = Matrix::Ones(k, k) - Matrix::Identity(k, k);
  return ad::elementwise_mul(a, a.tape->constant(mask));
}

/// Differentiable D^{-1/2} A D^{-1/2} for a dense non-negative adjacency.
/// Degrees are taken from the forward value; isolated rows stay zero. Degrees
/// below `kDegreeFloor` count as isolated: a near-empty cluster would
/// otherwise produce a 1/sqrt(d) scale of astronomical magnitude, and since
/// the scale also multiplies the backward pass it blows up the gradients long
/// before the forward value looks wrong.
inline constexpr double kDegreeFloor = 1e-8;

inline ad::Tensor sym_normalize_dense(const ad::Tensor& a) {
  int k = a.rows();
  Vector d = a.value().rowwise().sum();
  Matrix scale = Matrix::Zero(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      if (d[i] > kDegreeFloor && d[j] > kDegreeFloor)
        scale(i, j) = 1.0 / std::sqrt(d[i] * d[j]);
    }
  return ad::elementwise_mul(a, a.tape->constant(scale));
}

}  // namespace detail

/// A_pool = S^T A S (diagonal zeroed, then symmetrically normalised);
/// X_pool = S^T X. `adj` is the original sparse adjacency as a CSR constant.
inline PooledGraph coarsen(const CsrMatrix& adj, const ad::Tensor& x, const ad::Tensor& s) {
  ad::Tensor st = ad::transpose(s);
  ad::Tensor a_raw = ad::matmul(st, ad::sparse_dense_matmul(adj, s));
  ad::Tensor a_nodiag = detail::drop_diagonal(a_raw);
  PooledGraph pg;
  pg.adj_pool_raw = a_raw;
  pg.adj_pool = detail::sym_normalize_dense(a_nodiag);
  pg.x_pool = ad::matmul(st, x);
  pg.s_used = s;
  return pg;
}

/// One-hot assignment of each node to a uniformly random cluster.
inline Matrix random_assignment(int n, int k, std::uint64_t seed) {
  if (k > n) throw std::invalid_argument("random_assignment: k exceeds n");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> uni(0, k - 1);
  Matrix s = Matrix::Zero(n, k);
  for (int i = 0; i < n; ++i) s(i, uni(rng)) = 1.0;
  return s;
}

/// Pooled cluster count: max(1, floor(n * ratio)).
inline int cluster_count(int n, double ratio) {
  if (ratio <= 0.0 || ratio >= 1.0)
    throw std::invalid_argument("cluster_count: ratio must be in (0, 1)");
  return std::max(1, static_cast<int>(n * ratio));
}

}  // namespace hosc
