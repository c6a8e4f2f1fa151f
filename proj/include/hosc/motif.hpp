#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "hosc/graph.hpp"

namespace hosc {

enum class Motif { Edge, Triangle, FourCycle, K4 };

inline std::string to_string(Motif m) {
  switch (m) {
    case Motif::Edge: return "edge";
    case Motif::Triangle: return "triangle";
    case Motif::FourCycle: return "four_cycle";
    case Motif::K4: return "k4";
  }
  return "?";
}

/// Motif-weighted adjacency: entry (i,j) counts motif instances containing
/// both i and j. Symmetric with zero diagonal; d_m is the row-sum vector.
struct MotifAdjacency {
  Motif motif = Motif::Triangle;
  CsrMatrix a_m;
  Vector d_m;

  bool all_zero() const {
    for (double v : a_m.values)
      if (v != 0.0) return false;
    return true;
  }
};

namespace detail {

inline MotifAdjacency finish_motif(Motif motif, int n,
                                   const std::vector<std::tuple<int, int, double>>& triplets) {
  MotifAdjacency m;
  m.motif = motif;
  m.a_m = csr_from_triplets(n, triplets);
  m.d_m = Vector(n);
  for (int i = 0; i < n; ++i) m.d_m[i] = m.a_m.row_sum(i);
  return m;
}

inline constexpr int kOracleMaxNodes = 200;

// The three perfect matchings of {a,b,c,d} define the three possible
// 4-cycle pairings; a pairing (x,y)(z,w) is a 4-cycle when the four
// non-paired edges exist and the pairs are the diagonals.
inline int four_cycle_multiplicity(const SparseGraph& g, int a, int b, int c, int d) {
  auto e = [&](int i, int j) { return g.adj.at(i, j) != 0.0; };
  int count = 0;
  // diagonal pair (a,b),(c,d): cycle a-c-b-d
  if (e(a, c) && e(c, b) && e(b, d) && e(d, a)) ++count;
  // diagonal pair (a,c),(b,d): cycle a-b-c-d
  if (e(a, b) && e(b, c) && e(c, d) && e(d, a)) ++count;
  // diagonal pair (a,d),(b,c): cycle a-b-d-c
  if (e(a, b) && e(b, d) && e(d, c) && e(c, a)) ++count;
  return count;
}

inline bool is_k4(const SparseGraph& g, int a, int b, int c, int d) {
  auto e = [&](int i, int j) { return g.adj.at(i, j) != 0.0; };
  return e(a, b) && e(a, c) && e(a, d) && e(b, c) && e(b, d) && e(c, d);
}

// Enumerates motif instances as (node tuple, multiplicity) and feeds them to
// the visitor. Works on the binarised graph.
template <typename Visitor>
void for_each_instance(const SparseGraph& g, Motif motif, Visitor&& visit) {
  const int n = g.n;
  if (motif == Motif::Triangle) {
    for (int i = 0; i < n; ++i)
      for (int p = g.adj.row_ptr[i]; p < g.adj.row_ptr[i + 1]; ++p) {
        int j = g.adj.col_idx[p];
        if (j <= i) continue;
        for (int q = g.adj.row_ptr[j]; q < g.adj.row_ptr[j + 1]; ++q) {
          int k = g.adj.col_idx[q];
          if (k <= j) continue;
          if (g.adj.at(i, k) != 0.0) visit(std::vector<int>{i, j, k}, 1);
        }
      }
    return;
  }
  if (motif == Motif::FourCycle || motif == Motif::K4) {
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b)
        for (int c = b + 1; c < n; ++c)
          for (int d = c + 1; d < n; ++d) {
            int mult = 0;
            if (motif == Motif::K4) {
              mult = is_k4(g, a, b, c, d) ? 1 : 0;
            } else {
              mult = four_cycle_multiplicity(g, a, b, c, d);
            }
            if (mult > 0) visit(std::vector<int>{a, b, c, d}, mult);
          }
    return;
  }
  throw std::invalid_argument("for_each_instance: unsupported motif");
}

}  // namespace detail

/// Fast triangle motif adjacency: A_M = (A*A) hadamard A on the binarised
/// graph, diagonal zeroed. Row-wise with a dense scratch accumulator.
inline MotifAdjacency triangle_adjacency(const SparseGraph& g_in) {
  SparseGraph g = binarize(g_in);
  const int n = g.n;
  std::vector<double> scratch(n, 0.0);
  std::vector<std::tuple<int, int, double>> triplets;
  for (int i = 0; i < n; ++i) {
    // row i of A*A restricted to the sparsity pattern of A
    for (int p = g.adj.row_ptr[i]; p < g.adj.row_ptr[i + 1]; ++p) {
      int k = g.adj.col_idx[p];
      for (int q = g.adj.row_ptr[k]; q < g.adj.row_ptr[k + 1]; ++q)
        scratch[g.adj.col_idx[q]] += 1.0;
    }
    for (int p = g.adj.row_ptr[i]; p < g.adj.row_ptr[i + 1]; ++p) {
      int j = g.adj.col_idx[p];
      if (j != i && scratch[j] != 0.0) triplets.emplace_back(i, j, scratch[j]);
    }
    for (int p = g.adj.row_ptr[i]; p < g.adj.row_ptr[i + 1]; ++p) {
      int k = g.adj.col_idx[p];
      for (int q = g.adj.row_ptr[k]; q < g.adj.row_ptr[k + 1]; ++q)
        scratch[g.adj.col_idx[q]] = 0.0;
    }
  }
  return detail::finish_motif(Motif::Triangle, n, triplets);
}

/// Exhaustive motif adjacency by instance enumeration. Oracle scale only.
inline MotifAdjacency motif_adjacency_bruteforce(const SparseGraph& g_in, Motif motif) {
  if (g_in.n > detail::kOracleMaxNodes)
    throw std::invalid_argument("motif_adjacency_bruteforce: graph exceeds oracle size limit");
  if (motif == Motif::Edge)
    throw std::invalid_argument("motif_adjacency_bruteforce: edge motif is the adjacency itself");
  SparseGraph g = binarize(g_in);
  const int n = g.n;
  Matrix acc = Matrix::Zero(n, n);
  detail::for_each_instance(g, motif, [&](const std::vector<int>& v, int mult) {
    for (std::size_t a = 0; a < v.size(); ++a)
      for (std::size_t b = a + 1; b < v.size(); ++b) {
        acc(v[a], v[b]) += mult;
        acc(v[b], v[a]) += mult;
      }
  });
  std::vector<std::tuple<int, int, double>> triplets;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (acc(i, j) != 0.0) triplets.emplace_back(i, j, acc(i, j));
  return detail::finish_motif(motif, n, triplets);
}

/// Count of motif instances crossing the partition plus per-cluster motif
/// endpoint counts, by direct enumeration.
struct MotifPartitionStats {
  long long cut_m = 0;                 // instances spanning >= 2 clusters
  std::vector<long long> vol_m;        // endpoint counts per cluster
  std::vector<long long> cut_per_cluster;  // instances with >=1 node in and out of cluster k
};

inline MotifPartitionStats motif_cut_vol(const SparseGraph& g_in, Motif motif,
                                         const std::vector<int>& partition) {
  if (g_in.n > detail::kOracleMaxNodes)
    throw std::invalid_argument("motif_cut_vol: graph exceeds oracle size limit");
  if (static_cast<int>(partition.size()) != g_in.n)
    throw std::invalid_argument("motif_cut_vol: partition size mismatch");
  SparseGraph g = binarize(g_in);
  int k = 0;
  for (int c : partition) k = std::max(k, c + 1);
  MotifPartitionStats stats;
  stats.vol_m.assign(k, 0);
  stats.cut_per_cluster.assign(k, 0);
  detail::for_each_instance(g, motif, [&](const std::vector<int>& v, int mult) {
    for (int node : v) stats.vol_m[partition[node]] += mult;
    std::vector<int> present;
    for (int node : v)
      if (std::find(present.begin(), present.end(), partition[node]) == present.end())
        present.push_back(partition[node]);
    if (present.size() > 1) {
      stats.cut_m += mult;
      for (int c : present) stats.cut_per_cluster[c] += mult;
    }
  });
  return stats;
}

/// Checks the triangle cut/vol identities against the A_M sums, exactly:
///   cut(S_k, ~S_k) = 1/2 sum_{i in S_k, j notin S_k} (A_M)_ij
///   vol(S_k)       = 1/2 sum_{i in S_k} d_m(i)
inline bool verify_triangle_identity(const SparseGraph& g, const std::vector<int>& partition) {
  MotifPartitionStats stats = motif_cut_vol(g, Motif::Triangle, partition);
  MotifAdjacency m = motif_adjacency_bruteforce(g, Motif::Triangle);
  int k = static_cast<int>(stats.vol_m.size());
  Matrix am = m.a_m.dense();
  for (int c = 0; c < k; ++c) {
    double cut_sum = 0.0, vol_sum = 0.0;
    for (int i = 0; i < g.n; ++i) {
      if (partition[i] != c) continue;
      vol_sum += m.d_m[i];
      for (int j = 0; j < g.n; ++j)
        if (partition[j] != c) cut_sum += am(i, j);
    }
    if (cut_sum != 2.0 * static_cast<double>(stats.cut_per_cluster[c])) return false;
    if (vol_sum != 2.0 * static_cast<double>(stats.vol_m[c])) return false;
  }
  return true;
}

/// 4-node motif cut identity (single subset S with indicator y):
///   3*cut_M(S, ~S) + #{instances with exactly 2 nodes in S} = y^T L_M y
inline bool verify_four_node_identity(const SparseGraph& g_in, Motif motif,
                                      const std::vector<int>& subset) {
  if (motif != Motif::FourCycle && motif != Motif::K4)
    throw std::invalid_argument("verify_four_node_identity: 4-node motifs only");
  SparseGraph g = binarize(g_in);
  std::vector<char> in_s(g.n, 0);
  for (int node : subset) in_s.at(node) = 1;

  long long cut = 0, exactly_two = 0;
  detail::for_each_instance(g, motif, [&](const std::vector<int>& v, int mult) {
    int inside = 0;
    for (int node : v) inside += in_s[node];
    if (inside > 0 && inside < 4) cut += mult;
    if (inside == 2) exactly_two += mult;
  });

  MotifAdjacency m = motif_adjacency_bruteforce(g, motif);
  Matrix am = m.a_m.dense();
  double quad = 0.0;  // y^T (D_M - A_M) y
  for (int i = 0; i < g.n; ++i) {
    if (!in_s[i]) continue;
    quad += m.d_m[i];
    for (int j = 0; j < g.n; ++j)
      if (in_s[j]) quad -= am(i, j);
  }
  return quad == static_cast<double>(3 * cut + exactly_two);
}

/// Total triangle count: sum(d_m) = 6 * #triangles.
inline long long triangle_count(const MotifAdjacency& m) {
  double s = m.d_m.sum();
  return static_cast<long long>(s / 6.0 + 0.5);
}

}  // namespace hosc
