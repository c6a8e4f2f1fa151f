#pragma once

#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "hosc/graph.hpp"
#include "hosc/motif.hpp"

namespace hosc {

struct ClusteringReport {
  double nmi = 0.0;
  double completeness = 0.0;
  double homogeneity = 0.0;
  double modularity = 0.0;
  double conductance = 0.0;
  double motif_conductance = 0.0;
  double cluster_usage_entropy = 0.0;
  double clusters_used_fraction = 0.0;
};

namespace detail {

inline std::map<int, double> label_dist(const std::vector<int>& labels) {
  std::map<int, double> counts;
  for (int l : labels) counts[l] += 1.0;
  for (auto& [l, c] : counts) c /= labels.size();
  return counts;
}

inline double entropy(const std::map<int, double>& dist) {
  double h = 0.0;
  for (auto& [l, p] : dist)
    if (p > 0) h -= p * std::log(p);
  return h;
}

// H(a), H(b), H(a|b) and mutual information for two labelings.
struct EntropyStats {
  double h_a, h_b, mi;
};

inline EntropyStats entropy_stats(const std::vector<int>& a, const std::vector<int>& b) {
  double n = static_cast<double>(a.size());
  auto pa = label_dist(a), pb = label_dist(b);
  std::map<std::pair<int, int>, double> joint;
  for (std::size_t i = 0; i < a.size(); ++i) joint[{a[i], b[i]}] += 1.0 / n;
  double mi = 0.0;
  for (auto& [ab, p] : joint)
    if (p > 0) mi += p * std::log(p / (pa[ab.first] * pb[ab.second]));
  return {entropy(pa), entropy(pb), mi};
}

}  // namespace detail

/// NMI with sqrt(H(pred) * H(truth)) normalisation; 0 when either labeling
/// is constant and they differ, 1 when identical up to relabeling.
inline double nmi(const std::vector<int>& pred, const std::vector<int>& truth) {
  if (pred.empty() || pred.size() != truth.size())
    throw std::invalid_argument("nmi: empty or mismatched inputs");
  auto st = detail::entropy_stats(pred, truth);
  double denom = std::sqrt(st.h_a * st.h_b);
  if (denom <= 0.0) return st.h_a == st.h_b ? 1.0 : 0.0;
  return st.mi / denom;
}

/// homogeneity = 1 - H(truth|pred)/H(truth); 1 when each cluster holds one class.
inline double homogeneity(const std::vector<int>& pred, const std::vector<int>& truth) {
  auto st = detail::entropy_stats(truth, pred);
  if (st.h_a <= 0.0) return 1.0;
  double h_cond = st.h_a - st.mi;  // H(truth|pred)
  return 1.0 - h_cond / st.h_a;
}

/// completeness = 1 - H(pred|truth)/H(pred); 1 when each class sits in one cluster.
inline double completeness(const std::vector<int>& pred, const std::vector<int>& truth) {
  auto st = detail::entropy_stats(pred, truth);
  if (st.h_a <= 0.0) return 1.0;
  double h_cond = st.h_a - st.mi;  // H(pred|truth)
  return 1.0 - h_cond / st.h_a;
}

/// Newman-Girvan modularity of a node partition.
inline double modularity(const SparseGraph& g, const std::vector<int>& partition) {
  double two_m = 0.0;
  for (double v : g.adj.values) two_m += v;
  if (two_m <= 0.0) return 0.0;
  int k = 0;
  for (int c : partition) k = std::max(k, c + 1);
  std::vector<double> intra(k, 0.0), vol(k, 0.0);
  for (int i = 0; i < g.n; ++i)
    for (int p = g.adj.row_ptr[i]; p < g.adj.row_ptr[i + 1]; ++p) {
      int j = g.adj.col_idx[p];
      vol[partition[i]] += g.adj.values[p];
      if (partition[i] == partition[j]) intra[partition[i]] += g.adj.values[p];
    }
  double q = 0.0;
  for (int c = 0; c < k; ++c)
    q += intra[c] / two_m - (vol[c] / two_m) * (vol[c] / two_m);
  return q;
}

/// Mean normalised cut: (1/K) sum_k cut(S_k, ~S_k)/vol(S_k); empty-volume
/// clusters contribute 0.
inline double conductance(const SparseGraph& g, const std::vector<int>& partition) {
  int k = 0;
  for (int c : partition) k = std::max(k, c + 1);
  std::vector<double> cut(k, 0.0), vol(k, 0.0);
  for (int i = 0; i < g.n; ++i)
    for (int p = g.adj.row_ptr[i]; p < g.adj.row_ptr[i + 1]; ++p) {
      int j = g.adj.col_idx[p];
      vol[partition[i]] += g.adj.values[p];
      if (partition[i] != partition[j]) cut[partition[i]] += g.adj.values[p];
    }
  double total = 0.0;
  for (int c = 0; c < k; ++c)
    if (vol[c] > 0) total += cut[c] / vol[c];
  return total / k;
}

/// Motif conductance via the A_M identities: cut and vol from half-sums of
/// the triangle motif adjacency.
inline double motif_conductance(const SparseGraph& g, const std::vector<int>& partition) {
  MotifAdjacency m = triangle_adjacency(g);
  int k = 0;
  for (int c : partition) k = std::max(c + 1, k);
  std::vector<double> cut(k, 0.0), vol(k, 0.0);
  for (int i = 0; i < g.n; ++i) {
    vol[partition[i]] += m.d_m[i];
    for (int p = m.a_m.row_ptr[i]; p < m.a_m.row_ptr[i + 1]; ++p) {
      int j = m.a_m.col_idx[p];
      if (partition[i] != partition[j]) cut[partition[i]] += m.a_m.values[p];
    }
  }
  double total = 0.0;
  for (int c = 0; c < k; ++c)
    if (vol[c] > 0) total += cut[c] / vol[c];
  return total / k;
}

/// Degenerate-solution diagnostics over the argmax assignment: fraction of
/// clusters used and the normalised entropy of the usage histogram. Argmax
/// ties break toward the lowest cluster index.
inline std::pair<double, double> degeneracy_report(const Matrix& s) {
  int n = static_cast<int>(s.rows());
  int k = static_cast<int>(s.cols());
  std::vector<double> histogram(k, 0.0);
  for (int i = 0; i < n; ++i) {
    int best = 0;
    for (int c = 1; c < k; ++c)
      if (s(i, c) > s(i, best)) best = c;
    histogram[best] += 1.0 / n;
  }
  int used = 0;
  double h = 0.0;
  for (int c = 0; c < k; ++c) {
    if (histogram[c] > 0) {
      ++used;
      h -= histogram[c] * std::log(histogram[c]);
    }
  }
  double fraction = static_cast<double>(used) / k;
  double norm_entropy = k > 1 ? h / std::log(static_cast<double>(k)) : 1.0;
  return {fraction, norm_entropy};
}

inline std::vector<int> argmax_labels(const Matrix& s) {
  std::vector<int> labels(s.rows());
  for (int i = 0; i < s.rows(); ++i) {
    int best = 0;
    for (int c = 1; c < s.cols(); ++c)
      if (s(i, c) > s(i, best)) best = c;
    labels[i] = best;
  }
  return labels;
}

inline ClusteringReport clustering_report(const SparseGraph& g, const Matrix& s,
                                          const std::vector<int>& truth) {
  ClusteringReport r;
  std::vector<int> pred = argmax_labels(s);
  r.nmi = nmi(pred, truth);
  r.completeness = completeness(pred, truth);
  r.homogeneity = homogeneity(pred, truth);
  r.modularity = modularity(g, pred);
  r.conductance = conductance(g, pred);
  r.motif_conductance = motif_conductance(g, pred);
  auto [fraction, usage_entropy] = degeneracy_report(s);
  r.clusters_used_fraction = fraction;
  r.cluster_usage_entropy = usage_entropy;
  return r;
}

}  // namespace hosc
