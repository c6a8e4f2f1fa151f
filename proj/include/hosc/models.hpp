#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "hosc/autodiff.hpp"
#include "hosc/graph.hpp"
#include "hosc/motif.hpp"

namespace hosc {

/// GCN layer with skip connection: X' = ReLU(A_norm X Theta1 + X Theta2).
struct GcnSkipParams {
  Matrix theta1;  // F_in x F_out
  Matrix theta2;  // F_in x F_out
};

/// Fully connected layers; the final layer width is the cluster count K.
struct MlpParams {
  std::vector<Matrix> weights;
  std::vector<Matrix> biases;  // 1 x width row vectors
};

/// Glorot-style uniform initialisation, seeded.
inline Matrix glorot(int rows, int cols, std::mt19937_64& rng) {
  double limit = std::sqrt(6.0 / (rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = dist(rng);
  return m;
}

inline GcnSkipParams make_gcn_skip(int f_in, int f_out, std::mt19937_64& rng) {
  return {glorot(f_in, f_out, rng), glorot(f_in, f_out, rng)};
}

/// `head_gain` scales the final (logit) layer's init. A gain above 1 makes the
/// initial softmax assignment peakier, which keeps training clear of the
/// uniform-assignment plateau where the conductance loss is flat.
///
/// The head's columns are centred (zero column sum) at init: the layer's input
/// is post-ReLU and hence confined to the positive cone, where an uncentred
/// column with a larger mean weight would dominate every row at once and
/// permanently starve the other output units.
inline MlpParams make_mlp(int f_in, const std::vector<int>& widths, std::mt19937_64& rng,
                          double head_gain = 1.0) {
  MlpParams p;
  int prev = f_in;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    int w = widths[i];
    Matrix weight = glorot(prev, w, rng);
    if (i + 1 == widths.size()) {
      weight.rowwise() -= weight.colwise().mean();
      weight *= head_gain;
    }
    p.weights.push_back(std::move(weight));
    p.biases.push_back(Matrix::Zero(1, w));
    prev = w;
  }
  return p;
}

/// Tape-side parameter handles for one forward pass.
struct GcnSkipVars {
  ad::Tensor theta1, theta2;
};
struct MlpVars {
  std::vector<ad::Tensor> weights, biases;
};

inline GcnSkipVars bind(ad::Tape& tape, const GcnSkipParams& p) {
  return {tape.var(p.theta1), tape.var(p.theta2)};
}

inline MlpVars bind(ad::Tape& tape, const MlpParams& p) {
  MlpVars v;
  for (auto& w : p.weights) v.weights.push_back(tape.var(w));
  for (auto& b : p.biases) v.biases.push_back(tape.var(b));
  return v;
}

inline ad::Tensor gcn_skip_forward(const NormalizedAdjacency& adj_norm,
                                   const ad::Tensor& x, const GcnSkipVars& p) {
  return ad::relu(ad::add(ad::matmul(ad::sparse_dense_matmul(adj_norm.m, x), p.theta1),
                          ad::matmul(x, p.theta2)));
}

/// Same as gcn_skip_forward with the propagated features A~X supplied as a
/// precomputed constant. The input features never change during training, so
/// the training loops hoist the sparse product out of the epoch loop.
inline ad::Tensor gcn_skip_forward_cached(const ad::Tensor& x_prop, const ad::Tensor& x,
                                          const GcnSkipVars& p) {
  return ad::relu(ad::add(ad::matmul(x_prop, p.theta1), ad::matmul(x, p.theta2)));
}

/// MLP with ReLU hidden layers and a row softmax head; the result is the
/// row-stochastic cluster assignment matrix S.
inline ad::Tensor assignment_forward(const ad::Tensor& x, const MlpVars& p) {
  ad::Tensor h = x;
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    h = ad::add_rowvec(ad::matmul(h, p.weights[l]), p.biases[l]);
    if (l + 1 < p.weights.size()) h = ad::relu(h);
  }
  return ad::softmax_rows(h);
}

/// Motif conductance loss for one motif:
///   -(1/K) sum_k (S^T A S)_kk / max((S^T D S)_kk, eps).
/// When the degree vector is identically zero the loss is 0 with no gradient.
/// Fraction of a cluster's fair volume share (vol(G)/K) below which the
/// denominator is clamped; see trace_ratio for why this must not be tiny.
/// Kept below 1/K for any realistic K so that the uniform assignment, whose
/// per-cluster volume is vol(G)/K^2, is never clamped and still scores -1.
inline constexpr double kClusterVolumeFloor = 0.05;

inline ad::Tensor loss_mc_term(const ad::Tensor& s, const CsrMatrix& adj,
                               const Vector& degree) {
  ad::Tape& tape = *s.tape;
  if (degree.maxCoeff() <= 0.0) return tape.constant_scalar(0.0);
  int k = s.cols();
  ad::Tensor y = ad::sparse_dense_matmul(adj, s);
  ad::Tensor numer = ad::colsum(ad::elementwise_mul(s, y));
  ad::Tensor d_row = tape.constant(degree.transpose());  // 1 x N
  ad::Tensor denom = ad::matmul(d_row, ad::elementwise_mul(s, s));
  double eps = kClusterVolumeFloor * degree.sum() / k;
  return ad::scale(ad::trace_ratio(numer, denom, eps), -1.0 / k);
}

inline ad::Tensor loss_mc(const ad::Tensor& s, const MotifAdjacency& a_m) {
  return loss_mc_term(s, a_m.a_m, a_m.d_m);
}

/// Eq.-(8) style combination of the edge term (A with its degrees) and the
/// triangle term, weighted alpha1 + alpha2 = 1.
inline ad::Tensor loss_mc_combined(const ad::Tensor& s, const SparseGraph& g,
                                   const DegreeVector& deg, const MotifAdjacency& a_tri,
                                   double alpha1, double alpha2) {
  ad::Tensor edge = loss_mc_term(s, g.adj, deg.d);
  ad::Tensor tri = loss_mc(s, a_tri);
  return ad::add(ad::scale(edge, alpha1), ad::scale(tri, alpha2));
}

/// Orthogonality loss, rescaled to [0, 1]:
///   (sqrt(K) - (1/sqrt(N)) sum_j ||S_{*j}||) / (sqrt(K) - 1).
inline ad::Tensor loss_ortho(const ad::Tensor& s) {
  ad::Tape& tape = *s.tape;
  double sqrt_k = std::sqrt(static_cast<double>(s.cols()));
  double sqrt_n = std::sqrt(static_cast<double>(s.rows()));
  ad::Tensor norm_sum = ad::sum(ad::frobenius_norm_columns(s));
  ad::Tensor inner = ad::add(tape.constant_scalar(sqrt_k),
                             ad::scale(norm_sum, -1.0 / sqrt_n));
  return ad::scale(inner, 1.0 / (sqrt_k - 1.0));
}

/// The ratio-of-traces objective MinCutPool actually minimises:
///   -Tr(S^T A_norm S) / Tr(S^T D_norm S), one global ratio.
inline ad::Tensor loss_mincut_ablation(const ad::Tensor& s, const NormalizedAdjacency& adj_norm,
                                       const Vector& deg_norm_diag) {
  ad::Tape& tape = *s.tape;
  ad::Tensor y = ad::sparse_dense_matmul(adj_norm.m, s);
  ad::Tensor numer = ad::sum(ad::elementwise_mul(s, y));
  ad::Tensor d_row = tape.constant(deg_norm_diag.transpose());
  ad::Tensor denom = ad::sum(ad::matmul(d_row, ad::elementwise_mul(s, s)));
  return ad::scale(ad::trace_ratio(numer, denom), -1.0);
}

/// Joint objective: L_mc + mu * L_o + L_sup.
inline ad::Tensor total_loss(const ad::Tensor& l_mc, const ad::Tensor& l_o,
                             const ad::Tensor& l_sup, double mu) {
  return ad::add(ad::add(l_mc, ad::scale(l_o, mu)), l_sup);
}

/// Linear ramp of alpha2 from `alpha2_start` down to `alpha2_floor` over
/// `ramp_epochs`, with alpha1 = 1 - alpha2 (higher-order first).
struct AlphaSchedule {
  double alpha2_start = 1.0;
  double alpha2_floor = 0.5;
  int ramp_epochs = 250;
};

inline std::pair<double, double> alpha_at(const AlphaSchedule& s, int epoch) {
  double a2 = s.alpha2_start;
  if (s.ramp_epochs > 0)
    a2 = std::max(s.alpha2_floor,
                  s.alpha2_start -
                      epoch * (s.alpha2_start - s.alpha2_floor) / s.ramp_epochs);
  else
    a2 = std::max(s.alpha2_floor, s.alpha2_start);
  return {1.0 - a2, a2};
}

}  // namespace hosc
