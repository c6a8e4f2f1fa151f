#pragma once

#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "hosc/graph.hpp"
#include "hosc/motif.hpp"

namespace hosc {

/// Eigenvectors of the K smallest eigenvalues of the symmetric normalised
/// Laplacian, as columns.
struct SpectralEmbedding {
  Matrix vectors;  // N x K
};

namespace detail {

/// Seeded k-means with k-means++ init; `restarts` runs keeping best inertia.
inline std::vector<int> kmeans(const Matrix& points, int k, std::uint64_t seed,
                               int max_iters = 100, int restarts = 10) {
  const int n = static_cast<int>(points.rows());
  if (k > n) throw std::invalid_argument("kmeans: more clusters than points");
  std::mt19937_64 rng(seed);

  std::vector<int> best_labels(n, 0);
  double best_inertia = std::numeric_limits<double>::infinity();

  for (int run = 0; run < restarts; ++run) {
    // k-means++ seeding
    Matrix centroids(k, points.cols());
    std::uniform_int_distribution<int> uni(0, n - 1);
    centroids.row(0) = points.row(uni(rng));
    Vector dist2 = (points.rowwise() - centroids.row(0)).rowwise().squaredNorm();
    for (int c = 1; c < k; ++c) {
      double total = dist2.sum();
      int chosen = 0;
      if (total > 0) {
        std::uniform_real_distribution<double> u(0.0, total);
        double target = u(rng), acc = 0.0;
        for (int i = 0; i < n; ++i) {
          acc += dist2[i];
          if (acc >= target) {
            chosen = i;
            break;
          }
        }
      } else {
        chosen = uni(rng);
      }
      centroids.row(c) = points.row(chosen);
      dist2 = dist2.cwiseMin(
          (points.rowwise() - centroids.row(c)).rowwise().squaredNorm());
    }

    std::vector<int> labels(n, 0);
    for (int iter = 0; iter < max_iters; ++iter) {
      bool changed = false;
      for (int i = 0; i < n; ++i) {
        int best = 0;
        double bd = std::numeric_limits<double>::infinity();
        for (int c = 0; c < k; ++c) {
          double d = (points.row(i) - centroids.row(c)).squaredNorm();
          if (d < bd) {
            bd = d;
            best = c;
          }
        }
        if (labels[i] != best) {
          labels[i] = best;
          changed = true;
        }
      }
      Matrix sums = Matrix::Zero(k, points.cols());
      std::vector<int> counts(k, 0);
      for (int i = 0; i < n; ++i) {
        sums.row(labels[i]) += points.row(i);
        counts[labels[i]]++;
      }
      for (int c = 0; c < k; ++c)
        if (counts[c] > 0) centroids.row(c) = sums.row(c) / counts[c];
      if (!changed) break;
    }

    double inertia = 0.0;
    for (int i = 0; i < n; ++i)
      inertia += (points.row(i) - centroids.row(labels[i])).squaredNorm();
    if (inertia < best_inertia) {
      best_inertia = inertia;
      best_labels = labels;
    }
  }
  return best_labels;
}

inline SpectralEmbedding laplacian_embedding(const SparseGraph& g, int k) {
  NormalizedAdjacency a = sym_normalize(g);
  Matrix lap = Matrix::Identity(g.n, g.n) - a.m.dense();
  Eigen::SelfAdjointEigenSolver<Matrix> solver(lap);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("laplacian_embedding: eigensolver failure");
  SpectralEmbedding emb;
  emb.vectors = solver.eigenvectors().leftCols(k);  // eigenvalues ascending
  return emb;
}

}  // namespace detail

/// Classical normalised spectral clustering: embed with the K smallest
/// Laplacian eigenvectors, row-normalise, then run seeded k-means.
inline std::vector<int> spectral_cluster(const SparseGraph& g, int k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("spectral_cluster: k must be >= 2");
  if (g.n < k) throw std::invalid_argument("spectral_cluster: fewer nodes than clusters");
  SpectralEmbedding emb = detail::laplacian_embedding(g, k);
  Matrix rows = emb.vectors;
  for (int i = 0; i < rows.rows(); ++i) {
    double norm = rows.row(i).norm();
    if (norm > 0) rows.row(i) /= norm;
  }
  return detail::kmeans(rows, k, seed);
}

/// Motif spectral clustering: spectral clustering applied to the graph
/// induced by the count-weighted triangle motif adjacency. Nodes isolated in
/// G_M are assigned to the nearest centroid of their (zero) embedding row.
inline std::vector<int> motif_spectral_cluster(const SparseGraph& g, int k,
                                               std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("motif_spectral_cluster: k must be >= 2");
  MotifAdjacency m = triangle_adjacency(g);
  if (m.all_zero())
    throw std::runtime_error("motif_spectral_cluster: A_M identically zero");

  SparseGraph gm;
  gm.n = g.n;
  gm.adj = m.a_m;
  SpectralEmbedding emb = detail::laplacian_embedding(gm, k);

  std::vector<int> active;  // nodes with nonzero motif degree
  for (int i = 0; i < g.n; ++i)
    if (m.d_m[i] > 0) active.push_back(i);
  if (static_cast<int>(active.size()) < k)
    throw std::runtime_error("motif_spectral_cluster: fewer motif nodes than clusters");

  Matrix rows(static_cast<int>(active.size()), k);
  for (std::size_t r = 0; r < active.size(); ++r) {
    Eigen::RowVectorXd row = emb.vectors.row(active[r]);
    double norm = row.norm();
    rows.row(static_cast<int>(r)) = norm > 0 ? (row / norm).eval() : row;
  }
  std::vector<int> sub_labels = detail::kmeans(rows, k, seed);

  // centroids of the active embedding, for placing isolated nodes
  Matrix centroids = Matrix::Zero(k, k);
  std::vector<int> counts(k, 0);
  for (std::size_t r = 0; r < active.size(); ++r) {
    centroids.row(sub_labels[r]) += rows.row(static_cast<int>(r));
    counts[sub_labels[r]]++;
  }
  for (int c = 0; c < k; ++c)
    if (counts[c] > 0) centroids.row(c) /= counts[c];

  std::vector<int> labels(g.n, 0);
  for (std::size_t r = 0; r < active.size(); ++r) labels[active[r]] = sub_labels[r];
  for (int i = 0; i < g.n; ++i) {
    if (m.d_m[i] > 0) continue;
    Eigen::RowVectorXd zero = Eigen::RowVectorXd::Zero(k);
    int best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
      double d = (zero - centroids.row(c)).squaredNorm();
      if (d < bd) {
        bd = d;
        best = c;
      }
    }
    labels[i] = best;
  }
  return labels;
}

}  // namespace hosc
