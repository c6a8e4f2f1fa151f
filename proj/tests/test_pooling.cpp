#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "hosc/pooling.hpp"

using namespace hosc;
using test::disjoint_triangles;
using test::one_hot;
using test::random_graph;
using test::random_row_stochastic;

TEST_CASE("identity assignment reproduces the adjacency before normalisation") {
  SparseGraph k3 = test::complete_graph(3);
  ad::Tape tape;
  PooledGraph pg =
      coarsen(k3.adj, tape.constant(Matrix::Ones(3, 2)), tape.var(Matrix::Identity(3, 3)));
  CHECK(pg.adj_pool_raw.value().isApprox(k3.adj.dense()));
}

TEST_CASE("hard component assignment pools to an edgeless graph") {
  SparseGraph two = disjoint_triangles(2);
  Matrix x0(6, 1);
  x0 << 1, 2, 3, 10, 20, 30;
  ad::Tape tape;
  PooledGraph pg = coarsen(two.adj, tape.constant(x0), tape.var(one_hot({0, 0, 0, 1, 1, 1}, 2)));
  Matrix raw = pg.adj_pool_raw.value();
  CHECK(raw(0, 0) == 6.0);  // twice the intra-cluster edge weight
  CHECK(raw(1, 1) == 6.0);
  CHECK(raw(0, 1) == 0.0);
  CHECK(pg.adj_pool.value().cwiseAbs().maxCoeff() == 0.0);  // diagonal dropped
  CHECK(pg.x_pool.value()(0, 0) == 6.0);
  CHECK(pg.x_pool.value()(1, 0) == 60.0);
}

TEST_CASE("uniform assignment gives identical pooled feature rows") {
  SparseGraph g = random_graph(10, 0.4, 0);
  Matrix x0 = Matrix::Random(10, 3);
  ad::Tape tape;
  PooledGraph pg =
      coarsen(g.adj, tape.constant(x0), tape.var(Matrix::Constant(10, 2, 0.5)));
  CHECK(pg.x_pool.value().row(0).isApprox(pg.x_pool.value().row(1)));
}

TEST_CASE("coarsening preserves total feature mass") {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 10; ++t) {
    SparseGraph g = random_graph(20, 0.3, 50 + t);
    Matrix x0 = Matrix::Random(20, 4);
    Matrix s = random_row_stochastic(20, 5, rng);
    ad::Tape tape;
    PooledGraph pg = coarsen(g.adj, tape.constant(x0), tape.var(s));
    Matrix pooled_sums = pg.x_pool.value().colwise().sum();
    Matrix orig_sums = x0.colwise().sum();
    CHECK((pooled_sums - orig_sums).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("hard pooled adjacency matches an edge-loop oracle") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> cluster(0, 3);
  for (int t = 0; t < 10; ++t) {
    SparseGraph g = random_graph(30, 0.25, 80 + t);
    std::vector<int> part(30);
    for (int& c : part) c = cluster(rng);
    ad::Tape tape;
    PooledGraph pg =
        coarsen(g.adj, tape.constant(Matrix::Ones(30, 1)), tape.var(one_hot(part, 4)));
    Matrix expect = Matrix::Zero(4, 4);
    for (int i = 0; i < g.n; ++i)
      for (int p = g.adj.row_ptr[i]; p < g.adj.row_ptr[i + 1]; ++p)
        expect(part[i], part[g.adj.col_idx[p]]) += g.adj.values[p];
    CHECK((pg.adj_pool_raw.value() - expect).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("pooled normalisation is symmetric with zero diagonal") {
  std::mt19937_64 rng(4);
  SparseGraph g = random_graph(20, 0.3, 7);
  ad::Tape tape;
  PooledGraph pg = coarsen(g.adj, tape.constant(Matrix::Ones(20, 2)),
                           tape.var(random_row_stochastic(20, 5, rng)));
  Matrix a = pg.adj_pool.value();
  CHECK((a - a.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(a.diagonal().cwiseAbs().maxCoeff() == 0.0);
  // rows with positive degree normalise to <= 1 row sums
  Vector d = pg.adj_pool_raw.value().rowwise().sum();
  for (int i = 0; i < 5; ++i)
    if (d[i] <= detail::kDegreeFloor) CHECK(a.row(i).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gradients flow through the pooled graph") {
  // adj_pool_raw and x_pool are exact functions of S; the renormalised
  // adjacency holds its degree scaling fixed (stop-gradient), so the
  // finite-difference check targets the raw pooled quantities.
  std::mt19937_64 rng(5);
  SparseGraph g = random_graph(8, 0.5, 11);
  Matrix s0 = random_row_stochastic(8, 3, rng);
  Matrix x0 = Matrix::Random(8, 2);
  auto build = [&](ad::Tape& tape, const Matrix& sv) {
    PooledGraph pg = coarsen(g.adj, tape.constant(x0), tape.var(sv));
    return ad::add(ad::sum(ad::elementwise_mul(pg.adj_pool_raw, pg.adj_pool_raw)),
                   ad::sum(ad::elementwise_mul(pg.x_pool, pg.x_pool)));
  };
  ad::Tape tape;
  ad::Tensor s = tape.var(s0);
  PooledGraph pg = coarsen(g.adj, tape.constant(x0), s);
  ad::Tensor loss = ad::add(ad::sum(ad::elementwise_mul(pg.adj_pool_raw, pg.adj_pool_raw)),
                            ad::sum(ad::elementwise_mul(pg.x_pool, pg.x_pool)));
  tape.backward(loss);
  Matrix analytic = s.grad();
  const double h = 1e-5;
  double worst = 0.0;
  for (int i = 0; i < s0.rows(); ++i)
    for (int j = 0; j < s0.cols(); ++j) {
      Matrix plus = s0, minus = s0;
      plus(i, j) += h;
      minus(i, j) -= h;
      ad::Tape tp, tm;
      double numeric = (build(tp, plus).scalar() - build(tm, minus).scalar()) / (2 * h);
      if (std::abs(numeric) < 1e-8 && std::abs(analytic(i, j)) < 1e-8) continue;
      double denom = std::max({std::abs(numeric), std::abs(analytic(i, j)), 1e-8});
      worst = std::max(worst, std::abs(numeric - analytic(i, j)) / denom);
    }
  CHECK(worst < 1e-4);
}

TEST_CASE("random assignment is one-hot and seed-deterministic") {
  Matrix s = random_assignment(12, 4, 9);
  for (int i = 0; i < 12; ++i) {
    CHECK(s.row(i).sum() == 1.0);
    CHECK(s.row(i).maxCoeff() == 1.0);
  }
  CHECK(s == random_assignment(12, 4, 9));
  CHECK_THROWS(random_assignment(3, 5, 0));
}

TEST_CASE("cluster count") {
  CHECK(cluster_count(40, 0.25) == 10);
  CHECK(cluster_count(3, 0.25) == 1);
  CHECK(cluster_count(100, 0.5) == 50);
  CHECK_THROWS(cluster_count(10, 0.0));
  CHECK_THROWS(cluster_count(10, 1.0));
}
