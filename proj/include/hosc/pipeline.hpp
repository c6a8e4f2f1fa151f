#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "hosc/data.hpp"
#include "hosc/graph.hpp"
#include "hosc/metrics.hpp"
#include "hosc/models.hpp"
#include "hosc/motif.hpp"
#include "hosc/optimizer.hpp"
#include "hosc/pooling.hpp"

namespace hosc {

enum class Pooler { Hosc, HP1, HP2, MinCutLoss, Random, NoPool };
enum class RunMode { Cluster, Cluster2Layer, Classify };

inline std::string to_string(Pooler p) {
  switch (p) {
    case Pooler::Hosc: return "hosc";
    case Pooler::HP1: return "hp1";
    case Pooler::HP2: return "hp2";
    case Pooler::MinCutLoss: return "mincut";
    case Pooler::Random: return "random";
    case Pooler::NoPool: return "nopool";
  }
  return "?";
}

inline Pooler pooler_from_string(const std::string& s) {
  if (s == "hosc") return Pooler::Hosc;
  if (s == "hp1") return Pooler::HP1;
  if (s == "hp2") return Pooler::HP2;
  if (s == "mincut") return Pooler::MinCutLoss;
  if (s == "random") return Pooler::Random;
  if (s == "nopool") return Pooler::NoPool;
  throw std::invalid_argument("unknown pooler: " + s);
}

struct ExperimentConfig {
  RunMode mode = RunMode::Cluster;
  std::vector<std::uint64_t> seeds = {0};
  double lr = 0.001;
  int max_epochs = 500;
  double grad_clip = 2.0;
  int early_stop_patience = 200;
  int lr_decay_patience = 25;
  double mu = 0.1;
  double init_gain = 1.0;     // assignment-head init scale (see make_mlp)
  int restarts = 1;           // clustering: keep the lowest-loss run of N inits
  AlphaSchedule alpha;        // ramp_epochs <= 0 means "half of max_epochs"
  int hidden = 32;
  int batch_size = 16;
  double pool_ratio = 0.25;
  Pooler pooler = Pooler::Hosc;
  bool global_skip = false;   // classification: also read out the earlier GNN blocks
  double pooled_motif_threshold = 1e-6;

  int alpha_ramp() const { return alpha.ramp_epochs > 0 ? alpha.ramp_epochs : max_epochs / 2; }
};

inline ExperimentConfig default_cluster_config() { return {}; }

inline ExperimentConfig default_cluster2_config() {
  ExperimentConfig cfg;
  cfg.mode = RunMode::Cluster2Layer;
  cfg.max_epochs = 1000;
  cfg.early_stop_patience = 500;
  return cfg;
}

inline ExperimentConfig default_classify_config() {
  ExperimentConfig cfg;
  cfg.mode = RunMode::Classify;
  cfg.early_stop_patience = 100;
  cfg.lr_decay_patience = 50;
  return cfg;
}

struct RunRecord {
  std::uint64_t seed = 0;
  std::vector<double> trace_mc, trace_o, trace_sup;
  int epochs_run = 0;
  bool aborted_nonfinite = false;
  double best_loss = std::numeric_limits<double>::infinity();  // total loss at checkpoint
  std::optional<ClusteringReport> report;   // clustering modes
  std::optional<double> test_accuracy;      // classification mode
  Matrix final_s;                           // best-checkpoint assignment (clustering)
};

namespace detail {

struct ParamSet {
  std::vector<Matrix*> ptrs;

  void add(GcnSkipParams& p) {
    ptrs.push_back(&p.theta1);
    ptrs.push_back(&p.theta2);
  }
  void add(MlpParams& p) {
    for (auto& w : p.weights) ptrs.push_back(&w);
    for (auto& b : p.biases) ptrs.push_back(&b);
  }
};

inline std::vector<ad::Tensor> bound_tensors(const GcnSkipVars& v) {
  return {v.theta1, v.theta2};
}

inline std::vector<ad::Tensor> bound_tensors(const MlpVars& v) {
  std::vector<ad::Tensor> out = v.weights;
  out.insert(out.end(), v.biases.begin(), v.biases.end());
  return out;
}

inline std::vector<Matrix> collect_grads(const std::vector<ad::Tensor>& bound) {
  std::vector<Matrix> grads;
  grads.reserve(bound.size());
  for (auto& t : bound) grads.push_back(t.grad());
  return grads;
}

/// Tracks best loss for early stopping and lr halving on plateau.
struct PlateauTracker {
  double best = std::numeric_limits<double>::infinity();
  int since_best = 0;
  int since_decay = 0;

  // returns true when a new best was reached
  bool update(double value) {
    if (value < best - 1e-12) {
      best = value;
      since_best = 0;
      since_decay = 0;
      return true;
    }
    ++since_best;
    ++since_decay;
    return false;
  }
};

/// Dense differentiable edge-conductance term for pooled graphs: degrees are
/// taken from the detached forward value of the pooled adjacency.
inline ad::Tensor loss_mc_term_dense(const ad::Tensor& s, const ad::Tensor& adj) {
  ad::Tape& tape = *s.tape;
  Vector d = adj.value().rowwise().sum();
  if (d.maxCoeff() <= 0.0) return tape.constant_scalar(0.0);
  int k = s.cols();
  ad::Tensor y = ad::matmul(adj, s);
  ad::Tensor numer = ad::colsum(ad::elementwise_mul(s, y));
  ad::Tensor d_row = tape.constant(d.transpose());
  ad::Tensor denom = ad::matmul(d_row, ad::elementwise_mul(s, s));
  return ad::scale(ad::trace_ratio(numer, denom), -1.0 / k);
}

/// Triangle term for a pooled graph: the pooled adjacency is thresholded and
/// binarised (detached), and the motif adjacency built from it enters the
/// loss as a constant.
inline ad::Tensor loss_mc_tri_pooled(const ad::Tensor& s, const ad::Tensor& adj,
                                     double threshold) {
  const Matrix& a = adj.value();
  int n = static_cast<int>(a.rows());
  std::vector<std::tuple<int, int, double>> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (a(i, j) > threshold) edges.emplace_back(i, j, 1.0);
  SparseGraph gb = build_graph(edges, n);
  MotifAdjacency m = triangle_adjacency(gb);
  if (m.all_zero()) return s.tape->constant_scalar(0.0);
  // CSR must outlive the tape; stash a copy on the heap tied to the closure
  auto holder = std::make_shared<MotifAdjacency>(std::move(m));
  ad::Tape& tape = *s.tape;
  int k = s.cols();
  // same structure as loss_mc_term but keeping the holder alive
  ad::Tensor y = [&] {
    const CsrMatrix& csr = holder->a_m;
    int ib = s.id;
    return tape.record(csr.multiply(s.value()), {ib},
                       [holder, ib](ad::Tape& t, const ad::Tape::Node& self) {
                         const CsrMatrix& a_m = holder->a_m;
                         Matrix g = Matrix::Zero(self.grad.rows(), self.grad.cols());
                         for (int i = 0; i < a_m.n; ++i)
                           for (int p = a_m.row_ptr[i]; p < a_m.row_ptr[i + 1]; ++p)
                             g.row(a_m.col_idx[p]) += a_m.values[p] * self.grad.row(i);
                         t.node(ib).grad += g;
                       });
  }();
  ad::Tensor numer = ad::colsum(ad::elementwise_mul(s, y));
  ad::Tensor d_row = tape.constant(holder->d_m.transpose());
  ad::Tensor denom = ad::matmul(d_row, ad::elementwise_mul(s, s));
  return ad::scale(ad::trace_ratio(numer, denom), -1.0 / k);
}

inline ad::Tensor gcn_skip_forward_dense(const ad::Tensor& adj, const ad::Tensor& x,
                                         const GcnSkipVars& p) {
  return ad::relu(ad::add(ad::matmul(ad::matmul(adj, x), p.theta1),
                          ad::matmul(x, p.theta2)));
}

// One training run from a single initialisation; run_clustering picks the
// best of cfg.restarts of these by training loss.
inline RunRecord run_clustering_attempt(const SparseGraph& g, const ExperimentConfig& cfg,
                                        std::uint64_t seed, std::uint64_t init_seed) {
  if (!g.features) throw std::invalid_argument("run_clustering: graph has no features");
  if (!g.node_labels) throw std::invalid_argument("run_clustering: graph has no node labels");
  const std::vector<int>& truth = *g.node_labels;
  int k = *std::max_element(truth.begin(), truth.end()) + 1;
  int f = static_cast<int>(g.features->cols());

  NormalizedAdjacency adj_norm = sym_normalize(g);
  DegreeVector deg = degrees(g);
  MotifAdjacency a_tri = triangle_adjacency(g);
  Vector deg_norm(g.n);
  for (int i = 0; i < g.n; ++i) deg_norm[i] = adj_norm.m.row_sum(i);

  std::mt19937_64 rng(init_seed);
  GcnSkipParams gcn = make_gcn_skip(f, cfg.hidden, rng);
  MlpParams mlp = make_mlp(cfg.hidden, {cfg.hidden, k}, rng, cfg.init_gain);
  detail::ParamSet params;
  params.add(gcn);
  params.add(mlp);
  AdamState adam = make_adam_state(params.ptrs);

  AlphaSchedule schedule = cfg.alpha;
  schedule.ramp_epochs = cfg.alpha_ramp();

  RunRecord rec;
  rec.seed = seed;
  detail::PlateauTracker tracker;
  double lr = cfg.lr;
  Matrix best_s;
  Matrix x_prop_m = adj_norm.m.multiply(*g.features);

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    ad::Tape tape;
    GcnSkipVars gcn_v = bind(tape, gcn);
    MlpVars mlp_v = bind(tape, mlp);
    ad::Tensor x = tape.constant(*g.features);
    ad::Tensor x_prop = tape.constant(x_prop_m);

    ad::Tensor l_mc = tape.constant_scalar(0.0);
    ad::Tensor s;
    try {
      ad::Tensor h = gcn_skip_forward_cached(x_prop, x, gcn_v);
      s = assignment_forward(h, mlp_v);
      switch (cfg.pooler) {
        case Pooler::Hosc: {
          auto [a1, a2] = alpha_at(schedule, epoch);
          l_mc = loss_mc_combined(s, g, deg, a_tri, a1, a2);
          break;
        }
        case Pooler::HP1:
          l_mc = loss_mc_term(s, g.adj, deg.d);
          break;
        case Pooler::HP2:
          l_mc = loss_mc(s, a_tri);
          break;
        case Pooler::MinCutLoss:
          l_mc = loss_mincut_ablation(s, adj_norm, deg_norm);
          break;
        default:
          throw std::invalid_argument("run_clustering: pooler has no clustering loss");
      }
      ad::Tensor l_o = loss_ortho(s);
      ad::Tensor loss = ad::add(l_mc, ad::scale(l_o, cfg.mu));
      rec.trace_mc.push_back(l_mc.scalar());
      rec.trace_o.push_back(l_o.scalar());
      tape.backward(loss);

      auto bound = detail::bound_tensors(gcn_v);
      auto mlp_bound = detail::bound_tensors(mlp_v);
      bound.insert(bound.end(), mlp_bound.begin(), mlp_bound.end());
      std::vector<Matrix> grads = detail::collect_grads(bound);
      optimizer_step(params.ptrs, std::move(grads), adam, lr, cfg.grad_clip);

      double loss_value = rec.trace_mc.back() + cfg.mu * rec.trace_o.back();
      if (tracker.update(loss_value)) best_s = s.value();
      if (tracker.since_decay >= cfg.lr_decay_patience) {
        lr *= 0.5;
        tracker.since_decay = 0;
      }
      rec.epochs_run = epoch + 1;
      if (tracker.since_best >= cfg.early_stop_patience) break;
    } catch (const std::runtime_error&) {
      rec.aborted_nonfinite = true;
      break;
    }
  }

  if (best_s.size() == 0) best_s = Matrix::Constant(g.n, k, 1.0 / k);
  rec.best_loss = tracker.best;
  rec.final_s = best_s;
  rec.report = clustering_report(g, best_s, truth);
  return rec;
}

}  // namespace detail

/// Unsupervised clustering: GCN-skip -> MLP -> S, trained on L_mc + mu L_o.
/// With cfg.restarts > 1, trains from several initialisations and keeps the
/// run whose checkpointed training loss is lowest (no label access).
inline RunRecord run_clustering(const SparseGraph& g, const ExperimentConfig& cfg,
                                std::uint64_t seed) {
  int restarts = std::max(1, cfg.restarts);
  RunRecord best;
  for (int r = 0; r < restarts; ++r) {
    std::uint64_t init_seed = r == 0 ? seed : seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(r);
    RunRecord rec = detail::run_clustering_attempt(g, cfg, seed, init_seed);
    if (r == 0 || rec.best_loss < best.best_loss) best = std::move(rec);
  }
  return best;
}

namespace detail {

inline RunRecord run_clustering_2layer_attempt(const SparseGraph& g, const ExperimentConfig& cfg,
                                               std::uint64_t seed, std::uint64_t init_seed) {
  if (!g.features || !g.node_labels)
    throw std::invalid_argument("run_clustering_2layer: needs features and labels");
  const std::vector<int>& truth = *g.node_labels;
  int k2 = *std::max_element(truth.begin(), truth.end()) + 1;
  int k1 = std::max(k2, cluster_count(g.n, cfg.pool_ratio));
  int f = static_cast<int>(g.features->cols());

  NormalizedAdjacency adj_norm = sym_normalize(g);
  DegreeVector deg = degrees(g);
  MotifAdjacency a_tri = triangle_adjacency(g);

  std::mt19937_64 rng(init_seed);
  GcnSkipParams gcn1 = make_gcn_skip(f, cfg.hidden, rng);
  MlpParams mlp1 = make_mlp(cfg.hidden, {cfg.hidden, k1}, rng, cfg.init_gain);
  GcnSkipParams gcn2 = make_gcn_skip(cfg.hidden, cfg.hidden, rng);
  MlpParams mlp2 = make_mlp(cfg.hidden, {cfg.hidden, k2}, rng, cfg.init_gain);
  detail::ParamSet params;
  params.add(gcn1);
  params.add(mlp1);
  params.add(gcn2);
  params.add(mlp2);
  AdamState adam = make_adam_state(params.ptrs);

  AlphaSchedule schedule = cfg.alpha;
  schedule.ramp_epochs = cfg.alpha_ramp();

  RunRecord rec;
  rec.seed = seed;
  detail::PlateauTracker tracker;
  double lr = cfg.lr;
  Matrix best_s;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    ad::Tape tape;
    GcnSkipVars g1 = bind(tape, gcn1);
    MlpVars m1 = bind(tape, mlp1);
    GcnSkipVars g2 = bind(tape, gcn2);
    MlpVars m2 = bind(tape, mlp2);
    ad::Tensor x = tape.constant(*g.features);

    try {
      auto [a1, a2] = alpha_at(schedule, epoch);
      ad::Tensor h1 = gcn_skip_forward(adj_norm, x, g1);
      ad::Tensor s1 = assignment_forward(h1, m1);
      ad::Tensor l_mc1 = loss_mc_combined(s1, g, deg, a_tri, a1, a2);
      ad::Tensor l_o1 = loss_ortho(s1);

      PooledGraph pooled = coarsen(g.adj, h1, s1);
      ad::Tensor h2 = detail::gcn_skip_forward_dense(pooled.adj_pool, pooled.x_pool, g2);
      ad::Tensor s2 = assignment_forward(h2, m2);
      ad::Tensor l_mc2 = ad::add(
          ad::scale(detail::loss_mc_term_dense(s2, pooled.adj_pool), a1),
          ad::scale(detail::loss_mc_tri_pooled(s2, pooled.adj_pool,
                                               cfg.pooled_motif_threshold),
                    a2));
      ad::Tensor l_o2 = loss_ortho(s2);

      ad::Tensor l_mc = ad::scale(ad::add(l_mc1, l_mc2), 0.5);
      ad::Tensor l_o = ad::scale(ad::add(l_o1, l_o2), 0.5);
      ad::Tensor loss = ad::add(l_mc, ad::scale(l_o, cfg.mu));
      rec.trace_mc.push_back(l_mc.scalar());
      rec.trace_o.push_back(l_o.scalar());
      tape.backward(loss);

      auto bound = detail::bound_tensors(g1);
      for (auto& t : detail::bound_tensors(m1)) bound.push_back(t);
      for (auto& t : detail::bound_tensors(g2)) bound.push_back(t);
      for (auto& t : detail::bound_tensors(m2)) bound.push_back(t);
      std::vector<Matrix> grads = detail::collect_grads(bound);
      optimizer_step(params.ptrs, std::move(grads), adam, lr, cfg.grad_clip);

      double loss_value = rec.trace_mc.back() + cfg.mu * rec.trace_o.back();
      if (tracker.update(loss_value)) best_s = s1.value() * s2.value();
      if (tracker.since_decay >= cfg.lr_decay_patience) {
        lr *= 0.5;
        tracker.since_decay = 0;
      }
      rec.epochs_run = epoch + 1;
      if (tracker.since_best >= cfg.early_stop_patience) break;
    } catch (const std::runtime_error&) {
      rec.aborted_nonfinite = true;
      break;
    }
  }

  if (best_s.size() == 0) best_s = Matrix::Constant(g.n, k2, 1.0 / k2);
  rec.best_loss = tracker.best;
  rec.final_s = best_s;
  rec.report = clustering_report(g, best_s, truth);
  return rec;
}

}  // namespace detail

/// 2-layer clustering: MP - Pool - MP - Pool with composite S = S1 S2.
/// Restart handling mirrors run_clustering.
inline RunRecord run_clustering_2layer(const SparseGraph& g, const ExperimentConfig& cfg,
                                       std::uint64_t seed) {
  int restarts = std::max(1, cfg.restarts);
  RunRecord best;
  for (int r = 0; r < restarts; ++r) {
    std::uint64_t init_seed = r == 0 ? seed : seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(r);
    RunRecord rec = detail::run_clustering_2layer_attempt(g, cfg, seed, init_seed);
    if (r == 0 || rec.best_loss < best.best_loss) best = std::move(rec);
  }
  return best;
}

namespace detail {

struct GraphConstants {
  NormalizedAdjacency adj_norm;
  DegreeVector deg;
  MotifAdjacency a_tri;
  int k_pool1 = 1;  // int(n * ratio)
};

struct ClassifierParams {
  // the first block is two layers deep: the class signal in degree-matched
  // graph sets lives in >= 2-hop statistics, which must be computed on the
  // original graph before any coarsening
  GcnSkipParams gcn1, gcn1b, gcn2, gcn3;
  MlpParams assign1, assign2;  // pooling MLPs (widths sliced per graph)
  MlpParams head;              // dense x2 readout
};

struct ClassifierVars {
  GcnSkipVars gcn1, gcn1b, gcn2, gcn3;
  MlpVars assign1, assign2;
  MlpVars head;
};

inline ClassifierVars bind_classifier(ad::Tape& tape, ClassifierParams& p) {
  return {bind(tape, p.gcn1), bind(tape, p.gcn1b), bind(tape, p.gcn2), bind(tape, p.gcn3),
          bind(tape, p.assign1), bind(tape, p.assign2), bind(tape, p.head)};
}

/// Pooling MLP shared across graphs: logits for the widest pooled size, then
/// per-graph slice to k columns before the row softmax.
inline ad::Tensor sliced_assignment(const ad::Tensor& x, const MlpVars& mlp, int k) {
  ad::Tensor h = x;
  for (std::size_t l = 0; l < mlp.weights.size(); ++l) {
    h = ad::add_rowvec(ad::matmul(h, mlp.weights[l]), mlp.biases[l]);
    if (l + 1 < mlp.weights.size()) h = ad::relu(h);
  }
  return ad::softmax_rows(ad::left_cols(h, k));
}

struct GraphForward {
  ad::Tensor logits;            // 1 x C
  ad::Tensor l_unsup;           // scalar: mean over pooling blocks of L_mc + mu L_o
  Matrix s1_value;              // first-block assignment (diagnostics)
};

inline GraphForward classify_forward(ad::Tape& tape, const SparseGraph& g,
                                     const GraphConstants& gc, ClassifierVars& v,
                                     const ExperimentConfig& cfg, double a1, double a2,
                                     std::uint64_t graph_seed) {
  GraphForward out;
  ad::Tensor x = tape.constant(*g.features);
  ad::Tensor h1 = gcn_skip_forward(gc.adj_norm, x, v.gcn1);
  h1 = gcn_skip_forward(gc.adj_norm, h1, v.gcn1b);

  ad::Tensor pooled_x, pooled_adj;
  bool unsup = false;
  ad::Tensor l_unsup_acc = tape.constant_scalar(0.0);

  if (cfg.pooler == Pooler::NoPool) {
    ad::Tensor h2 = gcn_skip_forward(gc.adj_norm, h1, v.gcn2);
    ad::Tensor h3 = gcn_skip_forward(gc.adj_norm, h2, v.gcn3);
    ad::Tensor readout = ad::scale(ad::colsum(h3), 1.0 / g.n);
    if (cfg.global_skip) {
      readout = ad::concat_cols(readout,
                                ad::concat_cols(ad::scale(ad::colsum(h1), 1.0 / g.n),
                                                ad::scale(ad::colsum(h2), 1.0 / g.n)));
    }
    ad::Tensor hidden = ad::relu(
        ad::add_rowvec(ad::matmul(readout, v.head.weights[0]), v.head.biases[0]));
    out.logits = ad::add_rowvec(ad::matmul(hidden, v.head.weights[1]), v.head.biases[1]);
    out.l_unsup = l_unsup_acc;
    out.s1_value = Matrix::Ones(g.n, 1);
    return out;
  }

  int k1 = gc.k_pool1;
  ad::Tensor s1;
  if (cfg.pooler == Pooler::Random) {
    s1 = tape.constant(random_assignment(g.n, k1, graph_seed));
  } else {
    s1 = sliced_assignment(h1, v.assign1, k1);
    unsup = true;
  }
  out.s1_value = s1.value();
  PooledGraph p1 = coarsen(g.adj, h1, s1);
  if (unsup) {
    ad::Tensor l_mc1 =
        cfg.pooler == Pooler::MinCutLoss
            ? loss_mincut_ablation(s1, gc.adj_norm,
                                   [&] {
                                     Vector dn(g.n);
                                     for (int i = 0; i < g.n; ++i)
                                       dn[i] = gc.adj_norm.m.row_sum(i);
                                     return dn;
                                   }())
            : ad::add(ad::scale(loss_mc_term(s1, g.adj, gc.deg.d), a1),
                      ad::scale(loss_mc(s1, gc.a_tri), a2));
    l_unsup_acc = ad::add(l_unsup_acc,
                          ad::add(l_mc1, ad::scale(loss_ortho(s1), cfg.mu)));
  }

  ad::Tensor h2 = gcn_skip_forward_dense(p1.adj_pool, p1.x_pool, v.gcn2);
  int k2 = std::max(2, cluster_count(k1, cfg.pool_ratio));  // loss_ortho needs K >= 2
  ad::Tensor s2;
  if (cfg.pooler == Pooler::Random) {
    s2 = tape.constant(random_assignment(k1, k2, graph_seed ^ 0x9e3779b97f4a7c15ULL));
  } else {
    s2 = sliced_assignment(h2, v.assign2, k2);
  }
  ad::Tensor st2 = ad::transpose(s2);
  ad::Tensor a2_raw = ad::matmul(st2, ad::matmul(p1.adj_pool, s2));
  ad::Tensor a2_pool = detail::sym_normalize_dense(detail::drop_diagonal(a2_raw));
  ad::Tensor x2_pool = ad::matmul(st2, h2);
  if (unsup) {
    ad::Tensor l_mc2 = ad::add(
        ad::scale(loss_mc_term_dense(s2, p1.adj_pool), a1),
        ad::scale(loss_mc_tri_pooled(s2, p1.adj_pool, cfg.pooled_motif_threshold), a2));
    l_unsup_acc = ad::add(l_unsup_acc,
                          ad::add(l_mc2, ad::scale(loss_ortho(s2), cfg.mu)));
    l_unsup_acc = ad::scale(l_unsup_acc, 0.5);  // mean over the two blocks
  }

  ad::Tensor h3 = gcn_skip_forward_dense(a2_pool, x2_pool, v.gcn3);
  // pooled rows are node sums (X_pool = S^T X), so the global mean divides by
  // the number of underlying nodes; dividing by k2 would reintroduce a
  // graph-size scale once the cluster count bottoms out at 2
  ad::Tensor readout = ad::scale(ad::colsum(h3), 1.0 / g.n);
  if (cfg.global_skip) {
    // concatenated block readouts: the head can weight the block summaries
    // independently instead of having them summed into one vector
    readout = ad::concat_cols(readout,
                              ad::concat_cols(ad::scale(ad::colsum(h1), 1.0 / g.n),
                                              ad::scale(ad::colsum(h2), 1.0 / g.n)));
  }
  ad::Tensor hidden = ad::relu(
      ad::add_rowvec(ad::matmul(readout, v.head.weights[0]), v.head.biases[0]));
  out.logits = ad::add_rowvec(ad::matmul(hidden, v.head.weights[1]), v.head.biases[1]);
  out.l_unsup = l_unsup_acc;
  return out;
}

}  // namespace detail

/// Supervised graph classification:
/// GNN - Pool - GNN - Pool - GNN - global mean pool - Dense x2, joint loss.
inline RunRecord run_classification(const LabeledGraphSet& data, const ExperimentConfig& cfg,
                                    std::uint64_t seed) {
  if (data.train.empty() || data.val.empty() || data.test.empty())
    throw std::invalid_argument("run_classification: empty split");
  int f = static_cast<int>(data.graphs.front().features->cols());
  int classes = data.num_classes;

  std::vector<detail::GraphConstants> constants(data.graphs.size());
  int max_k1 = 1;
  for (std::size_t i = 0; i < data.graphs.size(); ++i) {
    const SparseGraph& g = data.graphs[i];
    constants[i].adj_norm = sym_normalize(g);
    constants[i].deg = degrees(g);
    constants[i].a_tri = triangle_adjacency(g);
    constants[i].k_pool1 = std::max(2, cluster_count(g.n, cfg.pool_ratio));
    max_k1 = std::max(max_k1, constants[i].k_pool1);
  }
  int max_k2 = 1;
  for (auto& gc : constants)
    max_k2 = std::max(max_k2, std::max(2, cluster_count(gc.k_pool1, cfg.pool_ratio)));

  std::mt19937_64 rng(seed);
  detail::ClassifierParams params;
  params.gcn1 = make_gcn_skip(f, cfg.hidden, rng);
  params.gcn1b = make_gcn_skip(cfg.hidden, cfg.hidden, rng);
  params.gcn2 = make_gcn_skip(cfg.hidden, cfg.hidden, rng);
  params.gcn3 = make_gcn_skip(cfg.hidden, cfg.hidden, rng);
  params.assign1 = make_mlp(cfg.hidden, {cfg.hidden, max_k1}, rng);
  params.assign2 = make_mlp(cfg.hidden, {cfg.hidden, max_k2}, rng);
  int readout_dim = cfg.global_skip ? 3 * cfg.hidden : cfg.hidden;
  params.head = make_mlp(readout_dim, {cfg.hidden, classes}, rng);

  detail::ParamSet pset;
  pset.add(params.gcn1);
  pset.add(params.gcn1b);
  pset.add(params.gcn2);
  pset.add(params.gcn3);
  bool trains_assign = cfg.pooler != Pooler::Random && cfg.pooler != Pooler::NoPool;
  if (trains_assign) {
    pset.add(params.assign1);
    pset.add(params.assign2);
  }
  pset.add(params.head);
  AdamState adam = make_adam_state(pset.ptrs);

  AlphaSchedule schedule = cfg.alpha;
  schedule.ramp_epochs = cfg.alpha_ramp();

  auto evaluate = [&](const std::vector<int>& indices, double* loss_out) {
    int correct = 0;
    double loss_total = 0.0;
    for (int gi : indices) {
      ad::Tape tape;
      detail::ClassifierVars vars = detail::bind_classifier(tape, params);
      auto [a1, a2] = alpha_at(schedule, cfg.max_epochs);  // floor mixture for eval
      detail::GraphForward fw = detail::classify_forward(
          tape, data.graphs[gi], constants[gi], vars, cfg, a1, a2, seed + gi);
      const Matrix& z = fw.logits.value();
      int pred = 0;
      for (int c = 1; c < classes; ++c)
        if (z(0, c) > z(0, pred)) pred = c;
      if (pred == *data.graphs[gi].graph_label) ++correct;
      ad::Tensor ce = ad::cross_entropy_logits(fw.logits, {*data.graphs[gi].graph_label});
      loss_total += ce.scalar();
    }
    if (loss_out) *loss_out = loss_total / indices.size();
    return static_cast<double>(correct) / indices.size();
  };

  RunRecord rec;
  rec.seed = seed;
  double lr = cfg.lr;
  double best_val_acc = -1.0, best_val_loss = std::numeric_limits<double>::infinity();
  detail::ClassifierParams best_params = params;
  detail::PlateauTracker tracker;

  std::vector<int> order = data.train;
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_sup = 0.0, epoch_unsup = 0.0;
    int batches = 0;
    bool failed = false;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      ad::Tape tape;
      detail::ClassifierVars vars = detail::bind_classifier(tape, params);
      auto [a1, a2] = alpha_at(schedule, epoch);
      try {
        ad::Tensor batch_loss = tape.constant_scalar(0.0);
        for (std::size_t b = start; b < stop; ++b) {
          int gi = order[b];
          detail::GraphForward fw = detail::classify_forward(
              tape, data.graphs[gi], constants[gi], vars, cfg, a1, a2, seed + gi);
          ad::Tensor l_sup =
              ad::cross_entropy_logits(fw.logits, {*data.graphs[gi].graph_label});
          batch_loss = ad::add(batch_loss, ad::add(fw.l_unsup, l_sup));
          epoch_sup += l_sup.scalar();
          epoch_unsup += fw.l_unsup.scalar();
        }
        batch_loss = ad::scale(batch_loss, 1.0 / static_cast<double>(stop - start));
        tape.backward(batch_loss);

        std::vector<ad::Tensor> bound = detail::bound_tensors(vars.gcn1);
        for (auto& t : detail::bound_tensors(vars.gcn1b)) bound.push_back(t);
        for (auto& t : detail::bound_tensors(vars.gcn2)) bound.push_back(t);
        for (auto& t : detail::bound_tensors(vars.gcn3)) bound.push_back(t);
        if (trains_assign) {
          for (auto& t : detail::bound_tensors(vars.assign1)) bound.push_back(t);
          for (auto& t : detail::bound_tensors(vars.assign2)) bound.push_back(t);
        }
        for (auto& t : detail::bound_tensors(vars.head)) bound.push_back(t);
        std::vector<Matrix> grads = detail::collect_grads(bound);
        optimizer_step(pset.ptrs, std::move(grads), adam, lr, cfg.grad_clip);
        ++batches;
      } catch (const std::runtime_error&) {
        rec.aborted_nonfinite = true;
        failed = true;
        break;
      }
    }
    if (failed) break;
    int train_graphs = static_cast<int>(order.size());
    rec.trace_sup.push_back(epoch_sup / train_graphs);
    rec.trace_mc.push_back(epoch_unsup / train_graphs);
    rec.epochs_run = epoch + 1;

    double val_loss = 0.0;
    double val_acc = evaluate(data.val, &val_loss);
    bool better = val_acc > best_val_acc ||
                  (val_acc == best_val_acc && val_loss < best_val_loss);
    if (better) {
      best_val_acc = val_acc;
      best_val_loss = val_loss;
      best_params = params;
    }
    // plateau tracking on negative accuracy: lower is better
    tracker.update(-val_acc);
    if (tracker.since_decay >= cfg.lr_decay_patience) {
      lr *= 0.5;
      tracker.since_decay = 0;
    }
    if (tracker.since_best >= cfg.early_stop_patience) break;
  }

  params = best_params;
  rec.test_accuracy = evaluate(data.test, nullptr);
  return rec;
}

/// Runs one clustering-mode config over its seed list and returns the records
/// in seed order.
inline std::vector<RunRecord> run_seeds(const SparseGraph& g, const ExperimentConfig& cfg) {
  std::vector<RunRecord> out;
  for (std::uint64_t seed : cfg.seeds) {
    if (cfg.mode == RunMode::Cluster2Layer)
      out.push_back(run_clustering_2layer(g, cfg, seed));
    else
      out.push_back(run_clustering(g, cfg, seed));
  }
  return out;
}

inline std::pair<double, double> mean_std(const std::vector<double>& xs) {
  double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var = xs.size() > 1 ? var / (xs.size() - 1) : 0.0;
  return {mean, std::sqrt(var)};
}

}  // namespace hosc
