#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hosc/graph.hpp"
#include "hosc/motif.hpp"

namespace hosc {

/// Graph-classification dataset with disjoint, exhaustive 80/10/10 splits.
struct LabeledGraphSet {
  std::vector<SparseGraph> graphs;
  std::vector<int> train, val, test;
  int num_classes = 0;
};

namespace detail {

inline Matrix gaussian_features(int n, int f, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix x(n, f);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < f; ++j) x(i, j) = normal(rng);
  return x;
}

inline bool have_common_neighbor(const std::vector<std::set<int>>& adj, int i, int j) {
  const std::set<int>& a = adj[i].size() <= adj[j].size() ? adj[i] : adj[j];
  const std::set<int>& b = adj[i].size() <= adj[j].size() ? adj[j] : adj[i];
  for (int x : a)
    if (b.count(x)) return true;
  return false;
}

inline void zscore_columns(Matrix& x) {
  for (int j = 0; j < x.cols(); ++j) {
    double mean = x.col(j).mean();
    double var = (x.col(j).array() - mean).square().mean();
    double sd = std::sqrt(var);
    if (sd > 1e-12)
      x.col(j) = (x.col(j).array() - mean) / sd;
    else
      x.col(j).array() -= mean;
  }
}

}  // namespace detail

struct Syn1Params {
  int communities = 3;
  int community_size = 100;
  int extra_triples = 30;      // random triples on top of the covering chain
  double inter_ratio = 2.0;    // inter-edge target as a multiple of intra edges
  int feature_dim = 10;
};

/// k communities densely intra-connected by triangles, linked across by
/// edges that create no new triangles. Node labels are the communities;
/// features are Gaussian with one label-correlated column.
inline SparseGraph gen_syn1(const Syn1Params& params, std::uint64_t seed) {
  if (params.communities < 2) throw std::invalid_argument("gen_syn1: need >= 2 communities");
  std::mt19937_64 rng(seed);
  const int k = params.communities;
  const int m = params.community_size;
  const int n = k * m;
  std::vector<std::set<int>> adj(n);
  auto add_edge = [&](int a, int b) {
    if (a != b) {
      adj[a].insert(b);
      adj[b].insert(a);
    }
  };
  auto add_triple = [&](int a, int b, int c) {
    add_edge(a, b);
    add_edge(b, c);
    add_edge(a, c);
  };

  for (int c = 0; c < k; ++c) {
    const int base = c * m;
    // overlapping chain of triangles covering the whole community, closed at
    // the end so G_M restricted to the community is connected
    for (int i = 0; i + 2 < m; i += 2) add_triple(base + i, base + i + 1, base + i + 2);
    add_triple(base + m - 2, base + m - 1, base);
    std::uniform_int_distribution<int> uni(0, m - 1);
    for (int t = 0; t < params.extra_triples; ++t) {
      int a = uni(rng), b = uni(rng), cc = uni(rng);
      if (a == b || b == cc || a == cc) {
        --t;
        continue;
      }
      add_triple(base + a, base + b, base + cc);
    }
  }

  long long intra_edges = 0;
  for (int i = 0; i < n; ++i) intra_edges += static_cast<long long>(adj[i].size());
  intra_edges /= 2;

  // inter-community edges between pairs with empty common neighbourhoods
  long long target = static_cast<long long>(params.inter_ratio * intra_edges);
  std::uniform_int_distribution<int> any(0, n - 1);
  long long placed = 0, attempts = 0;
  const long long max_attempts = 200 * std::max<long long>(target, 1);
  while (placed < target) {
    if (++attempts > max_attempts)
      throw std::runtime_error("gen_syn1: cannot place triangle-free inter links");
    int i = any(rng), j = any(rng);
    if (i / m == j / m) continue;
    if (adj[i].count(j)) continue;
    if (detail::have_common_neighbor(adj, i, j)) continue;
    add_edge(i, j);
    ++placed;
  }

  std::vector<std::tuple<int, int, double>> edges;
  for (int i = 0; i < n; ++i)
    for (int j : adj[i])
      if (j > i) edges.emplace_back(i, j, 1.0);

  Matrix x = detail::gaussian_features(n, params.feature_dim, rng);
  std::normal_distribution<double> noise(0.0, 0.2);
  for (int i = 0; i < n; ++i) x(i, 0) = static_cast<double>(i / m) + noise(rng);
  detail::zscore_columns(x);

  SparseGraph g = build_graph(edges, n, x);
  g.node_labels = std::vector<int>(n);
  for (int i = 0; i < n; ++i) (*g.node_labels)[i] = i / m;
  return g;
}

inline SparseGraph gen_syn1(int communities, std::uint64_t seed) {
  Syn1Params p;
  p.communities = communities;
  return gen_syn1(p, seed);
}

/// Erdos-Renyi G(1000, 0.012); label 1 iff the node lies in a triangle.
/// Features: degree, per-node triangle count, clustering coefficient, and
/// Gaussian noise columns up to F = 10, z-scored.
inline SparseGraph gen_syn2(std::uint64_t seed, int n = 1000, double p = 0.012) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::tuple<int, int, double>> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (u(rng) < p) edges.emplace_back(i, j, 1.0);
  SparseGraph g = build_graph(edges, n);

  MotifAdjacency m = triangle_adjacency(g);
  g.node_labels = std::vector<int>(n);
  for (int i = 0; i < n; ++i) (*g.node_labels)[i] = m.d_m[i] > 0 ? 1 : 0;

  const int f = 10;
  Matrix x = detail::gaussian_features(n, f, rng);
  Vector deg = degrees(g).d;
  for (int i = 0; i < n; ++i) {
    double d = deg[i];
    double tri = m.d_m[i] / 2.0;  // triangles containing node i
    double cc = d >= 2 ? 2.0 * tri / (d * (d - 1.0)) : 0.0;
    x(i, 0) = d;
    x(i, 1) = tri;
    x(i, 2) = cc;
  }
  detail::zscore_columns(x);
  g.features = x;
  return g;
}

/// Gaussian random partition graph: k partitions with normally distributed
/// sizes, intra-edge probability 0.8, inter 0.2. Random features only.
inline SparseGraph gen_syn3(int k, std::uint64_t seed, int n = 500,
                            double p_in = 0.8, double p_out = 0.2,
                            int feature_dim = 50) {
  if (k < 2) throw std::invalid_argument("gen_syn3: need >= 2 partitions");
  std::mt19937_64 rng(seed);
  // Sizes are normal around n/k with a small spread: near-balanced partitions
  // keep the balance regulariser's optimum aligned with the planted partition.
  std::normal_distribution<double> size_dist(static_cast<double>(n) / k,
                                             static_cast<double>(n) / (6.0 * k));
  std::vector<int> sizes(k);
  int assigned = 0;
  for (int c = 0; c + 1 < k; ++c) {
    int s = std::max(2, static_cast<int>(std::lround(size_dist(rng))));
    s = std::min(s, n - assigned - 2 * (k - c - 1));
    sizes[c] = s;
    assigned += s;
  }
  sizes[k - 1] = n - assigned;

  std::vector<int> labels(n);
  int node = 0;
  for (int c = 0; c < k; ++c)
    for (int s = 0; s < sizes[c]; ++s) labels[node++] = c;

  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::tuple<int, int, double>> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      double p = labels[i] == labels[j] ? p_in : p_out;
      if (u(rng) < p) edges.emplace_back(i, j, 1.0);
    }

  // Purely label-independent features. The width matters: each i.i.d. column
  // adds an independent view of a node's neighbourhood once aggregated by the
  // message-passing layer, so a wider X makes the partition recoverable by a
  // single propagation step while the features stay individually uninformative.
  Matrix x = detail::gaussian_features(n, feature_dim, rng);
  SparseGraph g = build_graph(edges, n, x);
  g.node_labels = labels;
  return g;
}

/// Zachary's karate club with the standard two-faction labels and seeded
/// 10-dimensional Gaussian features.
inline SparseGraph karate_graph(std::uint64_t feature_seed = 0) {
  static const int kEdges[][2] = {
      {0, 1},  {0, 2},  {0, 3},  {0, 4},  {0, 5},  {0, 6},  {0, 7},  {0, 8},
      {0, 10}, {0, 11}, {0, 12}, {0, 13}, {0, 17}, {0, 19}, {0, 21}, {0, 31},
      {1, 2},  {1, 3},  {1, 7},  {1, 13}, {1, 17}, {1, 19}, {1, 21}, {1, 30},
      {2, 3},  {2, 7},  {2, 8},  {2, 9},  {2, 13}, {2, 27}, {2, 28}, {2, 32},
      {3, 7},  {3, 12}, {3, 13}, {4, 6},  {4, 10}, {5, 6},  {5, 10}, {5, 16},
      {6, 16}, {8, 30}, {8, 32}, {8, 33}, {9, 33}, {13, 33}, {14, 32}, {14, 33},
      {15, 32}, {15, 33}, {18, 32}, {18, 33}, {19, 33}, {20, 32}, {20, 33},
      {22, 32}, {22, 33}, {23, 25}, {23, 27}, {23, 29}, {23, 32}, {23, 33},
      {24, 25}, {24, 27}, {24, 31}, {25, 31}, {26, 29}, {26, 33}, {27, 33},
      {28, 31}, {28, 33}, {29, 32}, {29, 33}, {30, 32}, {30, 33}, {31, 32},
      {31, 33}, {32, 33}};
  static const int kLabels[34] = {0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 0, 0, 0, 0, 1, 1, 0,
                                  0, 1, 0, 1, 0, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1};
  std::vector<std::tuple<int, int, double>> edges;
  for (auto& e : kEdges) edges.emplace_back(e[0], e[1], 1.0);
  std::mt19937_64 rng(0x6b617261746532ULL + feature_seed);
  SparseGraph g = build_graph(edges, 34, detail::gaussian_features(34, 10, rng));
  g.node_labels = std::vector<int>(kLabels, kLabels + 34);
  return g;
}

namespace detail {

inline void stratified_split(LabeledGraphSet& set, std::mt19937_64& rng) {
  std::map<int, std::vector<int>> by_label;
  for (std::size_t i = 0; i < set.graphs.size(); ++i)
    by_label[set.graphs[i].graph_label.value()].push_back(static_cast<int>(i));
  for (auto& [label, idx] : by_label) {
    std::shuffle(idx.begin(), idx.end(), rng);
    std::size_t n_test = idx.size() / 10;
    std::size_t n_val = idx.size() / 10;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (i < n_test)
        set.test.push_back(idx[i]);
      else if (i < n_test + n_val)
        set.val.push_back(idx[i]);
      else
        set.train.push_back(idx[i]);
    }
  }
  std::sort(set.train.begin(), set.train.end());
  std::sort(set.val.begin(), set.val.end());
  std::sort(set.test.begin(), set.test.end());
}

}  // namespace detail

/// Two-class synthetic graph-classification set: class 0 graphs carry planted
/// triangle communities; class 1 graphs share the exact degree sequence but
/// are rewired until triangle-free, so only higher-order wiring separates the
/// classes. Constant features.
inline LabeledGraphSet gen_gc_synthetic(int n_graphs, std::uint64_t seed) {
  if (n_graphs < 20) throw std::invalid_argument("gen_gc_synthetic: need >= 20 graphs");
  std::mt19937_64 rng(seed);
  LabeledGraphSet set;
  set.num_classes = 2;
  std::uniform_int_distribution<int> size_dist(60, 90);
  for (int gi = 0; gi < n_graphs; ++gi) {
    int label = gi % 2;
    int n = size_dist(rng);
    std::vector<std::set<int>> adj(n);
    auto add_edge = [&](int a, int b) {
      if (a != b) {
        adj[a].insert(b);
        adj[b].insert(a);
      }
    };
    // base structure shared by both classes: three triangle communities
    int m = n / 3;
    for (int c = 0; c < 3; ++c) {
      int base = c * m;
      int top = c == 2 ? n : base + m;
      int size = top - base;
      for (int i = 0; i + 2 < size; i += 2)
        add_edge(base + i, base + i + 1), add_edge(base + i + 1, base + i + 2),
            add_edge(base + i, base + i + 2);
      std::uniform_int_distribution<int> uni(0, size - 1);
      for (int t = 0; t < size / 3; ++t) {
        int a = uni(rng), b = uni(rng), cc = uni(rng);
        if (a == b || b == cc || a == cc) {
          --t;
          continue;
        }
        add_edge(base + a, base + b);
        add_edge(base + b, base + cc);
        add_edge(base + a, base + cc);
      }
    }
    std::uniform_int_distribution<int> any(0, n - 1);
    for (int t = 0; t < n / 4; ++t) {
      int i = any(rng), j = any(rng);
      if (i == j || i / m == std::min(j / m, 2) || adj[i].count(j)) continue;
      if (!detail::have_common_neighbor(adj, i, j)) add_edge(i, j);
    }

    if (label == 1) {
      // degree-preserving double-edge swaps applied until no triangle
      // survives; each swap replaces a triangle edge (a,b) and a random edge
      // (c,d) with (a,d) and (c,b)
      auto triangle_edge = [&](int& a, int& b) {
        for (int i = 0; i < n; ++i)
          for (int j : adj[i])
            if (j > i)
              for (int k : adj[i])
                if (k != j && adj[j].count(k)) {
                  a = i;
                  b = j;
                  return true;
                }
        return false;
      };
      std::vector<std::pair<int, int>> edge_list;
      auto rebuild_edges = [&] {
        edge_list.clear();
        for (int i = 0; i < n; ++i)
          for (int j : adj[i])
            if (j > i) edge_list.emplace_back(i, j);
      };
      rebuild_edges();
      std::uniform_int_distribution<std::size_t> pick(0, edge_list.size() - 1);
      int a, b;
      long long guard = 0;
      while (triangle_edge(a, b)) {
        if (++guard > 2000000) throw std::runtime_error("gen_gc_synthetic: rewiring stalled");
        auto [c, d] = edge_list[pick(rng)];
        if (std::uniform_int_distribution<int>(0, 1)(rng)) std::swap(c, d);
        bool distinct = a != c && a != d && b != c && b != d;
        if (!distinct || adj[a].count(d) || adj[c].count(b)) continue;
        adj[a].erase(b), adj[b].erase(a);
        adj[c].erase(d), adj[d].erase(c);
        add_edge(a, d);
        add_edge(c, b);
        rebuild_edges();
        pick = std::uniform_int_distribution<std::size_t>(0, edge_list.size() - 1);
      }
    }

    std::vector<std::tuple<int, int, double>> edges;
    for (int i = 0; i < n; ++i)
      for (int j : adj[i])
        if (j > i) edges.emplace_back(i, j, 1.0);
    SparseGraph g = build_graph(edges, n, Matrix::Ones(n, 3));
    g.graph_label = label;
    set.graphs.push_back(std::move(g));
  }
  detail::stratified_split(set, rng);
  return set;
}

// ---------------------------------------------------------------------------
// File formats
// ---------------------------------------------------------------------------

/// Edge-list text format: one `i j [weight]` per line, `#` comments, 0-based.
inline SparseGraph load_edge_list(const std::filesystem::path& path, int n = -1) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_edge_list: cannot open " + path.string());
  std::vector<std::tuple<int, int, double>> edges;
  int max_node = -1;
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::istringstream ss(line);
    int i, j;
    double w = 1.0;
    if (!(ss >> i >> j)) continue;
    ss >> w;
    edges.emplace_back(i, j, w);
    max_node = std::max({max_node, i, j});
  }
  if (n < 0) n = max_node + 1;
  return build_graph(edges, n);
}

inline void save_edge_list(const SparseGraph& g, const std::filesystem::path& path) {
  std::ofstream out(path);
  out << "# " << g.n << " nodes\n";
  for (int i = 0; i < g.n; ++i)
    for (int p = g.adj.row_ptr[i]; p < g.adj.row_ptr[i + 1]; ++p) {
      int j = g.adj.col_idx[p];
      if (j > i) out << i << " " << j << " " << g.adj.values[p] << "\n";
    }
}

/// Sidecar feature file: CSV, one row per node.
inline Matrix load_feature_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_feature_csv: cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("load_feature_csv: empty file");
  Matrix x(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size())
      throw std::runtime_error("load_feature_csv: ragged rows");
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      x(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
  }
  return x;
}

inline void save_feature_csv(const Matrix& x, const std::filesystem::path& path) {
  std::ofstream out(path);
  out.precision(std::numeric_limits<double>::max_digits10);  // exact round trip
  for (int i = 0; i < x.rows(); ++i) {
    for (int j = 0; j < x.cols(); ++j) out << (j ? "," : "") << x(i, j);
    out << "\n";
  }
}

/// Label file: one integer per line.
inline std::vector<int> load_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_labels: cannot open " + path.string());
  std::vector<int> labels;
  int v;
  while (in >> v) labels.push_back(v);
  return labels;
}

inline void save_labels(const std::vector<int>& labels, const std::filesystem::path& path) {
  std::ofstream out(path);
  for (int l : labels) out << l << "\n";
}

namespace detail {

inline std::vector<int> read_int_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("missing mandatory file " + path.string());
  std::vector<int> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    out.push_back(std::stoi(line));
  }
  return out;
}

}  // namespace detail

/// Loads a TUDataset-format directory (DS_A.txt with comma-separated 1-based
/// pairs, DS_graph_indicator.txt, DS_graph_labels.txt, optional
/// DS_node_labels.txt / DS_node_attributes.txt). Node labels become one-hot
/// features when attributes are absent; featureless graphs get constant
/// features.
inline LabeledGraphSet load_tu_dataset(const std::filesystem::path& dir,
                                       std::uint64_t split_seed = 0) {
  namespace fs = std::filesystem;
  std::string ds;
  for (auto& entry : fs::directory_iterator(dir)) {
    std::string name = entry.path().filename().string();
    auto pos = name.find("_A.txt");
    if (pos != std::string::npos) ds = name.substr(0, pos);
  }
  if (ds.empty()) throw std::runtime_error("load_tu_dataset: no *_A.txt in " + dir.string());

  std::vector<int> indicator = detail::read_int_lines(dir / (ds + "_graph_indicator.txt"));
  std::vector<int> graph_labels_raw = detail::read_int_lines(dir / (ds + "_graph_labels.txt"));
  int num_graphs = static_cast<int>(graph_labels_raw.size());
  int total_nodes = static_cast<int>(indicator.size());
  for (int gi : indicator)
    if (gi < 1 || gi > num_graphs)
      throw std::runtime_error("load_tu_dataset: indicator references graph " +
                               std::to_string(gi) + " with only " +
                               std::to_string(num_graphs) + " labels");

  // relabel graph classes to 0..C-1
  std::map<int, int> class_map;
  for (int l : graph_labels_raw) class_map.emplace(l, 0);
  int next_class = 0;
  for (auto& [raw, mapped] : class_map) mapped = next_class++;

  std::vector<int> node_of_graph(total_nodes);   // local index within graph
  std::vector<int> graph_size(num_graphs, 0);
  std::vector<int> graph_of_node(total_nodes);
  for (int v = 0; v < total_nodes; ++v) {
    int gi = indicator[v] - 1;
    graph_of_node[v] = gi;
    node_of_graph[v] = graph_size[gi]++;
  }

  std::vector<std::vector<std::tuple<int, int, double>>> edges(num_graphs);
  {
    std::ifstream in(dir / (ds + "_A.txt"));
    if (!in) throw std::runtime_error("missing mandatory file " + (dir / (ds + "_A.txt")).string());
    std::string line;
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
      std::replace(line.begin(), line.end(), ',', ' ');
      std::istringstream ss(line);
      int a, b;
      if (!(ss >> a >> b)) continue;
      int u = a - 1, v = b - 1;
      if (u < 0 || u >= total_nodes || v < 0 || v >= total_nodes)
        throw std::runtime_error("load_tu_dataset: edge endpoint out of range");
      if (graph_of_node[u] != graph_of_node[v])
        throw std::runtime_error("load_tu_dataset: edge crosses graphs");
      edges[graph_of_node[u]].emplace_back(node_of_graph[u], node_of_graph[v], 1.0);
    }
  }

  std::vector<int> node_labels;
  bool have_node_labels = fs::exists(dir / (ds + "_node_labels.txt"));
  if (have_node_labels) node_labels = detail::read_int_lines(dir / (ds + "_node_labels.txt"));
  bool have_attrs = fs::exists(dir / (ds + "_node_attributes.txt"));
  Matrix attrs;
  if (have_attrs) attrs = load_feature_csv(dir / (ds + "_node_attributes.txt"));

  int label_width = 0;
  std::map<int, int> node_label_map;
  if (have_node_labels) {
    for (int l : node_labels) node_label_map.emplace(l, 0);
    for (auto& [raw, mapped] : node_label_map) mapped = label_width++;
  }

  LabeledGraphSet set;
  set.num_classes = next_class;
  set.graphs.resize(num_graphs);
  for (int gi = 0; gi < num_graphs; ++gi) {
    int n = graph_size[gi];
    SparseGraph g = build_graph(edges[gi], n);
    g.graph_label = class_map[graph_labels_raw[gi]];
    set.graphs[gi] = std::move(g);
  }
  for (int gi = 0; gi < num_graphs; ++gi) {
    int n = graph_size[gi];
    Matrix x;
    if (have_attrs) {
      x = Matrix::Zero(n, attrs.cols());
    } else if (have_node_labels) {
      x = Matrix::Zero(n, label_width);
    } else {
      x = Matrix::Ones(n, 1);
    }
    set.graphs[gi].features = x;
  }
  if (have_attrs || have_node_labels) {
    for (int v = 0; v < total_nodes; ++v) {
      int gi = graph_of_node[v], local = node_of_graph[v];
      Matrix& x = *set.graphs[gi].features;
      if (have_attrs)
        x.row(local) = attrs.row(v);
      else
        x(local, node_label_map[node_labels.at(v)]) = 1.0;
    }
  }

  std::mt19937_64 rng(split_seed);
  detail::stratified_split(set, rng);
  return set;
}

}  // namespace hosc
