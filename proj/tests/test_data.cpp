#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "helpers.hpp"
#include "hosc/data.hpp"
#include "hosc/motif.hpp"

using namespace hosc;
namespace fs = std::filesystem;

namespace {

bool same_graph(const SparseGraph& a, const SparseGraph& b) {
  if (a.n != b.n || a.adj.row_ptr != b.adj.row_ptr || a.adj.col_idx != b.adj.col_idx ||
      a.adj.values != b.adj.values)
    return false;
  if (a.features.has_value() != b.features.has_value()) return false;
  if (a.features && *a.features != *b.features) return false;
  return a.node_labels == b.node_labels && a.graph_label == b.graph_label;
}

}  // namespace

TEST_CASE("generators are seed-deterministic") {
  CHECK(same_graph(gen_syn1(3, 4), gen_syn1(3, 4)));
  CHECK(same_graph(gen_syn2(4, 200, 0.02), gen_syn2(4, 200, 0.02)));
  CHECK(same_graph(gen_syn3(4, 4, 120), gen_syn3(4, 4, 120)));
  CHECK(same_graph(karate_graph(1), karate_graph(1)));
  LabeledGraphSet a = gen_gc_synthetic(20, 4), b = gen_gc_synthetic(20, 4);
  REQUIRE(a.graphs.size() == b.graphs.size());
  for (std::size_t i = 0; i < a.graphs.size(); ++i) CHECK(same_graph(a.graphs[i], b.graphs[i]));
  CHECK(a.train == b.train);
  CHECK(a.val == b.val);
  CHECK(a.test == b.test);
}

TEST_CASE("syn1 keeps triangles inside communities") {
  Syn1Params params;
  params.community_size = 30;
  params.extra_triples = 10;
  SparseGraph g = gen_syn1(params, 0);
  const std::vector<int>& labels = *g.node_labels;

  // no inter-community edge closes a triangle: endpoints share no neighbour
  Matrix a = g.adj.dense();
  long long cross_triangles = 0, intra_triangles = 0;
  for (int i = 0; i < g.n; ++i)
    for (int j = i + 1; j < g.n; ++j)
      for (int k = j + 1; k < g.n; ++k) {
        if (a(i, j) == 0 || a(j, k) == 0 || a(i, k) == 0) continue;
        if (labels[i] == labels[j] && labels[j] == labels[k])
          ++intra_triangles;
        else
          ++cross_triangles;
      }
  CHECK(intra_triangles > 0);
  CHECK(cross_triangles == 0);

  // and explicitly: every cross-community edge has an empty common neighbourhood
  for (int i = 0; i < g.n; ++i)
    for (int p = g.adj.row_ptr[i]; p < g.adj.row_ptr[i + 1]; ++p) {
      int j = g.adj.col_idx[p];
      if (labels[i] == labels[j]) continue;
      CHECK((a.row(i).array() * a.row(j).array()).sum() == 0.0);
    }
}

TEST_CASE("syn2 labels mark triangle membership") {
  SparseGraph g = gen_syn2(3, 300, 0.02);
  MotifAdjacency m = triangle_adjacency(g);
  for (int i = 0; i < g.n; ++i)
    CHECK((*g.node_labels)[i] == (m.d_m[i] > 0 ? 1 : 0));
}

TEST_CASE("syn2 default edge count is in the binomial range") {
  SparseGraph g = gen_syn2(0);
  CHECK(g.n == 1000);
  CHECK(g.num_edges() >= 5000);
  CHECK(g.num_edges() <= 7000);
}

TEST_CASE("syn3 has denser intra-partition wiring") {
  SparseGraph g = gen_syn3(5, 0);
  CHECK(g.n == 500);
  const std::vector<int>& labels = *g.node_labels;
  long long intra = 0, inter = 0, intra_pairs = 0, inter_pairs = 0;
  Matrix a = g.adj.dense();
  for (int i = 0; i < g.n; ++i)
    for (int j = i + 1; j < g.n; ++j) {
      bool same = labels[i] == labels[j];
      (same ? intra_pairs : inter_pairs)++;
      if (a(i, j) != 0) (same ? intra : inter)++;
    }
  CHECK(static_cast<double>(intra) / intra_pairs > static_cast<double>(inter) / inter_pairs);
}

TEST_CASE("graph classification set separates classes by triangles only") {
  LabeledGraphSet set = gen_gc_synthetic(30, 1);
  CHECK(set.num_classes == 2);
  for (const SparseGraph& g : set.graphs) {
    long long triangles = triangle_count(triangle_adjacency(g));
    if (*g.graph_label == 1)
      CHECK(triangles == 0);
    else
      CHECK(triangles >= g.n / 10);
  }
}

TEST_CASE("splits are disjoint, exhaustive, stratified, 80/10/10") {
  LabeledGraphSet set = gen_gc_synthetic(100, 2);
  CHECK(set.train.size() == 80);
  CHECK(set.val.size() == 10);
  CHECK(set.test.size() == 10);
  std::set<int> all;
  for (auto* part : {&set.train, &set.val, &set.test})
    for (int i : *part) CHECK(all.insert(i).second);
  CHECK(all.size() == set.graphs.size());
  // stratified: every split carries both classes
  for (auto* part : {&set.train, &set.val, &set.test}) {
    std::set<int> classes;
    for (int i : *part) classes.insert(*set.graphs[i].graph_label);
    CHECK(classes.size() == 2);
  }
}

TEST_CASE("edge list round trip") {
  SparseGraph g = test::random_graph(15, 0.3, 6);
  fs::path p = fs::temp_directory_path() / "hosc_edges_test.txt";
  save_edge_list(g, p);
  SparseGraph back = load_edge_list(p);
  CHECK(back.n == g.n);
  CHECK(back.adj.dense().cwiseEqual(g.adj.dense()).all());
  fs::remove(p);
}

TEST_CASE("feature csv round trip") {
  Matrix x = Matrix::Random(6, 3);
  fs::path p = fs::temp_directory_path() / "hosc_feat_test.csv";
  save_feature_csv(x, p);
  CHECK((load_feature_csv(p) - x).cwiseAbs().maxCoeff() < 1e-12);
  fs::remove(p);
}

namespace {

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p);
  out << content;
}

fs::path make_tu_fixture(bool bad_indicator, bool with_node_labels) {
  fs::path dir = fs::temp_directory_path() / "hosc_tu_fixture";
  fs::remove_all(dir);
  fs::create_directories(dir);
  // graph 1: triangle on 3 nodes, graph 2: single edge on 2 nodes
  write_file(dir / "DS_A.txt", "1, 2\n2, 1\n2, 3\n3, 2\n1, 3\n3, 1\n4, 5\n5, 4\n");
  write_file(dir / "DS_graph_indicator.txt",
             bad_indicator ? "1\n1\n1\n3\n3\n" : "1\n1\n1\n2\n2\n");
  write_file(dir / "DS_graph_labels.txt", "1\n-1\n");
  if (with_node_labels) write_file(dir / "DS_node_labels.txt", "0\n0\n1\n1\n2\n");
  return dir;
}

}  // namespace

TEST_CASE("tu loader parses the two-graph fixture") {
  fs::path dir = make_tu_fixture(false, false);
  LabeledGraphSet set = load_tu_dataset(dir);
  REQUIRE(set.graphs.size() == 2);
  CHECK(set.graphs[0].n == 3);
  CHECK(set.graphs[1].n == 2);
  CHECK(set.graphs[0].num_edges() == 3);
  CHECK(set.graphs[1].num_edges() == 1);
  CHECK(set.num_classes == 2);
  // featureless graphs fall back to constant features
  REQUIRE(set.graphs[0].features.has_value());
  CHECK(set.graphs[0].features->cols() >= 1);
  fs::remove_all(dir);
}

TEST_CASE("tu loader one-hot encodes node labels") {
  fs::path dir = make_tu_fixture(false, true);
  LabeledGraphSet set = load_tu_dataset(dir);
  CHECK(set.graphs[0].features->cols() == 3);  // three distinct node labels
  CHECK(set.graphs[0].features->row(0).sum() == 1.0);
  fs::remove_all(dir);
}

TEST_CASE("tu loader rejects inconsistent indicators") {
  fs::path dir = make_tu_fixture(true, false);
  CHECK_THROWS(load_tu_dataset(dir));
  fs::remove_all(dir);
}
