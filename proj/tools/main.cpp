// hosc CLI: dataset generation, clustering/classification sweeps, motif
// inspection, metrics, and oracle verification. JSON in, JSON/CSV out.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "hosc/pipeline.hpp"
#include "hosc/spectral.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hosc;

namespace {

constexpr int kExitBadArgs = 1;
constexpr int kExitDataError = 2;
constexpr int kExitNumerical = 3;

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

fs::path default_out_root() {
  const char* env = std::getenv("HOSC_OUT_ROOT");
  return env ? fs::path(env) : fs::path("runs");
}

RunMode mode_from_string(const std::string& s) {
  if (s == "cluster") return RunMode::Cluster;
  if (s == "cluster2") return RunMode::Cluster2Layer;
  if (s == "classify") return RunMode::Classify;
  throw std::invalid_argument("unknown mode: " + s);
}

std::string to_string(RunMode m) {
  switch (m) {
    case RunMode::Cluster: return "cluster";
    case RunMode::Cluster2Layer: return "cluster2";
    default: return "classify";
  }
}

json config_to_json(const ExperimentConfig& cfg) {
  return json{{"mode", to_string(cfg.mode)},
              {"seeds", cfg.seeds},
              {"lr", cfg.lr},
              {"max_epochs", cfg.max_epochs},
              {"grad_clip", cfg.grad_clip},
              {"early_stop_patience", cfg.early_stop_patience},
              {"lr_decay_patience", cfg.lr_decay_patience},
              {"mu", cfg.mu},
              {"init_gain", cfg.init_gain},
              {"restarts", cfg.restarts},
              {"alpha2_start", cfg.alpha.alpha2_start},
              {"alpha2_floor", cfg.alpha.alpha2_floor},
              {"alpha_ramp_epochs", cfg.alpha.ramp_epochs},
              {"hidden", cfg.hidden},
              {"batch_size", cfg.batch_size},
              {"pool_ratio", cfg.pool_ratio},
              {"pooler", to_string(cfg.pooler)},
              {"global_skip", cfg.global_skip},
              {"pooled_motif_threshold", cfg.pooled_motif_threshold}};
}

// Applies `patch` over `cfg`, rejecting keys that name nothing.
void apply_config_json(ExperimentConfig& cfg, const json& patch) {
  for (const auto& [key, value] : patch.items()) {
    if (key == "mode")
      cfg.mode = mode_from_string(value.get<std::string>());
    else if (key == "seeds")
      cfg.seeds = value.get<std::vector<std::uint64_t>>();
    else if (key == "lr")
      cfg.lr = value.get<double>();
    else if (key == "max_epochs")
      cfg.max_epochs = value.get<int>();
    else if (key == "grad_clip")
      cfg.grad_clip = value.get<double>();
    else if (key == "early_stop_patience")
      cfg.early_stop_patience = value.get<int>();
    else if (key == "lr_decay_patience")
      cfg.lr_decay_patience = value.get<int>();
    else if (key == "mu")
      cfg.mu = value.get<double>();
    else if (key == "init_gain")
      cfg.init_gain = value.get<double>();
    else if (key == "restarts")
      cfg.restarts = value.get<int>();
    else if (key == "alpha2_start")
      cfg.alpha.alpha2_start = value.get<double>();
    else if (key == "alpha2_floor")
      cfg.alpha.alpha2_floor = value.get<double>();
    else if (key == "alpha_ramp_epochs")
      cfg.alpha.ramp_epochs = value.get<int>();
    else if (key == "hidden")
      cfg.hidden = value.get<int>();
    else if (key == "batch_size")
      cfg.batch_size = value.get<int>();
    else if (key == "pool_ratio")
      cfg.pool_ratio = value.get<double>();
    else if (key == "pooler")
      cfg.pooler = pooler_from_string(value.get<std::string>());
    else if (key == "global_skip")
      cfg.global_skip = value.get<bool>();
    else if (key == "pooled_motif_threshold")
      cfg.pooled_motif_threshold = value.get<double>();
    else if (key == "dataset" || key == "dataset_seed" || key == "tu_dir")
      ;  // dataset selection, handled by the subcommand
    else
      throw std::invalid_argument("unknown config key: " + key);
  }
}

json parse_overrides(const std::vector<std::string>& sets) {
  json patch = json::object();
  for (const std::string& kv : sets) {
    auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("override must be key=value: " + kv);
    std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
    patch[key] = json::parse(value, nullptr, false).is_discarded()
                     ? json(value)
                     : json::parse(value);
  }
  return patch;
}

json load_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return j;
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

SparseGraph dataset_by_name(const std::string& name, std::uint64_t seed) {
  if (name == "syn1") {
    Syn1Params p;
    p.feature_dim = 300;
    return gen_syn1(p, seed);
  }
  if (name == "syn2") return gen_syn2(seed);
  if (name == "syn3") return gen_syn3(5, seed, 500, 0.8, 0.2, 500);
  if (name == "karate") return karate_graph(seed);
  throw std::invalid_argument("unknown dataset: " + name);
}

void save_graph(const SparseGraph& g, const fs::path& dir, const std::string& stem) {
  save_edge_list(g, dir / (stem + "_edges.txt"));
  if (g.features) save_feature_csv(*g.features, dir / (stem + "_features.csv"));
  if (g.node_labels) save_labels(*g.node_labels, dir / (stem + "_labels.txt"));
}

json record_to_json(const RunRecord& rec) {
  json j{{"seed", rec.seed},
         {"epochs_run", rec.epochs_run},
         {"best_loss", rec.best_loss},
         {"aborted_nonfinite", rec.aborted_nonfinite}};
  if (rec.report) {
    const ClusteringReport& r = *rec.report;
    j["report"] = {{"nmi", r.nmi},
                   {"completeness", r.completeness},
                   {"homogeneity", r.homogeneity},
                   {"modularity", r.modularity},
                   {"conductance", r.conductance},
                   {"motif_conductance", r.motif_conductance},
                   {"cluster_usage_entropy", r.cluster_usage_entropy},
                   {"clusters_used_fraction", r.clusters_used_fraction}};
  }
  if (rec.test_accuracy) j["test_accuracy"] = *rec.test_accuracy;
  return j;
}

std::vector<std::uint64_t> seed_list(int count) {
  std::vector<std::uint64_t> seeds(count);
  for (int i = 0; i < count; ++i) seeds[i] = static_cast<std::uint64_t>(i);
  return seeds;
}

// Fans `jobs` out across `workers` threads; results land at their job index,
// so the merge order never depends on scheduling.
template <typename Fn>
std::vector<RunRecord> parallel_seeds(int jobs, int workers, Fn&& fn) {
  std::vector<RunRecord> out(jobs);
  if (workers <= 1) {
    for (int i = 0; i < jobs; ++i) out[i] = fn(i);
    return out;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::atomic<bool> failed{false};
  for (int w = 0; w < std::min(workers, jobs); ++w)
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < jobs; i = next.fetch_add(1)) {
        try {
          out[i] = fn(i);
        } catch (...) {
          failed = true;
        }
      }
    });
  for (std::thread& t : pool) t.join();
  if (failed) throw NumericalError("a seed run failed");
  return out;
}

int cmd_gen_data(const std::string& kind, std::uint64_t seed, fs::path out) {
  fs::create_directories(out);
  if (kind == "gc") {
    LabeledGraphSet set = gen_gc_synthetic(100, seed);
    for (std::size_t i = 0; i < set.graphs.size(); ++i) {
      char stem[32];
      std::snprintf(stem, sizeof stem, "graph_%04zu", i);
      save_graph(set.graphs[i], out, stem);
    }
    std::vector<int> graph_labels;
    for (const SparseGraph& g : set.graphs) graph_labels.push_back(*g.graph_label);
    save_labels(graph_labels, out / "graph_labels.txt");
    json splits{{"train", set.train}, {"val", set.val}, {"test", set.test}};
    write_text(out / "splits.json", splits.dump(2));
  } else {
    save_graph(dataset_by_name(kind, seed), out, kind);
  }
  std::cout << "wrote " << kind << " (seed " << seed << ") to " << out << "\n";
  return 0;
}

int cmd_cluster(const std::string& config_path, const std::vector<std::string>& sets,
                const std::string& method, int seeds, int workers, fs::path out) {
  json file = config_path.empty() ? json::object() : load_json_file(config_path);
  json patch = parse_overrides(sets);
  file.update(patch);

  std::string dataset = file.value("dataset", "syn1");
  std::uint64_t dataset_seed = file.value("dataset_seed", std::uint64_t{7});
  SparseGraph g = dataset_by_name(dataset, dataset_seed);
  const std::vector<int>& truth = *g.node_labels;
  int k = *std::max_element(truth.begin(), truth.end()) + 1;

  fs::create_directories(out);

  if (method == "sc" || method == "msc") {
    std::vector<double> nmis;
    json records = json::array();
    for (std::uint64_t s = 0; s < static_cast<std::uint64_t>(seeds); ++s) {
      std::vector<int> pred = method == "msc" ? motif_spectral_cluster(g, k, s)
                                              : spectral_cluster(g, k, s);
      double v = nmi(pred, truth);
      nmis.push_back(v);
      records.push_back({{"seed", s}, {"nmi", v}});
    }
    auto [mean, std] = mean_std(nmis);
    write_text(out / "records.json", records.dump(2));
    write_text(out / "summary.csv",
               "method,dataset,seeds,nmi_mean,nmi_std\n" + method + "," + dataset + "," +
                   std::to_string(seeds) + "," + std::to_string(mean) + "," +
                   std::to_string(std) + "\n");
    std::cout << method << " " << dataset << ": NMI " << mean << " +/- " << std << "\n";
    return 0;
  }
  if (method != "trained") throw std::invalid_argument("unknown method: " + method);

  ExperimentConfig cfg = default_cluster_config();
  apply_config_json(cfg, file);
  if (seeds > 0) cfg.seeds = seed_list(seeds);
  if (cfg.mode == RunMode::Classify)
    throw std::invalid_argument("cluster: config mode is classify");

  json resolved = config_to_json(cfg);
  resolved["dataset"] = dataset;
  resolved["dataset_seed"] = dataset_seed;
  write_text(out / "config.json", resolved.dump(2));

  std::vector<RunRecord> recs =
      parallel_seeds(static_cast<int>(cfg.seeds.size()), workers, [&](int i) {
        return cfg.mode == RunMode::Cluster2Layer
                   ? run_clustering_2layer(g, cfg, cfg.seeds[i])
                   : run_clustering(g, cfg, cfg.seeds[i]);
      });

  json records = json::array();
  std::vector<double> nmis;
  for (const RunRecord& rec : recs) {
    if (rec.aborted_nonfinite) throw NumericalError("run aborted on non-finite loss");
    records.push_back(record_to_json(rec));
    nmis.push_back(rec.report->nmi);
  }
  auto [mean, std] = mean_std(nmis);
  write_text(out / "records.json", records.dump(2));
  write_text(out / "summary.csv",
             "method,dataset,pooler,seeds,nmi_mean,nmi_std\ntrained," + dataset + "," +
                 to_string(cfg.pooler) + "," + std::to_string(cfg.seeds.size()) + "," +
                 std::to_string(mean) + "," + std::to_string(std) + "\n");
  std::cout << "trained " << dataset << " (" << to_string(cfg.pooler) << "): NMI " << mean
            << " +/- " << std << "\n";
  return 0;
}

int cmd_classify(const std::string& config_path, const std::vector<std::string>& sets,
                 const std::string& pooler_override, int seeds, int workers, fs::path out) {
  json file = config_path.empty() ? json::object() : load_json_file(config_path);
  file.update(parse_overrides(sets));

  std::string dataset = file.value("dataset", "gc");
  std::uint64_t dataset_seed = file.value("dataset_seed", std::uint64_t{11});
  LabeledGraphSet data;
  if (dataset == "gc")
    data = gen_gc_synthetic(100, dataset_seed);
  else if (dataset == "tu") {
    if (!file.contains("tu_dir")) throw std::invalid_argument("dataset tu needs tu_dir");
    try {
      data = load_tu_dataset(file["tu_dir"].get<std::string>());
    } catch (const std::exception& e) {
      throw DataError(e.what());
    }
  } else
    throw std::invalid_argument("unknown classification dataset: " + dataset);

  ExperimentConfig cfg = default_classify_config();
  apply_config_json(cfg, file);
  if (!pooler_override.empty()) cfg.pooler = pooler_from_string(pooler_override);
  if (seeds > 0) cfg.seeds = seed_list(seeds);

  fs::create_directories(out);
  json resolved = config_to_json(cfg);
  resolved["dataset"] = dataset;
  resolved["dataset_seed"] = dataset_seed;
  write_text(out / "config.json", resolved.dump(2));

  std::vector<RunRecord> recs =
      parallel_seeds(static_cast<int>(cfg.seeds.size()), workers,
                     [&](int i) { return run_classification(data, cfg, cfg.seeds[i]); });

  json records = json::array();
  std::vector<double> accs;
  for (const RunRecord& rec : recs) {
    if (rec.aborted_nonfinite) throw NumericalError("run aborted on non-finite loss");
    records.push_back(record_to_json(rec));
    accs.push_back(*rec.test_accuracy);
  }
  auto [mean, std] = mean_std(accs);
  write_text(out / "records.json", records.dump(2));
  write_text(out / "summary.csv",
             "dataset,pooler,seeds,acc_mean,acc_std\n" + dataset + "," +
                 to_string(cfg.pooler) + "," + std::to_string(cfg.seeds.size()) + "," +
                 std::to_string(mean) + "," + std::to_string(std) + "\n");
  std::cout << "classify " << dataset << " (" << to_string(cfg.pooler) << "): accuracy "
            << mean << " +/- " << std << "\n";
  return 0;
}

int cmd_motif(const std::string& dataset, std::uint64_t seed, const std::string& edges_path) {
  SparseGraph g;
  if (!edges_path.empty()) {
    try {
      g = load_edge_list(edges_path);
    } catch (const std::exception& e) {
      throw DataError(e.what());
    }
  } else {
    g = dataset_by_name(dataset, seed);
  }
  MotifAdjacency m = triangle_adjacency(g);
  double entries = 0.0;
  for (int i = 0; i < g.n; ++i) entries += m.a_m.row_ptr[i + 1] - m.a_m.row_ptr[i];
  std::vector<int> half(g.n);
  for (int i = 0; i < g.n; ++i) half[i] = i < g.n / 2 ? 0 : 1;
  json j{{"n", g.n},
         {"triangles", m.d_m.sum() / 6.0},
         {"a_m_density", g.n > 1 ? entries / (static_cast<double>(g.n) * (g.n - 1)) : 0.0},
         {"triangle_identity_halves", verify_triangle_identity(g, half)}};
  if (g.n <= 40) {
    std::vector<int> subset;
    for (int i = 0; i < g.n / 2; ++i) subset.push_back(i);
    j["four_cycle_identity_half_set"] = verify_four_node_identity(g, Motif::FourCycle, subset);
    j["k4_identity_half_set"] = verify_four_node_identity(g, Motif::K4, subset);
  }
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_metrics(const std::string& edges_path, const std::string& pred_path,
                const std::string& truth_path, const std::string& ledger) {
  SparseGraph g;
  std::vector<int> pred, truth;
  try {
    g = load_edge_list(edges_path);
    pred = load_labels(pred_path);
    truth = truth_path.empty() ? pred : load_labels(truth_path);
  } catch (const std::exception& e) {
    throw DataError(e.what());
  }
  int k = *std::max_element(pred.begin(), pred.end()) + 1;
  Matrix s = Matrix::Zero(g.n, k);
  for (int i = 0; i < g.n; ++i) s(i, pred[i]) = 1.0;
  ClusteringReport r = clustering_report(g, s, truth);
  json j{{"nmi", r.nmi},
         {"completeness", r.completeness},
         {"homogeneity", r.homogeneity},
         {"modularity", r.modularity},
         {"conductance", r.conductance},
         {"motif_conductance", r.motif_conductance},
         {"cluster_usage_entropy", r.cluster_usage_entropy},
         {"clusters_used_fraction", r.clusters_used_fraction}};
  std::cout << j.dump(2) << "\n";
  if (!ledger.empty()) {
    bool fresh = !fs::exists(ledger);
    std::ofstream out(ledger, std::ios::app);
    if (!out) throw DataError("cannot append to " + ledger);
    if (fresh)
      out << "edges,nmi,completeness,homogeneity,modularity,conductance,"
             "motif_conductance,cluster_usage_entropy,clusters_used_fraction\n";
    out << edges_path << "," << r.nmi << "," << r.completeness << "," << r.homogeneity << ","
        << r.modularity << "," << r.conductance << "," << r.motif_conductance << ","
        << r.cluster_usage_entropy << "," << r.clusters_used_fraction << "\n";
  }
  return 0;
}

int cmd_verify(int graphs, int n, double p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> cluster(0, 2);
  std::uniform_real_distribution<double> pick(0.0, 1.0);
  int adjacency_fail = 0, triangle_fail = 0, c4_fail = 0, k4_fail = 0;
  for (int t = 0; t < graphs; ++t) {
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::vector<std::tuple<int, int, double>> edges;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (coin(rng) < p) edges.emplace_back(i, j, 1.0);
    SparseGraph g = build_graph(edges, n);
    if (!triangle_adjacency(g).a_m.dense().cwiseEqual(
            motif_adjacency_bruteforce(g, Motif::Triangle).a_m.dense()).all())
      ++adjacency_fail;
    std::vector<int> part(n);
    for (int& c : part) c = cluster(rng);
    if (!verify_triangle_identity(g, part)) ++triangle_fail;
    std::vector<int> subset;
    for (int i = 0; i < n; ++i)
      if (pick(rng) < 0.5) subset.push_back(i);
    if (!verify_four_node_identity(g, Motif::FourCycle, subset)) ++c4_fail;
    if (!verify_four_node_identity(g, Motif::K4, subset)) ++k4_fail;
  }
  bool pass = adjacency_fail + triangle_fail + c4_fail + k4_fail == 0;
  json j{{"graphs", graphs},
         {"n", n},
         {"p", p},
         {"adjacency_mismatches", adjacency_fail},
         {"triangle_identity_failures", triangle_fail},
         {"four_cycle_identity_failures", c4_fail},
         {"k4_identity_failures", k4_fail},
         {"pass", pass}};
  std::cout << j.dump(2) << "\n";
  return pass ? 0 : kExitNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"motif-based graph clustering and pooling toolkit"};
  app.require_subcommand(1);

  std::string config_path, method = "trained", pooler, dataset = "syn1", edges, pred, truth,
              ledger, kind = "syn1";
  std::vector<std::string> sets;
  std::uint64_t seed = 0;
  int seeds = 0, workers = 1, graphs = 50, n = 20;
  double p = 0.3;
  fs::path out;

  auto add_run_flags = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file");
    cmd->add_option("--set", sets, "config override, key=value (repeatable)");
    cmd->add_option("--seeds", seeds, "run seeds 0..N-1 (overrides config seed list)");
    cmd->add_option("--workers", workers, "parallel seed runs (default 1)");
    cmd->add_option("--out", out, "output directory (default $HOSC_OUT_ROOT/<subcommand>)");
  };

  CLI::App* gen = app.add_subcommand("gen-data", "write a generated dataset to disk");
  gen->add_option("--kind", kind, "syn1|syn2|syn3|karate|gc")->required();
  gen->add_option("--seed", seed, "generator seed");
  gen->add_option("--out", out, "output directory");

  CLI::App* cluster = app.add_subcommand("cluster", "node clustering on one graph");
  add_run_flags(cluster);
  cluster->add_option("--method", method, "trained|sc|msc");

  CLI::App* classify = app.add_subcommand("classify", "graph classification sweep");
  add_run_flags(classify);
  classify->add_option("--pooler", pooler, "hosc|hp1|hp2|mincut|random|nopool");

  CLI::App* motif = app.add_subcommand("motif", "triangle statistics and identity checks");
  motif->add_option("--dataset", dataset, "syn1|syn2|syn3|karate");
  motif->add_option("--seed", seed, "generator seed");
  motif->add_option("--edges", edges, "edge-list file instead of a generated dataset");

  CLI::App* metrics = app.add_subcommand("metrics", "clustering report for a labeled partition");
  metrics->add_option("--edges", edges, "edge-list file")->required();
  metrics->add_option("--pred", pred, "predicted labels file")->required();
  metrics->add_option("--truth", truth, "ground-truth labels file");
  metrics->add_option("--ledger", ledger, "CSV results ledger to append to");

  CLI::App* verify = app.add_subcommand("verify", "brute-force motif identity oracles");
  verify->add_option("--graphs", graphs, "number of random graphs");
  verify->add_option("--n", n, "nodes per graph");
  verify->add_option("--p", p, "edge probability");
  verify->add_option("--seed", seed, "rng seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitBadArgs;
  }

  try {
    if (gen->parsed())
      return cmd_gen_data(kind, seed, out.empty() ? default_out_root() / "gen-data" : out);
    if (cluster->parsed())
      return cmd_cluster(config_path, sets, method, seeds, workers,
                         out.empty() ? default_out_root() / "cluster" : out);
    if (classify->parsed())
      return cmd_classify(config_path, sets, pooler, seeds, workers,
                          out.empty() ? default_out_root() / "classify" : out);
    if (motif->parsed()) return cmd_motif(dataset, seed, edges);
    if (metrics->parsed()) return cmd_metrics(edges, pred, truth, ledger);
    if (verify->parsed()) return cmd_verify(graphs, n, p, seed);
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadArgs;
  }
  return kExitBadArgs;
}
