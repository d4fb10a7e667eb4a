// sagal: batch experiments for semantic-aware graph active learning.
//
//   sagal run   --dataset DIR --strategy sag[,random,...] --budget N --runs R
//               --seed S --out DIR [SAG flags] [--sweep budget|lambda]
//   sagal stats --dataset DIR
//   sagal nir   --dataset DIR (--selection trace.jsonl | --all)
//   sagal synth --out DIR [generator flags]
//
// Exit codes: 0 success, 1 invalid flags or configuration, 2 dataset error,
// 3 runtime failure.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sagal/graph.hpp"
#include "sagal/harness.hpp"
#include "sagal/metrics.hpp"
#include "sagal/synthetic.hpp"

namespace fs = std::filesystem;
using namespace sagal;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitDataset = 2;
constexpr int kExitRuntime = 3;

/// Relative dataset paths that do not exist locally resolve against
/// $SAGAL_DATA_ROOT.
fs::path resolve_dataset(const std::string& arg) {
  fs::path p(arg);
  if (fs::exists(p) || p.is_absolute()) return p;
  if (const char* root = std::getenv("SAGAL_DATA_ROOT")) {
    fs::path candidate = fs::path(root) / p;
    if (fs::exists(candidate)) return candidate;
  }
  return p;
}

struct RunFlags {
  std::string dataset;
  std::string strategies = "sag";
  std::size_t budget = 0;
  std::size_t runs = 10;
  std::uint64_t seed = 0;
  double lambda = 0.3;
  double theta = 0.05;
  int k = 2;
  double epsilon = 1e-4;
  std::string sim = "cosine";
  std::string feature_space = "raw";
  std::string diversity = "euclidean";
  bool no_semantic = false;
  bool no_diversity = false;
  bool no_class_balance = false;
  std::string sweep = "none";
  std::string nir_mode = "incident";
  std::size_t parallel = 1;
  std::string out;
};

ExperimentConfig to_config(const RunFlags& f) {
  ExperimentConfig cfg;
  cfg.dataset = resolve_dataset(f.dataset);
  cfg.strategies.clear();
  std::stringstream ss(f.strategies);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) cfg.strategies.push_back(parse_strategy(item));
  if (f.budget > 0) cfg.budget = f.budget;
  cfg.runs = f.runs;
  cfg.base_seed = f.seed;
  cfg.sag.lambda = f.lambda;
  cfg.sag.theta = f.theta;
  cfg.sag.k = f.k;
  cfg.sag.epsilon = f.epsilon;
  cfg.sag.metric.kind = parse_similarity_kind(f.sim);
  cfg.sag.metric.space = parse_feature_space(f.feature_space);
  if (f.diversity == "euclidean")
    cfg.sag.diversity_distance = DiversityDistance::euclidean;
  else if (f.diversity == "cosine")
    cfg.sag.diversity_distance = DiversityDistance::cosine;
  else
    throw std::invalid_argument("unknown diversity distance '" + f.diversity + "'");
  cfg.sag.no_semantic = f.no_semantic;
  cfg.sag.no_diversity = f.no_diversity;
  cfg.sag.no_class_balance = f.no_class_balance;
  cfg.sweep = parse_sweep_axis(f.sweep);
  if (f.nir_mode == "incident")
    cfg.nir_mode = NirMode::incident;
  else if (f.nir_mode == "within")
    cfg.nir_mode = NirMode::within;
  else
    throw std::invalid_argument("unknown NIR mode '" + f.nir_mode + "'");
  cfg.parallel = f.parallel;
  cfg.validate();
  return cfg;
}

int cmd_run(const RunFlags& flags) {
  // --dataset and --out may come from the config file, so they are checked
  // here rather than marked required on the parser.
  if (flags.dataset.empty() || flags.out.empty()) {
    std::cerr << "error: run needs --dataset and --out (on the command line or in [run])\n";
    return kExitUsage;
  }
  ExperimentConfig cfg;
  try {
    cfg = to_config(flags);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  std::optional<DatasetContext> ctx;
  try {
    ctx.emplace(load_dataset(cfg.dataset));
  } catch (const DatasetError& e) {
    std::cerr << "dataset error: " << e.what() << '\n';
    return kExitDataset;
  }
  const std::size_t budget = cfg.effective_budget(ctx->graph.num_classes());
  if (cfg.sweep != SweepAxis::budget && budget > ctx->split.pool.size()) {
    std::cerr << "error: budget " << budget << " exceeds pool size "
              << ctx->split.pool.size() << '\n';
    return kExitUsage;
  }
  try {
    const ExperimentResults results = run_experiment(*ctx, cfg);
    emit_results(results, flags.out);
    std::cout << format_summary_table(results.summary);
    std::cout << "wrote " << (fs::path(flags.out) / "results.json").string() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}

int cmd_stats(const std::string& dataset) {
  try {
    const Dataset ds = load_dataset(resolve_dataset(dataset));
    const StatsReport r = validate_stats(ds.graph, &ds.split);
    std::cout << "Dataset\t#Nodes\t#Edges\t#Inter-Class Edges\t#Inter-Class Ratio"
                 "\t#Features\t#Classes\t#Pool/Val/Test\n"
              << format_stats_row(r) << '\n';
    if (r.isolated_nodes > 0) std::cout << "isolated nodes: " << r.isolated_nodes << '\n';
    if (r.reference) {
      const auto& ref = *r.reference;
      std::cout << "reference\t" << ref.nodes << '\t' << ref.edges << '\t'
                << ref.inter_class_edges << '\t' << 100.0 * ref.inter_class_ratio
                << "%\t" << ref.features << '\t' << ref.classes << '\n';
      for (const auto& d : r.discrepancies) std::cout << "note: " << d << '\n';
    }
  } catch (const DatasetError& e) {
    std::cerr << "dataset error: " << e.what() << '\n';
    return kExitDataset;
  }
  return 0;
}

int cmd_nir(const std::string& dataset, const std::string& selection, bool all,
            const std::string& mode) {
  if (all == !selection.empty()) {
    std::cerr << "error: pass exactly one of --selection or --all\n";
    return kExitUsage;
  }
  if (mode != "incident" && mode != "within") {
    std::cerr << "error: unknown NIR mode '" << mode << "'\n";
    return kExitUsage;
  }
  std::vector<NodeId> nodes;
  if (!all) {
    std::ifstream in(selection);
    if (!in) {
      std::cerr << "error: cannot read " << selection << '\n';
      return kExitUsage;
    }
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        const auto j = nlohmann::json::parse(line);
        const auto node = j.at("node").get<long long>();
        if (node < 0) throw std::out_of_range("negative node");
        nodes.push_back(static_cast<NodeId>(node));
      } catch (const std::exception& e) {
        std::cerr << "error: " << selection << ':' << lineno << ": " << e.what() << '\n';
        return kExitUsage;
      }
    }
    if (nodes.empty()) {
      std::cerr << "error: empty selection trace\n";
      return kExitUsage;
    }
  }
  Dataset ds;
  try {
    ds = load_dataset(resolve_dataset(dataset));
  } catch (const DatasetError& e) {
    std::cerr << "dataset error: " << e.what() << '\n';
    return kExitDataset;
  }
  for (NodeId u : nodes)
    if (u >= ds.graph.num_nodes()) {
      std::cerr << "dataset error: trace node " << u << " has no label in "
                << ds.graph.name() << '\n';
      return kExitDataset;
    }
  try {
    const double value =
        all ? nir_all(ds.graph)
            : nir(ds.graph, nodes, mode == "within" ? NirMode::within : NirMode::incident);
    std::cout.precision(4);
    std::cout << std::fixed << value << '\n';
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semantic-aware graph active learning experiments"};
  app.require_subcommand(1);

  RunFlags rf;
  auto* run = app.add_subcommand("run", "Acquire labels, train, evaluate, write results");
  // Config files are processed by the top-level app; keys for `run` live in
  // a [run] section. fallthrough() lets `sagal run --config FILE` reach it.
  app.set_config("--config", "", "TOML file; a [run] section sets run flags (flags override it)");
  run->fallthrough();
  run->add_option("--dataset", rf.dataset, "Dataset directory (or name under $SAGAL_DATA_ROOT)");
  run->add_option("--strategy", rf.strategies, "Comma list of sag|random|degree|entropy");
  run->add_option("--budget", rf.budget, "Total labeled nodes B (default 20*C)");
  run->add_option("--runs", rf.runs, "Seeded repetitions");
  run->add_option("--seed", rf.seed, "Base seed; run i uses seed+i");
  run->add_option("--lambda", rf.lambda, "Influence/diversity trade-off in [0,1]");
  run->add_option("--theta", rf.theta, "Activation threshold (> 0)");
  run->add_option("--k", rf.k, "Propagation depth");
  run->add_option("--epsilon", rf.epsilon, "Pruning threshold for the k-step operator");
  run->add_option("--sim", rf.sim, "cosine|euclidean|one");
  run->add_option("--feature-space", rf.feature_space, "raw|propagated");
  run->add_option("--diversity", rf.diversity, "Prototype distance: euclidean|cosine");
  run->add_flag("--no-semantic", rf.no_semantic, "Ablation: constant similarity");
  run->add_flag("--no-diversity", rf.no_diversity, "Ablation: rank by influence only");
  run->add_flag("--no-class-balance", rf.no_class_balance, "Ablation: ignore class budgets");
  run->add_option("--sweep", rf.sweep, "none|budget|lambda");
  run->add_option("--nir-mode", rf.nir_mode, "incident|within");
  run->add_option("--parallel", rf.parallel, "Concurrent runs");
  run->add_option("--out", rf.out, "Output directory");

  std::string stats_dataset;
  auto* stats = app.add_subcommand("stats", "Print dataset statistics");
  stats->add_option("--dataset", stats_dataset, "Dataset directory")->required();

  std::string nir_dataset, nir_selection, nir_mode = "incident";
  bool nir_all_flag = false;
  auto* nir_cmd = app.add_subcommand("nir", "Noise-to-information ratio of a selection");
  nir_cmd->add_option("--dataset", nir_dataset, "Dataset directory")->required();
  nir_cmd->add_option("--selection", nir_selection, "Selection trace (JSON lines)");
  nir_cmd->add_flag("--all", nir_all_flag, "Whole-graph NIR");
  nir_cmd->add_option("--nir-mode", nir_mode, "incident|within");

  SyntheticSpec spec;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Write a synthetic citation-style dataset");
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--name", spec.name);
  synth->add_option("--nodes", spec.num_nodes);
  synth->add_option("--classes", spec.num_classes);
  synth->add_option("--features", spec.num_features);
  synth->add_option("--degree", spec.average_degree, "Average degree");
  synth->add_option("--inter-ratio", spec.inter_class_ratio, "Inter-class edge fraction");
  synth->add_option("--words", spec.words_per_node, "Words per node");
  synth->add_option("--topic-fraction", spec.topic_fraction);
  synth->add_option("--topic-size", spec.topic_size);
  synth->add_option("--val", spec.val_size);
  synth->add_option("--test", spec.test_size);
  synth->add_option("--seed", spec.seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (*run) return cmd_run(rf);
  if (*stats) return cmd_stats(stats_dataset);
  if (*nir_cmd) return cmd_nir(nir_dataset, nir_selection, nir_all_flag, nir_mode);
  if (*synth) {
    try {
      save_dataset(make_synthetic(spec), synth_out);
    } catch (const std::invalid_argument& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kExitUsage;
    } catch (const std::exception& e) {
      std::cerr << "runtime error: " << e.what() << '\n';
      return kExitRuntime;
    }
    std::cout << "wrote " << synth_out << '\n';
    return 0;
  }
  return kExitUsage;
}
