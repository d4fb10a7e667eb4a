#include "sagal/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <thread>
#include <tuple>

namespace sagal {
namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::sag: return "sag";
    case StrategyKind::random: return "random";
    case StrategyKind::degree: return "degree";
    case StrategyKind::entropy: return "entropy";
  }
  return "?";
}

StrategyKind parse_strategy(const std::string& s) {
  if (s == "sag") return StrategyKind::sag;
  if (s == "random") return StrategyKind::random;
  if (s == "degree") return StrategyKind::degree;
  if (s == "entropy") return StrategyKind::entropy;
  throw std::invalid_argument("unknown strategy '" + s + "'");
}

std::string to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::none: return "none";
    case SweepAxis::budget: return "budget";
    case SweepAxis::lambda: return "lambda";
  }
  return "?";
}

SweepAxis parse_sweep_axis(const std::string& s) {
  if (s == "none") return SweepAxis::none;
  if (s == "budget") return SweepAxis::budget;
  if (s == "lambda") return SweepAxis::lambda;
  throw std::invalid_argument("unknown sweep axis '" + s + "'");
}

void ExperimentConfig::validate() const {
  if (runs < 1) throw std::invalid_argument("runs must be >= 1");
  if (strategies.empty()) throw std::invalid_argument("no strategy given");
  if (parallel < 1) throw std::invalid_argument("parallel must be >= 1");
  sag.validate();
  final_training.validate();
  for (double l : lambda_points)
    if (!(l >= 0.0 && l <= 1.0))
      throw std::invalid_argument("lambda sweep point outside [0, 1]");
}

json to_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"dropout", c.dropout},
          {"weight_decay", c.weight_decay},   {"max_epochs", c.max_epochs},
          {"patience", c.patience},           {"early_stopping", c.early_stopping},
          {"adam_beta1", c.adam_beta1},       {"adam_beta2", c.adam_beta2},
          {"adam_epsilon", c.adam_epsilon}};
}

json to_json(const SagConfig& c) {
  return {{"lambda", c.lambda},
          {"theta", c.theta},
          {"k", c.k},
          {"epsilon", c.epsilon},
          {"similarity", to_string(c.metric.kind)},
          {"feature_space", to_string(c.metric.space)},
          {"diversity_distance",
           c.diversity_distance == DiversityDistance::euclidean ? "euclidean"
                                                                : "cosine"},
          {"class_budgets", c.class_budgets},
          {"no_semantic", c.no_semantic},
          {"no_diversity", c.no_diversity},
          {"no_class_balance", c.no_class_balance},
          {"initial_per_class", c.initial_per_class},
          {"retrain", to_json(c.retrain)}};
}

json to_json(const ExperimentConfig& c) {
  json strategies = json::array();
  for (auto s : c.strategies) strategies.push_back(to_string(s));
  return {{"dataset", c.dataset.string()},
          {"strategies", strategies},
          {"budget", c.budget ? json(*c.budget) : json(nullptr)},
          {"runs", c.runs},
          {"base_seed", c.base_seed},
          {"sag", to_json(c.sag)},
          {"final_training", to_json(c.final_training)},
          {"sweep", to_string(c.sweep)},
          {"budget_points", c.budget_points},
          {"lambda_points", c.lambda_points},
          {"nir_mode", c.nir_mode == NirMode::incident ? "incident" : "within"},
          {"stopping_rule", "early stop on validation accuracy, restore best"}};
}

std::string sag_variant_label(const SagConfig& cfg) {
  std::string label = "sag";
  if (cfg.metric.kind == SimilarityKind::inverse_euclidean) label += "-dist";
  if (cfg.metric.kind == SimilarityKind::constant_one || cfg.no_semantic)
    label += "-no-semantic";
  if (cfg.no_diversity) label += "-no-diversity";
  if (cfg.no_class_balance) label += "-no-class-balance";
  if (cfg.metric.space == FeatureSpace::propagated) label += "-propagated";
  return label;
}

json to_json(const TraceEntry& e) {
  auto opt = [](const auto& v) { return v ? json(*v) : json(nullptr); };
  return {{"iteration", e.iteration},
          {"node", e.node},
          {"pseudo_label", opt(e.pseudo_label)},
          {"true_label", e.true_label},
          {"inf_percentile", opt(e.inf_percentile)},
          {"dis_percentile", opt(e.dis_percentile)},
          {"score", opt(e.score)}};
}

json to_json(const RunResult& r) {
  auto opt = [](const auto& v) { return v ? json(*v) : json(nullptr); };
  return {{"strategy", r.strategy},
          {"seed", r.seed},
          {"budget", r.budget},
          {"lambda", opt(r.lambda)},
          {"accuracy", r.accuracy},
          {"macro_f1", r.macro_f1},
          {"binary_f1", opt(r.binary_f1)},
          {"auc", opt(r.auc)},
          {"nir", r.nir},
          {"wall_seconds", r.wall_seconds},
          {"preprocess_seconds", r.preprocess_seconds},
          {"selected", r.selected},
          {"initial_size", r.initial_size},
          {"budget_exhausted", r.budget_exhausted},
          {"best_epoch", r.best_epoch},
          {"epochs_run", r.epochs_run},
          {"config", r.config}};
}

MetricSummary summarize_values(std::span<const double> values) {
  MetricSummary s;
  s.count = values.size();
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double sq = 0.0;
    for (double v : values) sq += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(sq / static_cast<double>(values.size() - 1));
  }
  return s;
}

std::vector<SummaryRow> summarize(const std::vector<RunResult>& runs) {
  using Key = std::tuple<std::string, std::size_t, double>;
  std::vector<Key> order;
  std::map<Key, std::vector<const RunResult*>> groups;
  for (const RunResult& r : runs) {
    Key key{r.strategy, r.budget, r.lambda.value_or(-1.0)};
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.push_back(&r);
  }
  std::vector<SummaryRow> out;
  for (const Key& key : order) {
    const auto& members = groups[key];
    SummaryRow row;
    row.strategy = std::get<0>(key);
    row.budget = std::get<1>(key);
    row.lambda = members.front()->lambda;
    row.runs = members.size();
    auto add = [&](const std::string& name, auto getter) {
      std::vector<double> vals;
      for (const RunResult* r : members)
        if (auto v = getter(*r)) vals.push_back(*v);
      if (!vals.empty()) row.metrics[name] = summarize_values(vals);
    };
    add("accuracy", [](const RunResult& r) { return std::optional(r.accuracy); });
    add("macro_f1", [](const RunResult& r) { return std::optional(r.macro_f1); });
    add("binary_f1", [](const RunResult& r) { return r.binary_f1; });
    add("auc", [](const RunResult& r) { return r.auc; });
    add("nir", [](const RunResult& r) { return std::optional(r.nir); });
    add("wall_seconds", [](const RunResult& r) { return std::optional(r.wall_seconds); });
    out.push_back(std::move(row));
  }
  return out;
}

namespace {

std::uint64_t final_model_seed(std::uint64_t seed) {
  std::uint64_t x = seed + 0xD1B54A32D192ED03ull;
  x = (x ^ (x >> 33)) * 0xFF51AFD7ED558CCDull;
  x = (x ^ (x >> 33)) * 0xC4CEB9FE1A85EC53ull;
  return x ^ (x >> 33);
}

struct Task {
  StrategyKind kind;
  SagConfig sag;
  std::size_t budget;
  std::uint64_t seed;
  const SagPreprocessing* prep;
};

// Preprocessing depends on everything except λ and the query-policy flags.
std::string prep_key(const SagConfig& c) {
  std::ostringstream os;
  os.precision(17);
  os << c.k << '|' << c.epsilon << '|' << c.theta << '|'
     << static_cast<int>(c.effective_similarity()) << '|'
     << static_cast<int>(c.metric.space);
  return os.str();
}

}  // namespace

RunResult run_single(const DatasetContext& ctx, const SagPreprocessing* prep,
                     StrategyKind kind, const SagConfig& sag,
                     const TrainConfig& final_training, std::size_t budget,
                     std::uint64_t seed, NirMode nir_mode) {
  const auto start = std::chrono::steady_clock::now();
  AcquisitionResult acq;
  RunResult r;
  r.seed = seed;
  r.budget = budget;
  switch (kind) {
    case StrategyKind::sag:
      if (!prep) throw std::invalid_argument("run_single: SAG needs preprocessing");
      acq = sag_acquire(ctx, *prep, sag, budget, seed);
      r.strategy = sag_variant_label(sag);
      r.lambda = sag.effective_lambda();
      r.preprocess_seconds = prep->seconds();
      r.config = to_json(sag);
      break;
    case StrategyKind::random:
    case StrategyKind::degree:
    case StrategyKind::entropy: {
      const auto b = kind == StrategyKind::random   ? BaselineKind::random
                     : kind == StrategyKind::degree ? BaselineKind::degree
                                                    : BaselineKind::entropy;
      acq = baseline_select(b, ctx, budget, seed, sag.initial_per_class, sag.retrain);
      r.strategy = to_string(kind);
      r.config = {{"initial_per_class", sag.initial_per_class},
                  {"retrain", to_json(sag.retrain)}};
      break;
    }
  }
  r.config["final_training"] = to_json(final_training);
  r.config["seed"] = seed;
  r.config["budget"] = budget;

  const std::vector<int> labels = ctx.labels();
  GcnModel model(ctx.graph.num_features(), ctx.graph.num_classes(),
                 final_model_seed(seed));
  const GcnInputs inputs = ctx.gcn_inputs();
  const TrainReport report =
      model.train(inputs, acq.labeled, labels, final_training, ctx.split.val);
  const DenseMatrix probs = model.forward(inputs, false);
  const std::vector<int> preds = predict(probs);

  const auto& test = ctx.split.test;
  r.accuracy = accuracy(preds, labels, test);
  r.macro_f1 = macro_f1(preds, labels, test, ctx.graph.num_classes());
  if (ctx.graph.num_classes() == 2) {
    std::vector<double> pos(static_cast<std::size_t>(probs.rows()));
    for (Eigen::Index i = 0; i < probs.rows(); ++i) pos[static_cast<std::size_t>(i)] = probs(i, 1);
    try {
      const BinaryScores b = binary_f1_auc(pos, labels, test);
      r.binary_f1 = b.f1;
      r.auc = b.auc;
    } catch (const std::invalid_argument&) {
      // single-class test set: leave undefined
    }
  }
  try {
    r.nir = nir(ctx.graph, acq.labeled, nir_mode);
  } catch (const std::invalid_argument&) {
    r.nir = 0.0;  // selection without qualifying edges carries no noise
  }
  r.selected = acq.labeled;
  r.initial_size = acq.initial_size;
  r.budget_exhausted = acq.budget_exhausted;
  r.best_epoch = report.best_epoch;
  r.epochs_run = report.epochs_run;
  r.trace = std::move(acq.trace);
  r.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

ExperimentResults run_experiment(const DatasetContext& ctx,
                                 const ExperimentConfig& cfg) {
  cfg.validate();
  const std::size_t num_classes = ctx.graph.num_classes();

  std::vector<std::size_t> budgets;
  std::vector<double> lambdas;
  switch (cfg.sweep) {
    case SweepAxis::none:
      budgets = {cfg.effective_budget(num_classes)};
      lambdas = {cfg.sag.lambda};
      break;
    case SweepAxis::budget:
      budgets = cfg.budget_points;
      if (budgets.empty())
        for (std::size_t m = 4; m <= 20; m += 4) budgets.push_back(m * num_classes);
      lambdas = {cfg.sag.lambda};
      break;
    case SweepAxis::lambda:
      budgets = {cfg.effective_budget(num_classes)};
      lambdas = cfg.lambda_points;
      if (lambdas.empty())
        for (int i = 1; i <= 9; ++i) lambdas.push_back(0.1 * i);
      break;
  }
  for (std::size_t b : budgets)
    if (b > ctx.split.pool.size())
      throw std::invalid_argument("budget " + std::to_string(b) +
                                  " exceeds pool size " +
                                  std::to_string(ctx.split.pool.size()));

  std::map<std::string, std::unique_ptr<SagPreprocessing>> preps;
  auto prep_for = [&](const SagConfig& sc) -> const SagPreprocessing* {
    auto& slot = preps[prep_key(sc)];
    if (!slot) slot = std::make_unique<SagPreprocessing>(ctx, sc);
    return slot.get();
  };

  std::vector<Task> tasks;
  for (std::size_t b : budgets) {
    for (StrategyKind kind : cfg.strategies) {
      const bool sweeps_lambda = kind == StrategyKind::sag && cfg.sweep == SweepAxis::lambda;
      const std::vector<double> ls = sweeps_lambda ? lambdas : std::vector<double>{cfg.sag.lambda};
      for (double l : ls) {
        SagConfig sc = cfg.sag;
        sc.lambda = l;
        const SagPreprocessing* prep = kind == StrategyKind::sag ? prep_for(sc) : nullptr;
        for (std::size_t r = 0; r < cfg.runs; ++r)
          tasks.push_back({kind, sc, b, cfg.base_seed + r, prep});
      }
    }
  }

  std::vector<RunResult> runs(tasks.size());
  std::vector<std::exception_ptr> errors(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < tasks.size();) {
      const Task& t = tasks[i];
      try {
        runs[i] = run_single(ctx, t.prep, t.kind, t.sag, cfg.final_training,
                             t.budget, t.seed, cfg.nir_mode);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min(cfg.parallel, tasks.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  ExperimentResults out;
  out.dataset_name = ctx.graph.name();
  out.sweep = cfg.sweep;
  out.config = to_json(cfg);
  out.runs = std::move(runs);
  out.summary = summarize(out.runs);
  return out;
}

ExperimentResults run_experiment(const ExperimentConfig& cfg) {
  const DatasetContext ctx(load_dataset(cfg.dataset));
  return run_experiment(ctx, cfg);
}

namespace {

std::string mean_std(const MetricSummary& m) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f±%.4f", m.mean, m.std);
  return buf;
}

const char* const kSummaryMetrics[] = {"accuracy", "macro_f1", "binary_f1",
                                       "auc",      "nir",      "wall_seconds"};

std::string lambda_cell(const std::optional<double>& l) {
  if (!l) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", *l);
  return buf;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

}  // namespace

void emit_results(const ExperimentResults& results, const fs::path& out_dir) {
  if (results.runs.empty()) throw std::invalid_argument("emit_results: no runs to write");
  const std::vector<SummaryRow> recomputed = summarize(results.runs);
  bool consistent = recomputed.size() == results.summary.size();
  for (std::size_t i = 0; consistent && i < recomputed.size(); ++i) {
    const SummaryRow& a = recomputed[i];
    const SummaryRow& b = results.summary[i];
    consistent = a.strategy == b.strategy && a.budget == b.budget && a.runs == b.runs &&
                 a.metrics.size() == b.metrics.size();
    for (const auto& [name, m] : a.metrics) {
      auto it = b.metrics.find(name);
      if (!consistent || it == b.metrics.end() || m.count != it->second.count ||
          std::abs(m.mean - it->second.mean) > 1e-12 ||
          std::abs(m.std - it->second.std) > 1e-12) {
        consistent = false;
        break;
      }
    }
  }
  if (!consistent)
    throw std::logic_error("emit_results: summary does not match the per-run records");
  std::error_code ec;
  fs::create_directories(out_dir / "traces", ec);
  if (ec) throw std::runtime_error("cannot create " + out_dir.string() + ": " + ec.message());

  json doc;
  doc["dataset"] = results.dataset_name;
  doc["config"] = results.config;
  doc["runs"] = json::array();
  for (const RunResult& r : results.runs) doc["runs"].push_back(to_json(r));
  doc["summary"] = json::array();
  for (const SummaryRow& row : results.summary) {
    json j{{"strategy", row.strategy}, {"budget", row.budget}, {"runs", row.runs}};
    j["lambda"] = row.lambda ? json(*row.lambda) : json(nullptr);
    for (const auto& [name, m] : row.metrics)
      j[name] = {{"mean", m.mean}, {"std", m.std}, {"count", m.count}};
    doc["summary"].push_back(std::move(j));
  }
  open_out(out_dir / "results.json") << doc.dump(2) << '\n';

  {
    auto out = open_out(out_dir / "summary.tsv");
    out << "strategy\tbudget\tlambda\truns";
    for (const char* m : kSummaryMetrics) out << '\t' << m;
    out << '\n';
    for (const SummaryRow& row : results.summary) {
      out << row.strategy << '\t' << row.budget << '\t' << lambda_cell(row.lambda)
          << '\t' << row.runs;
      for (const char* m : kSummaryMetrics) {
        auto it = row.metrics.find(m);
        out << '\t' << (it == row.metrics.end() ? "-" : mean_std(it->second));
      }
      out << '\n';
    }
  }

  for (const RunResult& r : results.runs) {
    std::string name = r.strategy + "_b" + std::to_string(r.budget);
    if (r.lambda && results.sweep == SweepAxis::lambda) name += "_l" + lambda_cell(r.lambda);
    name += "_seed" + std::to_string(r.seed) + ".jsonl";
    auto out = open_out(out_dir / "traces" / name);
    for (const TraceEntry& e : r.trace) out << to_json(e).dump() << '\n';
  }

  auto fmt = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return std::string(buf);
  };
  if (results.sweep == SweepAxis::budget) {
    auto out = open_out(out_dir / "sweep_budget.csv");
    out << "strategy,budget,mean_accuracy,std_accuracy,mean_nir,std_nir\n";
    for (const SummaryRow& row : results.summary) {
      const auto& acc = row.metrics.at("accuracy");
      const auto& n = row.metrics.at("nir");
      out << row.strategy << ',' << row.budget << ',' << fmt(acc.mean) << ','
          << fmt(acc.std) << ',' << fmt(n.mean) << ',' << fmt(n.std) << '\n';
    }
  } else if (results.sweep == SweepAxis::lambda) {
    auto out = open_out(out_dir / "sweep_lambda.csv");
    out << "lambda,mean_accuracy,std_accuracy\n";
    for (const SummaryRow& row : results.summary) {
      if (!row.lambda || row.strategy.rfind("sag", 0) != 0) continue;
      const auto& acc = row.metrics.at("accuracy");
      out << fmt(*row.lambda) << ',' << fmt(acc.mean) << ',' << fmt(acc.std) << '\n';
    }
  }
}

std::string format_summary_table(const std::vector<SummaryRow>& rows) {
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-28s %7s %6s %4s %18s %18s %18s\n", "strategy",
                "budget", "lambda", "runs", "accuracy", "macro_f1", "nir");
  os << buf;
  for (const SummaryRow& row : rows) {
    auto cell = [&](const char* m) {
      auto it = row.metrics.find(m);
      return it == row.metrics.end() ? std::string("-") : mean_std(it->second);
    };
    std::snprintf(buf, sizeof buf, "%-28s %7zu %6s %4zu %18s %18s %18s\n",
                  row.strategy.c_str(), row.budget, lambda_cell(row.lambda).c_str(),
                  row.runs, cell("accuracy").c_str(), cell("macro_f1").c_str(),
                  cell("nir").c_str());
    os << buf;
  }
  return os.str();
}

}  // namespace sagal
