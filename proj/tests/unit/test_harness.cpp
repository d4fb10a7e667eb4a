#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "sagal/harness.hpp"
#include "sagal/synthetic.hpp"
#include "test_util.hpp"

namespace sagal {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const DatasetContext& small_context() {
  static const DatasetContext ctx = [] {
    SyntheticSpec s;
    s.name = "tiny";
    s.num_nodes = 200;
    s.num_classes = 3;
    s.num_features = 60;
    s.topic_size = 15;
    s.val_size = 40;
    s.test_size = 60;
    s.seed = 3;
    return DatasetContext(make_synthetic(s));
  }();
  return ctx;
}

ExperimentConfig quick_config() {
  ExperimentConfig cfg;
  cfg.strategies = {StrategyKind::sag, StrategyKind::random};
  cfg.budget = 18;
  cfg.runs = 2;
  cfg.sag.retrain.max_epochs = 3;
  cfg.final_training.max_epochs = 20;
  cfg.final_training.patience = 5;
  return cfg;
}

nlohmann::json without_timings(nlohmann::json doc) {
  for (auto& run : doc["runs"]) {
    run.erase("wall_seconds");
    run.erase("preprocess_seconds");
  }
  for (auto& row : doc["summary"]) row.erase("wall_seconds");
  return doc;
}

TEST(Summarize, SampleStandardDeviation) {
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  const MetricSummary s = summarize_values(v);
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_DOUBLE_EQ(s.std, std::sqrt(5.0 / 3.0));
  EXPECT_EQ(s.count, 4u);
  const std::vector<double> one{0.7};
  EXPECT_EQ(summarize_values(one).std, 0.0);
}

TEST(Summarize, GroupsInFirstAppearanceOrder) {
  std::vector<RunResult> runs(3);
  runs[0].strategy = "random";
  runs[0].accuracy = 0.5;
  runs[1].strategy = "sag";
  runs[1].lambda = 0.3;
  runs[1].accuracy = 0.8;
  runs[2].strategy = "random";
  runs[2].accuracy = 0.7;
  const auto rows = summarize(runs);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].strategy, "random");
  EXPECT_EQ(rows[0].runs, 2u);
  EXPECT_DOUBLE_EQ(rows[0].metrics.at("accuracy").mean, 0.6);
  EXPECT_FALSE(rows[0].metrics.contains("auc"));
  EXPECT_EQ(rows[1].lambda, 0.3);
}

TEST(Labels, SagVariants) {
  SagConfig c;
  EXPECT_EQ(sag_variant_label(c), "sag");
  c.no_semantic = true;
  c.no_class_balance = true;
  EXPECT_EQ(sag_variant_label(c), "sag-no-semantic-no-class-balance");
  SagConfig d;
  d.metric.kind = SimilarityKind::inverse_euclidean;
  EXPECT_EQ(sag_variant_label(d), "sag-dist");
}

TEST(Emit, RejectsEmptyResults) {
  const fs::path dir = testing::temp_dir("emit_empty") / "out";
  EXPECT_THROW(emit_results(ExperimentResults{}, dir), std::invalid_argument);
  EXPECT_FALSE(fs::exists(dir));
}

TEST(Emit, RejectsInconsistentSummary) {
  ExperimentResults res;
  res.runs.resize(1);
  res.runs[0].strategy = "random";
  res.summary = summarize(res.runs);
  res.summary[0].metrics["accuracy"].mean = 0.9;
  const fs::path dir = testing::temp_dir("emit_bad") / "out";
  EXPECT_THROW(emit_results(res, dir), std::logic_error);
  EXPECT_FALSE(fs::exists(dir));
}

TEST(Experiment, WritesArtifacts) {
  const ExperimentConfig cfg = quick_config();
  const ExperimentResults res = run_experiment(small_context(), cfg);
  ASSERT_EQ(res.runs.size(), 4u);
  for (const RunResult& r : res.runs) {
    EXPECT_EQ(r.selected.size(), 18u);
    EXPECT_GE(r.accuracy, 0.0);
    EXPECT_LE(r.accuracy, 1.0);
  }
  const fs::path dir = testing::temp_dir("emit");
  emit_results(res, dir);

  const auto doc = nlohmann::json::parse(slurp(dir / "results.json"));
  EXPECT_EQ(doc["dataset"], "tiny");
  EXPECT_EQ(doc["runs"].size(), 4u);
  EXPECT_EQ(doc["config"]["runs"], 2);
  EXPECT_EQ(doc["config"]["sag"]["lambda"], 0.3);
  EXPECT_EQ(doc["config"]["sag"]["theta"], 0.05);
  EXPECT_EQ(doc["config"]["final_training"]["max_epochs"], 20);
  EXPECT_TRUE(doc["config"].contains("stopping_rule"));
  ASSERT_EQ(doc["summary"].size(), 2u);
  EXPECT_EQ(doc["summary"][0]["strategy"], "sag");
  EXPECT_EQ(doc["summary"][1]["lambda"], nullptr);

  const std::string tsv = slurp(dir / "summary.tsv");
  EXPECT_EQ(tsv.substr(0, tsv.find('\n')),
            "strategy\tbudget\tlambda\truns\taccuracy\tmacro_f1\tbinary_f1\tauc\tnir\twall_seconds");
  EXPECT_NE(tsv.find("±"), std::string::npos);
  EXPECT_NE(tsv.find("sag\t18\t0.30\t2\t"), std::string::npos);

  const fs::path trace = dir / "traces" / "sag_b18_seed0.jsonl";
  ASSERT_TRUE(fs::exists(trace));
  std::ifstream in(trace);
  std::size_t lines = 0, seeds = 0;
  for (std::string line; std::getline(in, line); ++lines) {
    const auto e = nlohmann::json::parse(line);
    if (e["iteration"] == 0) {
      ++seeds;
      EXPECT_TRUE(e["score"].is_null());
    } else {
      EXPECT_TRUE(e["score"].is_number());
    }
  }
  EXPECT_EQ(lines, 18u);
  EXPECT_EQ(seeds, 12u);
  EXPECT_TRUE(fs::exists(dir / "traces" / "random_b18_seed1.jsonl"));
}

TEST(Experiment, DeterministicInSeed) {
  const ExperimentConfig cfg = quick_config();
  const fs::path a = testing::temp_dir("det_a"), b = testing::temp_dir("det_b");
  emit_results(run_experiment(small_context(), cfg), a);
  emit_results(run_experiment(small_context(), cfg), b);
  EXPECT_EQ(without_timings(nlohmann::json::parse(slurp(a / "results.json"))),
            without_timings(nlohmann::json::parse(slurp(b / "results.json"))));
  EXPECT_EQ(slurp(a / "traces" / "sag_b18_seed1.jsonl"),
            slurp(b / "traces" / "sag_b18_seed1.jsonl"));
}

TEST(Experiment, ParallelMatchesSequential) {
  ExperimentConfig cfg = quick_config();
  cfg.strategies = {StrategyKind::sag};
  const ExperimentResults seq = run_experiment(small_context(), cfg);
  cfg.parallel = 2;
  const ExperimentResults par = run_experiment(small_context(), cfg);
  ASSERT_EQ(seq.runs.size(), par.runs.size());
  for (std::size_t i = 0; i < seq.runs.size(); ++i) {
    EXPECT_EQ(seq.runs[i].selected, par.runs[i].selected);
    EXPECT_EQ(seq.runs[i].accuracy, par.runs[i].accuracy);
  }
}

TEST(Experiment, LambdaSweepCsv) {
  ExperimentConfig cfg = quick_config();
  cfg.runs = 1;
  cfg.sweep = SweepAxis::lambda;
  cfg.lambda_points = {0.2, 0.6};
  const ExperimentResults res = run_experiment(small_context(), cfg);
  EXPECT_EQ(res.runs.size(), 3u);  // two SAG points plus one random run
  const fs::path dir = testing::temp_dir("sweep");
  emit_results(res, dir);
  std::istringstream csv(slurp(dir / "sweep_lambda.csv"));
  std::string header, first, second, extra;
  std::getline(csv, header);
  std::getline(csv, first);
  std::getline(csv, second);
  EXPECT_EQ(header, "lambda,mean_accuracy,std_accuracy");
  EXPECT_EQ(first.substr(0, 9), "0.200000,");
  EXPECT_EQ(second.substr(0, 9), "0.600000,");
  EXPECT_FALSE(std::getline(csv, extra));
}

TEST(Experiment, BudgetSweepDefaultsAndCsv) {
  ExperimentConfig cfg = quick_config();
  cfg.strategies = {StrategyKind::random};
  cfg.runs = 1;
  cfg.sweep = SweepAxis::budget;
  cfg.budget_points = {12, 15};
  const fs::path dir = testing::temp_dir("bsweep");
  emit_results(run_experiment(small_context(), cfg), dir);
  const std::string csv = slurp(dir / "sweep_budget.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "strategy,budget,mean_accuracy,std_accuracy,mean_nir,std_nir");
  EXPECT_NE(csv.find("random,12,"), std::string::npos);
  EXPECT_NE(csv.find("random,15,"), std::string::npos);
}

TEST(Experiment, SingleRunAtSeedBudget) {
  ExperimentConfig cfg = quick_config();
  cfg.strategies = {StrategyKind::random};
  cfg.runs = 1;
  cfg.budget = 12;  // exactly the per-class seed set
  const ExperimentResults res = run_experiment(small_context(), cfg);
  ASSERT_EQ(res.runs.size(), 1u);
  EXPECT_EQ(res.runs[0].selected.size(), 12u);
  EXPECT_EQ(res.summary[0].metrics.at("accuracy").std, 0.0);
}

TEST(Experiment, RejectsOversizedBudget) {
  ExperimentConfig cfg = quick_config();
  cfg.budget = small_context().split.pool.size() + 1;
  EXPECT_THROW(run_experiment(small_context(), cfg), std::invalid_argument);
}

TEST(Experiment, BinaryTaskReportsAuc) {
  SyntheticSpec s;
  s.num_nodes = 120;
  s.num_classes = 2;
  s.num_features = 40;
  s.topic_size = 15;
  s.val_size = 20;
  s.test_size = 40;
  const DatasetContext ctx(make_synthetic(s));
  ExperimentConfig cfg = quick_config();
  cfg.strategies = {StrategyKind::random};
  cfg.runs = 1;
  cfg.budget = 10;
  const ExperimentResults res = run_experiment(ctx, cfg);
  ASSERT_TRUE(res.runs[0].auc.has_value());
  EXPECT_GE(*res.runs[0].auc, 0.0);
  EXPECT_LE(*res.runs[0].auc, 1.0);
  EXPECT_TRUE(res.runs[0].binary_f1.has_value());
}

}  // namespace
}  // namespace sagal
