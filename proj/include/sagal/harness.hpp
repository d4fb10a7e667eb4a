#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sagal/metrics.hpp"
#include "sagal/strategies.hpp"

namespace sagal {

enum class StrategyKind { sag, random, degree, entropy };
enum class SweepAxis { none, budget, lambda };

std::string to_string(StrategyKind kind);
StrategyKind parse_strategy(const std::string& s);
std::string to_string(SweepAxis axis);
SweepAxis parse_sweep_axis(const std::string& s);

struct ExperimentConfig {
  std::filesystem::path dataset;
  std::vector<StrategyKind> strategies{StrategyKind::sag};
  std::optional<std::size_t> budget;  ///< defaults to 20·C
  std::size_t runs = 10;
  std::uint64_t base_seed = 0;
  SagConfig sag;
  TrainConfig final_training = TrainConfig::final_protocol();
  SweepAxis sweep = SweepAxis::none;
  std::vector<std::size_t> budget_points;  ///< defaults to {4C, 8C, ..., 20C}
  std::vector<double> lambda_points;       ///< defaults to {0.1, ..., 0.9}
  NirMode nir_mode = NirMode::incident;
  std::size_t parallel = 1;

  std::size_t effective_budget(std::size_t num_classes) const {
    return budget.value_or(20 * num_classes);
  }
  void validate() const;
};

nlohmann::json to_json(const SagConfig& cfg);
nlohmann::json to_json(const TrainConfig& cfg);
nlohmann::json to_json(const ExperimentConfig& cfg);

/// Display label for a SAG configuration, e.g. "sag", "sag-dist",
/// "sag-no-semantic".
std::string sag_variant_label(const SagConfig& cfg);

struct RunResult {
  std::string strategy;  ///< variant label
  std::uint64_t seed = 0;
  std::size_t budget = 0;
  std::optional<double> lambda;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::optional<double> binary_f1;
  std::optional<double> auc;
  double nir = 0.0;
  double wall_seconds = 0.0;        ///< acquisition + final training
  double preprocess_seconds = 0.0;  ///< shared Â^k / activation-index build
  std::vector<NodeId> selected;
  std::size_t initial_size = 0;
  bool budget_exhausted = false;
  int best_epoch = 0;
  int epochs_run = 0;
  std::vector<TraceEntry> trace;
  nlohmann::json config;
};

nlohmann::json to_json(const RunResult& r);
nlohmann::json to_json(const TraceEntry& e);

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;  ///< sample standard deviation, 0 for a single run
  std::size_t count = 0;
};

MetricSummary summarize_values(std::span<const double> values);

struct SummaryRow {
  std::string strategy;
  std::size_t budget = 0;
  std::optional<double> lambda;
  std::size_t runs = 0;
  std::map<std::string, MetricSummary> metrics;
};

/// Groups runs by (strategy, budget, lambda) in first-appearance order.
std::vector<SummaryRow> summarize(const std::vector<RunResult>& runs);

struct ExperimentResults {
  std::string dataset_name;
  SweepAxis sweep = SweepAxis::none;
  nlohmann::json config;
  std::vector<RunResult> runs;
  std::vector<SummaryRow> summary;
};

/// One acquisition + final training + evaluation. `prep` is required for
/// SAG and ignored otherwise.
RunResult run_single(const DatasetContext& ctx, const SagPreprocessing* prep,
                     StrategyKind kind, const SagConfig& sag,
                     const TrainConfig& final_training, std::size_t budget,
                     std::uint64_t seed, NirMode nir_mode = NirMode::incident);

ExperimentResults run_experiment(const DatasetContext& ctx,
                                 const ExperimentConfig& cfg);
ExperimentResults run_experiment(const ExperimentConfig& cfg);

/// Writes results.json, summary.tsv, traces/*.jsonl and, for sweeps,
/// sweep_<axis>.csv. Throws before writing anything when `results` is empty.
void emit_results(const ExperimentResults& results,
                  const std::filesystem::path& out_dir);

/// Fixed-width console table of the summary rows.
std::string format_summary_table(const std::vector<SummaryRow>& rows);

}  // namespace sagal
