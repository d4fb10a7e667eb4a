#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sagal/gcn.hpp"
#include "sagal/graph.hpp"
#include "sagal/influence.hpp"

namespace sagal {

/// Immutable per-dataset inputs shared by every run on that dataset.
struct DatasetContext {
  Graph graph;
  Split split;
  NormalizedAdjacency adj;
  CsrMatrix features;  ///< sparse X (float32 values widened to double)

  explicit DatasetContext(Dataset ds);
  GcnInputs gcn_inputs() const { return {&adj.matrix, &features}; }
  std::vector<int> labels() const {
    return {graph.labels().begin(), graph.labels().end()};
  }
};

enum class DiversityDistance { euclidean, cosine };

struct SagConfig {
  double lambda = 0.3;
  double theta = 0.05;
  int k = 2;
  double epsilon = 1e-4;
  SimilarityMetric metric;
  DiversityDistance diversity_distance = DiversityDistance::euclidean;
  /// Per-class query caps; empty means an equal split of B − |initial|.
  std::vector<std::size_t> class_budgets;
  bool no_semantic = false;
  bool no_diversity = false;
  bool no_class_balance = false;
  std::size_t initial_per_class = 4;
  TrainConfig retrain = TrainConfig::acquisition_round();

  void validate() const;
  SimilarityKind effective_similarity() const {
    return no_semantic ? SimilarityKind::constant_one : metric.kind;
  }
  double effective_lambda() const { return no_diversity ? 0.0 : lambda; }
};

/// Everything SAG scoring needs that depends only on (dataset, config):
/// Â^k, the feature table, and the activation lists for θ.
class SagPreprocessing {
 public:
  SagPreprocessing(const DatasetContext& ctx, const SagConfig& cfg);

  const PropagationOperator& op() const { return op_; }
  const FeatureTable& features() const { return features_; }
  const ActivationIndex& index() const { return index_; }
  double seconds() const { return seconds_; }

 private:
  std::chrono::steady_clock::time_point started_;
  PropagationOperator op_;
  FeatureTable features_;
  ActivationIndex index_;
  double seconds_ = 0.0;
};

/// Per-class mean feature vectors; classes without labeled nodes are absent.
class Prototypes {
 public:
  explicit Prototypes(std::size_t num_classes = 0, std::size_t dim = 0)
      : centers_(num_classes), sq_norms_(num_classes, 0.0), dim_(dim) {}

  std::size_t num_classes() const { return centers_.size(); }
  std::size_t dim() const { return dim_; }
  std::size_t count() const;
  bool has(int c) const { return !centers_[static_cast<std::size_t>(c)].empty(); }
  std::span<const double> center(int c) const {
    return centers_[static_cast<std::size_t>(c)];
  }
  double squared_norm(int c) const { return sq_norms_[static_cast<std::size_t>(c)]; }

  void set(int c, std::vector<double> center);

 private:
  std::vector<std::vector<double>> centers_;
  std::vector<double> sq_norms_;
  std::size_t dim_;
};

/// Mean row of `features` over labeled nodes of each true class.
Prototypes update_prototypes(const FeatureTable& features,
                             std::span<const NodeId> labeled,
                             std::span<const int> labels,
                             std::size_t num_classes);

/// DIS(u): minimum distance from x_u to any prototype; 0 with no prototypes.
double diversity_score(const Prototypes& prototypes,
                       const FeatureTable& features, NodeId u,
                       DiversityDistance distance = DiversityDistance::euclidean);

/// Fraction of entries strictly smaller than scores[i], for every i.
std::vector<double> percentiles(std::span<const double> scores);
double percentile(std::span<const double> scores, std::size_t index);

/// (1 − λ)·p_inf + λ·p_dis.
inline double unified_score(double lambda, double p_inf, double p_dis) {
  return (1.0 - lambda) * p_inf + lambda * p_dis;
}

/// Node ids ordered by descending score, ties by ascending id.
std::vector<NodeId> rank_by_score(std::span<const NodeId> nodes,
                                  std::span<const double> scores);

/// floor(total / C) per class, remainder to the lowest class indices.
std::vector<std::size_t> equal_class_budgets(std::size_t total,
                                             std::size_t num_classes);

struct QueryDecision {
  NodeId node = 0;
  std::size_t rank = 0;
  int pseudo_label = 0;
  bool budget_exhausted = false;
};

/// Walks `ranked` and returns the first candidate whose pseudo-label class
/// is under budget. If every class is full, returns the top candidate with
/// budget_exhausted set. With `balance` off, always returns the top.
QueryDecision class_balanced_select(std::span<const NodeId> ranked,
                                    const DenseMatrix& probs,
                                    std::span<const std::size_t> counts,
                                    std::span<const std::size_t> budgets,
                                    bool balance = true);

struct AcquisitionState {
  std::vector<NodeId> labeled;
  std::size_t initial_size = 0;
  std::vector<std::size_t> per_class_counts;
  Prototypes prototypes;
  ActivatedSet activated;
  DenseMatrix probs;
  std::mt19937_64 rng;
  bool budget_exhausted = false;
};

struct TraceEntry {
  std::size_t iteration = 0;  ///< 0 for the initial seed set
  NodeId node = 0;
  std::optional<int> pseudo_label;
  int true_label = 0;
  std::optional<double> inf_percentile;
  std::optional<double> dis_percentile;
  std::optional<double> score;
};

struct AcquisitionResult {
  std::vector<NodeId> labeled;
  std::size_t initial_size = 0;
  std::vector<TraceEntry> trace;
  bool budget_exhausted = false;
};

/// `per_class` uniformly drawn pool nodes of each class, classes ascending.
std::vector<NodeId> initial_seed_set(const Graph& g, const Split& split,
                                     std::size_t per_class,
                                     std::mt19937_64& rng);

/// Sequential SAG acquisition until |L| = budget. Deterministic in `seed`.
/// `initial` replaces the random per-class seed set when given.
AcquisitionResult sag_acquire(const DatasetContext& ctx,
                              const SagPreprocessing& prep,
                              const SagConfig& cfg, std::size_t budget,
                              std::uint64_t seed,
                              const std::vector<NodeId>* initial = nullptr);

enum class BaselineKind { random, degree, entropy };

std::string to_string(BaselineKind kind);

/// Random and entropy start from the same seed set SAG uses; degree starts
/// empty. Entropy retrains the model each round like SAG.
AcquisitionResult baseline_select(BaselineKind kind, const DatasetContext& ctx,
                                  std::size_t budget, std::uint64_t seed,
                                  std::size_t initial_per_class = 4,
                                  const TrainConfig& retrain =
                                      TrainConfig::acquisition_round());

}  // namespace sagal
