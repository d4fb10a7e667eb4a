#pragma once

#include <span>
#include <utility>

#include "sagal/graph.hpp"

namespace sagal {

double accuracy(std::span<const int> preds, std::span<const int> labels,
                std::span<const NodeId> nodes);

/// Unweighted mean of per-class F1 over all `num_classes` classes.
double macro_f1(std::span<const int> preds, std::span<const int> labels,
                std::span<const NodeId> nodes, std::size_t num_classes);

struct BinaryScores {
  double f1 = 0.0;
  double auc = 0.0;
};

/// F1 of class 1 (predicted when score > 0.5) and Mann-Whitney AUC (ties
/// count 1/2).
/// `scores` are per-node positive-class probabilities.
BinaryScores binary_f1_auc(std::span<const double> scores,
                           std::span<const int> labels,
                           std::span<const NodeId> nodes);

enum class NirMode {
  incident,  ///< edges with at least one endpoint in the set
  within,    ///< edges with both endpoints in the set
};

/// Fraction of inter-class pairs among the edge multiset {(u, v) : u ∈ nodes}.
double nir(const Graph& g, std::span<const NodeId> nodes,
           NirMode mode = NirMode::incident);

/// Whole-graph NIR: the inter-class edge ratio.
double nir_all(const Graph& g);

}  // namespace sagal
