#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sagal/sparse.hpp"

namespace sagal {

/// Raised for malformed or inconsistent dataset input.
class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Undirected graph with dense float node features and class labels.
///
/// The adjacency is stored as sorted CSR neighbor lists; every undirected
/// edge appears once in each endpoint's list. Self-loops are never stored.
class Graph {
 public:
  Graph() = default;

  /// Builds a graph from an arbitrary-orientation edge list. Duplicate and
  /// reversed pairs are merged; a self-loop or out-of-range endpoint throws
  /// DatasetError.
  static Graph from_edges(std::string name, std::size_t num_nodes,
                          std::span<const std::pair<NodeId, NodeId>> edges,
                          std::vector<float> features, std::size_t num_features,
                          std::vector<int> labels, std::size_t num_classes);

  const std::string& name() const { return name_; }
  std::size_t num_nodes() const { return num_nodes_; }
  std::size_t num_features() const { return num_features_; }
  std::size_t num_classes() const { return num_classes_; }
  /// Undirected edge count.
  std::size_t num_edges() const { return neighbors_.size() / 2; }

  std::span<const NodeId> neighbors(NodeId u) const {
    return {neighbors_.data() + offsets_[u], offsets_[u + 1] - offsets_[u]};
  }
  std::size_t degree(NodeId u) const { return offsets_[u + 1] - offsets_[u]; }

  std::span<const float> features() const { return features_; }
  std::span<const float> feature_row(NodeId u) const {
    return {features_.data() + static_cast<std::size_t>(u) * num_features_,
            num_features_};
  }

  std::span<const int> labels() const { return labels_; }
  int label(NodeId u) const { return labels_[u]; }

  /// Each undirected edge once, as (u, v) with u < v, in ascending order.
  std::vector<std::pair<NodeId, NodeId>> edge_list() const;

  friend bool operator==(const Graph&, const Graph&) = default;

 private:
  std::string name_;
  std::size_t num_nodes_ = 0;
  std::size_t num_features_ = 0;
  std::size_t num_classes_ = 0;
  std::vector<std::size_t> offsets_{0};
  std::vector<NodeId> neighbors_;
  std::vector<float> features_;
  std::vector<int> labels_;
};

/// Fixed evaluation split. The pool holds every node not in val or test.
struct Split {
  std::vector<NodeId> val;
  std::vector<NodeId> test;
  std::vector<NodeId> pool;

  /// Derives the pool and checks the three sets are disjoint and in range.
  static Split from_val_test(std::vector<NodeId> val, std::vector<NodeId> test,
                             std::size_t num_nodes);

  friend bool operator==(const Split&, const Split&) = default;
};

/// D^{-1/2}(A+I)D^{-1/2} with D the degree matrix of A+I.
struct NormalizedAdjacency {
  CsrMatrix matrix;
};

NormalizedAdjacency normalize_adjacency(const Graph& g);

struct Dataset {
  Graph graph;
  Split split;
};

/// Reads meta.json, edges.tsv, features.bin, features.json, labels.tsv and
/// splits.json from `dir`.
Dataset load_dataset(const std::filesystem::path& dir);

/// Writes the same directory layout load_dataset reads.
void save_dataset(const Dataset& ds, const std::filesystem::path& dir);

/// Reference row from the published benchmark statistics.
struct ReferenceStats {
  std::size_t nodes;
  std::size_t edges;
  std::size_t inter_class_edges;
  double inter_class_ratio;
  std::size_t features;
  std::size_t classes;
};

std::optional<ReferenceStats> reference_stats(const std::string& name);

struct StatsReport {
  std::string name;
  std::size_t nodes = 0;
  std::size_t edges = 0;
  std::size_t inter_class_edges = 0;
  double inter_class_ratio = 0.0;
  std::size_t features = 0;
  std::size_t classes = 0;
  std::size_t isolated_nodes = 0;
  std::size_t pool = 0, val = 0, test = 0;
  std::optional<ReferenceStats> reference;
  /// Human-readable discrepancies against `reference` (edge-count
  /// differences are reported here, never raised).
  std::vector<std::string> discrepancies;
};

StatsReport validate_stats(const Graph& g, const Split* split = nullptr);

/// One table row: name nodes edges inter ratio% features classes pool/val/test.
std::string format_stats_row(const StatsReport& report);

}  // namespace sagal
