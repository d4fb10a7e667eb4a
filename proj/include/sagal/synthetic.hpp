#pragma once

#include <cstdint>
#include <string>

#include "sagal/graph.hpp"

namespace sagal {

/// Parameters for a citation-style planted-partition graph: heavy-tailed
/// degrees, a target fraction of inter-class edges, and sparse binary
/// bag-of-words features drawn from per-class topic vocabularies.
struct SyntheticSpec {
  std::string name = "synthetic";
  std::size_t num_nodes = 600;
  std::size_t num_classes = 4;
  std::size_t num_features = 200;
  double average_degree = 4.0;
  double inter_class_ratio = 0.2;
  std::size_t words_per_node = 12;
  /// Probability that a word is drawn from the node's own class topic.
  double topic_fraction = 0.6;
  std::size_t topic_size = 30;
  std::size_t val_size = 100;
  std::size_t test_size = 200;
  std::uint64_t seed = 0;
};

Dataset make_synthetic(const SyntheticSpec& spec);

}  // namespace sagal
