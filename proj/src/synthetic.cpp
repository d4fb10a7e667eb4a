#include "sagal/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace sagal {

namespace {

// Cumulative-weight sampler over node subsets.
class WeightedPicker {
 public:
  WeightedPicker(std::vector<NodeId> nodes, const std::vector<double>& weight)
      : nodes_(std::move(nodes)) {
    cumulative_.reserve(nodes_.size());
    double acc = 0.0;
    for (NodeId u : nodes_) cumulative_.push_back(acc += weight[u]);
  }
  bool empty() const { return nodes_.empty(); }
  NodeId pick(std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> unit(0.0, cumulative_.back());
    const double r = unit(rng);
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), r);
    if (it == cumulative_.end()) --it;
    return nodes_[static_cast<std::size_t>(it - cumulative_.begin())];
  }

 private:
  std::vector<NodeId> nodes_;
  std::vector<double> cumulative_;
};

}  // namespace

Dataset make_synthetic(const SyntheticSpec& s) {
  if (s.num_classes < 2 || s.num_nodes < s.num_classes)
    throw std::invalid_argument("synthetic: need at least two classes");
  if (s.val_size + s.test_size >= s.num_nodes)
    throw std::invalid_argument("synthetic: splits leave no pool");
  if (s.topic_size * s.num_classes > s.num_features)
    throw std::invalid_argument("synthetic: topics exceed the vocabulary");

  std::mt19937_64 rng(s.seed);
  const std::size_t n = s.num_nodes;

  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % s.num_classes);
  std::shuffle(labels.begin(), labels.end(), rng);

  // Pareto-distributed attachment weights give a heavy-tailed degree profile.
  std::vector<double> weight(n);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (double& w : weight) w = std::pow(1.0 - unit(rng), -1.0 / 2.5);

  std::vector<std::vector<NodeId>> members(s.num_classes);
  std::vector<NodeId> everyone(n);
  std::iota(everyone.begin(), everyone.end(), NodeId{0});
  for (NodeId u = 0; u < n; ++u) members[static_cast<std::size_t>(labels[u])].push_back(u);
  std::vector<WeightedPicker> same_class;
  for (auto& m : members) same_class.emplace_back(m, weight);
  const WeightedPicker any(everyone, weight);

  const auto target_edges =
      static_cast<std::size_t>(s.average_degree * static_cast<double>(n) / 2.0);
  std::vector<std::pair<NodeId, NodeId>> edges;
  edges.reserve(target_edges);
  std::size_t attempts = 0;
  while (edges.size() < target_edges && attempts++ < 50 * target_edges) {
    const NodeId u = any.pick(rng);
    NodeId v;
    if (unit(rng) < s.inter_class_ratio) {
      do v = any.pick(rng);
      while (labels[v] == labels[u]);
    } else {
      v = same_class[static_cast<std::size_t>(labels[u])].pick(rng);
    }
    if (u != v) edges.emplace_back(std::min(u, v), std::max(u, v));
  }

  std::vector<float> features(n * s.num_features, 0.0f);
  std::uniform_int_distribution<std::size_t> any_word(0, s.num_features - 1);
  std::uniform_int_distribution<std::size_t> topic_word(0, s.topic_size - 1);
  for (NodeId u = 0; u < n; ++u) {
    const std::size_t base = static_cast<std::size_t>(labels[u]) * s.topic_size;
    for (std::size_t w = 0; w < s.words_per_node; ++w) {
      const std::size_t word =
          unit(rng) < s.topic_fraction ? base + topic_word(rng) : any_word(rng);
      features[u * s.num_features + word] = 1.0f;
    }
  }

  std::vector<NodeId> order = everyone;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<NodeId> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(s.val_size));
  std::vector<NodeId> test(order.begin() + static_cast<std::ptrdiff_t>(s.val_size),
                           order.begin() + static_cast<std::ptrdiff_t>(s.val_size + s.test_size));
  std::sort(val.begin(), val.end());
  std::sort(test.begin(), test.end());

  Graph g = Graph::from_edges(s.name, n, edges, std::move(features), s.num_features,
                              std::move(labels), s.num_classes);
  Split split = Split::from_val_test(std::move(val), std::move(test), n);
  return {std::move(g), std::move(split)};
}

}  // namespace sagal
