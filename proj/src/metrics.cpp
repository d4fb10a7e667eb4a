#include "sagal/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace sagal {

double accuracy(std::span<const int> preds, std::span<const int> labels,
                std::span<const NodeId> nodes) {
  if (nodes.empty()) throw std::invalid_argument("accuracy: empty node set");
  std::size_t hit = 0;
  for (NodeId u : nodes)
    if (preds[u] == labels[u]) ++hit;
  return static_cast<double>(hit) / static_cast<double>(nodes.size());
}

double macro_f1(std::span<const int> preds, std::span<const int> labels,
                std::span<const NodeId> nodes, std::size_t num_classes) {
  if (nodes.empty()) throw std::invalid_argument("macro_f1: empty node set");
  std::vector<std::size_t> tp(num_classes, 0), fp(num_classes, 0),
      fn(num_classes, 0);
  for (NodeId u : nodes) {
    const auto p = static_cast<std::size_t>(preds[u]);
    const auto y = static_cast<std::size_t>(labels[u]);
    if (p == y) {
      ++tp[y];
    } else {
      ++fp[p];
      ++fn[y];
    }
  }
  double sum = 0.0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    const std::size_t denom = 2 * tp[c] + fp[c] + fn[c];
    if (denom > 0) sum += 2.0 * static_cast<double>(tp[c]) / static_cast<double>(denom);
  }
  return sum / static_cast<double>(num_classes);
}

BinaryScores binary_f1_auc(std::span<const double> scores,
                           std::span<const int> labels,
                           std::span<const NodeId> nodes) {
  if (nodes.empty()) throw std::invalid_argument("binary_f1_auc: empty node set");
  std::size_t tp = 0, fp = 0, fn = 0, pos = 0, neg = 0;
  for (NodeId u : nodes) {
    const bool actual = labels[u] == 1;
    // Strict, so a 0.5 tie agrees with the argmax rule (class 0).
    const bool predicted = scores[u] > 0.5;
    pos += actual;
    neg += !actual;
    if (predicted && actual) ++tp;
    if (predicted && !actual) ++fp;
    if (!predicted && actual) ++fn;
  }
  if (pos == 0 || neg == 0)
    throw std::invalid_argument("binary_f1_auc: AUC undefined for a single class");

  BinaryScores out;
  const std::size_t denom = 2 * tp + fp + fn;
  out.f1 = denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);

  // Rank-sum with midranks for ties.
  std::vector<NodeId> order(nodes.begin(), nodes.end());
  std::sort(order.begin(), order.end(),
            [&](NodeId a, NodeId b) { return scores[a] < scores[b]; });
  double pos_rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t)
      if (labels[order[t]] == 1) pos_rank_sum += midrank;
    i = j;
  }
  const double p = static_cast<double>(pos), q = static_cast<double>(neg);
  out.auc = (pos_rank_sum - p * (p + 1.0) / 2.0) / (p * q);
  return out;
}

double nir(const Graph& g, std::span<const NodeId> nodes, NirMode mode) {
  if (nodes.empty()) throw std::invalid_argument("nir: empty node set");
  std::vector<char> in_set;
  if (mode == NirMode::within) {
    in_set.assign(g.num_nodes(), 0);
    for (NodeId u : nodes) in_set[u] = 1;
  }
  std::size_t pairs = 0, inter = 0;
  for (NodeId u : nodes) {
    for (NodeId v : g.neighbors(u)) {
      if (mode == NirMode::within && !in_set[v]) continue;
      ++pairs;
      if (g.label(u) != g.label(v)) ++inter;
    }
  }
  if (pairs == 0)
    throw std::invalid_argument("nir: selected set has no qualifying edges");
  return static_cast<double>(inter) / static_cast<double>(pairs);
}

double nir_all(const Graph& g) {
  std::vector<NodeId> all(g.num_nodes());
  std::iota(all.begin(), all.end(), NodeId{0});
  return nir(g, all);
}

}  // namespace sagal
