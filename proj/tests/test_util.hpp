#pragma once

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "sagal/graph.hpp"
#include "sagal/sparse.hpp"

namespace sagal::testing {

using Edges = std::vector<std::pair<NodeId, NodeId>>;

inline Graph make_graph(std::size_t n, const Edges& edges,
                        const std::vector<std::vector<float>>& rows,
                        std::vector<int> labels, std::size_t num_classes) {
  const std::size_t f = rows.empty() ? 1 : rows.front().size();
  std::vector<float> flat;
  flat.reserve(n * f);
  for (std::size_t i = 0; i < n; ++i) {
    if (rows.empty())
      flat.push_back(1.0f);
    else
      flat.insert(flat.end(), rows[i].begin(), rows[i].end());
  }
  return Graph::from_edges("toy", n, edges, std::move(flat), f, std::move(labels),
                           num_classes);
}

/// 0–1–2 path with x0 = x1 = (1,0), x2 = (0,1); labels 0, 0, 1.
inline Graph path3() {
  return make_graph(3, {{0, 1}, {1, 2}}, {{1, 0}, {1, 0}, {0, 1}}, {0, 0, 1}, 2);
}

/// Erdős–Rényi graph with random labels and random binary features.
inline Graph random_graph(std::size_t n, double p, std::size_t num_features,
                         std::size_t num_classes, std::mt19937_64& rng) {
  std::bernoulli_distribution edge(p), bit(0.4);
  std::uniform_int_distribution<int> cls(0, static_cast<int>(num_classes) - 1);
  Edges edges;
  for (NodeId u = 0; u < n; ++u)
    for (NodeId v = u + 1; v < n; ++v)
      if (edge(rng)) edges.emplace_back(u, v);
  std::vector<std::vector<float>> rows(n, std::vector<float>(num_features));
  for (auto& r : rows)
    for (float& x : r) x = bit(rng) ? 1.0f : 0.0f;
  std::vector<int> labels(n);
  for (int& y : labels) y = cls(rng);
  return make_graph(n, edges, rows, std::move(labels), num_classes);
}

/// Dense D̃^{-1/2}(A+I)D̃^{-1/2} built straight from the definition.
inline DenseMatrix dense_normalized(const Graph& g) {
  const auto n = static_cast<Eigen::Index>(g.num_nodes());
  DenseMatrix a = DenseMatrix::Identity(n, n);
  for (auto [u, v] : g.edge_list()) a(u, v) = a(v, u) = 1.0;
  Eigen::VectorXd dinv = a.rowwise().sum().array().rsqrt();
  return dinv.asDiagonal() * a * dinv.asDiagonal();
}

inline DenseMatrix dense_power(const DenseMatrix& m, int k) {
  DenseMatrix out = DenseMatrix::Identity(m.rows(), m.cols());
  for (int i = 0; i < k; ++i) out = out * m;
  return out;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& tag) {
  static int counter = 0;
  auto p = std::filesystem::temp_directory_path() /
           ("sagal_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace sagal::testing
