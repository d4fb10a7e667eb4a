#include "sagal/graph.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace sagal {
namespace fs = std::filesystem;
using nlohmann::json;

Graph Graph::from_edges(std::string name, std::size_t num_nodes,
                        std::span<const std::pair<NodeId, NodeId>> edges,
                        std::vector<float> features, std::size_t num_features,
                        std::vector<int> labels, std::size_t num_classes) {
  if (features.size() != num_nodes * num_features)
    throw DatasetError("feature matrix has " + std::to_string(features.size()) +
                       " values, expected " +
                       std::to_string(num_nodes * num_features));
  if (labels.size() != num_nodes)
    throw DatasetError("label count " + std::to_string(labels.size()) +
                       " does not match node count " +
                       std::to_string(num_nodes));
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes)
      throw DatasetError("label " + std::to_string(labels[i]) + " of node " +
                         std::to_string(i) + " outside [0, " +
                         std::to_string(num_classes) + ")");
  for (float f : features)
    if (!std::isfinite(f)) throw DatasetError("non-finite feature value");

  std::vector<std::pair<NodeId, NodeId>> directed;
  directed.reserve(edges.size() * 2);
  for (auto [u, v] : edges) {
    if (u >= num_nodes || v >= num_nodes)
      throw DatasetError("edge (" + std::to_string(u) + ", " +
                         std::to_string(v) + ") references a missing node");
    if (u == v)
      throw DatasetError("self-loop on node " + std::to_string(u));
    directed.emplace_back(u, v);
    directed.emplace_back(v, u);
  }
  std::sort(directed.begin(), directed.end());
  directed.erase(std::unique(directed.begin(), directed.end()), directed.end());

  Graph g;
  g.name_ = std::move(name);
  g.num_nodes_ = num_nodes;
  g.num_features_ = num_features;
  g.num_classes_ = num_classes;
  g.offsets_.assign(num_nodes + 1, 0);
  g.neighbors_.reserve(directed.size());
  for (auto [u, v] : directed) {
    ++g.offsets_[u + 1];
    g.neighbors_.push_back(v);
  }
  for (std::size_t i = 0; i < num_nodes; ++i) g.offsets_[i + 1] += g.offsets_[i];
  g.features_ = std::move(features);
  g.labels_ = std::move(labels);
  return g;
}

std::vector<std::pair<NodeId, NodeId>> Graph::edge_list() const {
  std::vector<std::pair<NodeId, NodeId>> out;
  out.reserve(num_edges());
  for (NodeId u = 0; u < num_nodes_; ++u)
    for (NodeId v : neighbors(u))
      if (u < v) out.emplace_back(u, v);
  return out;
}

Split Split::from_val_test(std::vector<NodeId> val, std::vector<NodeId> test,
                           std::size_t num_nodes) {
  std::vector<char> role(num_nodes, 0);
  auto mark = [&](const std::vector<NodeId>& set, char tag, const char* what) {
    for (NodeId u : set) {
      if (u >= num_nodes)
        throw DatasetError(std::string(what) + " node " + std::to_string(u) +
                           " out of range");
      if (role[u] != 0)
        throw DatasetError(std::string(what) + " node " + std::to_string(u) +
                           " appears twice or overlaps another split");
      role[u] = tag;
    }
  };
  mark(val, 1, "validation");
  mark(test, 2, "test");
  Split s;
  s.val = std::move(val);
  s.test = std::move(test);
  for (NodeId u = 0; u < num_nodes; ++u)
    if (role[u] == 0) s.pool.push_back(u);
  return s;
}

NormalizedAdjacency normalize_adjacency(const Graph& g) {
  const std::size_t n = g.num_nodes();
  std::vector<double> inv_sqrt(n);
  for (NodeId u = 0; u < n; ++u)
    inv_sqrt[u] = 1.0 / std::sqrt(static_cast<double>(g.degree(u) + 1));

  CsrMatrix m;
  m.rows = m.cols = n;
  m.row_ptr.assign(n + 1, 0);
  m.col_idx.reserve(2 * g.num_edges() + n);
  m.values.reserve(2 * g.num_edges() + n);
  for (NodeId u = 0; u < n; ++u) {
    bool diagonal_done = false;
    auto emit_diagonal = [&] {
      m.col_idx.push_back(u);
      m.values.push_back(1.0 / static_cast<double>(g.degree(u) + 1));
      diagonal_done = true;
    };
    for (NodeId v : g.neighbors(u)) {
      if (!diagonal_done && v > u) emit_diagonal();
      m.col_idx.push_back(v);
      m.values.push_back(inv_sqrt[u] * inv_sqrt[v]);
    }
    if (!diagonal_done) emit_diagonal();
    m.row_ptr[u + 1] = m.col_idx.size();
  }
  return {std::move(m)};
}

namespace {

void require_file(const fs::path& p) {
  if (!fs::is_regular_file(p))
    throw DatasetError("missing dataset file: " + p.string());
}

json read_json(const fs::path& p) {
  require_file(p);
  std::ifstream in(p);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DatasetError("malformed JSON in " + p.string() + ": " + e.what());
  }
}

template <typename T>
T json_get(const json& j, const char* key, const fs::path& p) {
  if (!j.contains(key))
    throw DatasetError(p.string() + ": missing key \"" + key + "\"");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw DatasetError(p.string() + ": key \"" + key + "\" has the wrong type");
  }
}

std::vector<NodeId> node_list(const json& j, const char* key,
                              const fs::path& p) {
  auto raw = json_get<std::vector<long long>>(j, key, p);
  std::vector<NodeId> out;
  out.reserve(raw.size());
  for (long long v : raw) {
    if (v < 0) throw DatasetError(p.string() + ": negative node index");
    out.push_back(static_cast<NodeId>(v));
  }
  return out;
}

std::uint32_t to_little_endian(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big)
    return ((v & 0xFFu) << 24) | ((v & 0xFF00u) << 8) | ((v >> 8) & 0xFF00u) |
           (v >> 24);
  return v;
}

}  // namespace

Dataset load_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir))
    throw DatasetError("dataset directory not found: " + dir.string());

  const fs::path meta_path = dir / "meta.json";
  const json meta = read_json(meta_path);
  const auto name = json_get<std::string>(meta, "name", meta_path);
  const auto n = json_get<std::size_t>(meta, "num_nodes", meta_path);
  const auto f = json_get<std::size_t>(meta, "num_features", meta_path);
  const auto c = json_get<std::size_t>(meta, "num_classes", meta_path);

  const fs::path shape_path = dir / "features.json";
  const json shape = read_json(shape_path);
  const auto rows = json_get<std::size_t>(shape, "rows", shape_path);
  const auto cols = json_get<std::size_t>(shape, "cols", shape_path);
  if (rows != n || cols != f)
    throw DatasetError("features.json shape " + std::to_string(rows) + "x" +
                       std::to_string(cols) + " disagrees with meta.json " +
                       std::to_string(n) + "x" + std::to_string(f));

  const fs::path bin_path = dir / "features.bin";
  require_file(bin_path);
  const auto expected_bytes = n * f * sizeof(float);
  if (fs::file_size(bin_path) != expected_bytes)
    throw DatasetError("features.bin has " +
                       std::to_string(fs::file_size(bin_path)) +
                       " bytes, expected " + std::to_string(expected_bytes));
  std::vector<float> features(n * f);
  {
    std::ifstream in(bin_path, std::ios::binary);
    in.read(reinterpret_cast<char*>(features.data()),
            static_cast<std::streamsize>(expected_bytes));
    if (!in) throw DatasetError("short read on features.bin");
    if constexpr (std::endian::native == std::endian::big) {
      for (float& v : features) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        bits = to_little_endian(bits);
        std::memcpy(&v, &bits, 4);
      }
    }
  }

  const fs::path labels_path = dir / "labels.tsv";
  require_file(labels_path);
  std::vector<int> labels;
  {
    std::ifstream in(labels_path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      std::istringstream ss(line);
      long long v;
      if (!(ss >> v))
        throw DatasetError("labels.tsv line " + std::to_string(lineno) +
                           ": not an integer");
      labels.push_back(static_cast<int>(v));
    }
  }
  if (labels.size() != n)
    throw DatasetError("labels.tsv has " + std::to_string(labels.size()) +
                       " lines, expected " + std::to_string(n));

  const fs::path edges_path = dir / "edges.tsv";
  require_file(edges_path);
  std::vector<std::pair<NodeId, NodeId>> edges;
  {
    std::ifstream in(edges_path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      std::istringstream ss(line);
      long long u, v;
      if (!(ss >> u >> v) || u < 0 || v < 0)
        throw DatasetError("edges.tsv line " + std::to_string(lineno) +
                           ": expected two node indices");
      if (u == v)
        throw DatasetError("edges.tsv line " + std::to_string(lineno) +
                           ": self-loop on node " + std::to_string(u));
      edges.emplace_back(static_cast<NodeId>(u), static_cast<NodeId>(v));
    }
  }

  Graph g = Graph::from_edges(name, n, edges, std::move(features), f,
                              std::move(labels), c);

  const fs::path splits_path = dir / "splits.json";
  const json splits = read_json(splits_path);
  Split s = Split::from_val_test(node_list(splits, "val", splits_path),
                                 node_list(splits, "test", splits_path), n);
  return {std::move(g), std::move(s)};
}

void save_dataset(const Dataset& ds, const fs::path& dir) {
  const Graph& g = ds.graph;
  fs::create_directories(dir);
  auto open = [&](const char* file, std::ios::openmode mode = std::ios::out) {
    std::ofstream out(dir / file, mode | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + (dir / file).string());
    return out;
  };
  {
    json meta = {{"name", g.name()},
                 {"num_nodes", g.num_nodes()},
                 {"num_features", g.num_features()},
                 {"num_classes", g.num_classes()}};
    open("meta.json") << meta.dump() << '\n';
    json shape = {{"rows", g.num_nodes()}, {"cols", g.num_features()}};
    open("features.json") << shape.dump() << '\n';
  }
  {
    auto out = open("features.bin", std::ios::out | std::ios::binary);
    for (float v : g.features()) {
      std::uint32_t bits;
      std::memcpy(&bits, &v, 4);
      bits = to_little_endian(bits);
      out.write(reinterpret_cast<const char*>(&bits), 4);
    }
  }
  {
    auto out = open("edges.tsv");
    for (auto [u, v] : g.edge_list()) out << u << '\t' << v << '\n';
  }
  {
    auto out = open("labels.tsv");
    for (int l : g.labels()) out << l << '\n';
  }
  {
    json splits = {{"val", ds.split.val}, {"test", ds.split.test}};
    open("splits.json") << splits.dump() << '\n';
  }
}

std::optional<ReferenceStats> reference_stats(const std::string& name) {
  std::string key;
  for (char ch : name) key += static_cast<char>(std::tolower(ch));
  if (key == "cora") return ReferenceStats{2708, 5429, 1003, 0.185, 1433, 7};
  if (key == "citeseer")
    return ReferenceStats{3327, 4732, 1204, 0.254, 3703, 6};
  if (key == "pubmed")
    return ReferenceStats{19717, 44338, 8759, 0.198, 500, 3};
  return std::nullopt;
}

StatsReport validate_stats(const Graph& g, const Split* split) {
  StatsReport r;
  r.name = g.name();
  r.nodes = g.num_nodes();
  r.edges = g.num_edges();
  r.features = g.num_features();
  r.classes = g.num_classes();
  for (auto [u, v] : g.edge_list())
    if (g.label(u) != g.label(v)) ++r.inter_class_edges;
  r.inter_class_ratio =
      r.edges == 0 ? 0.0
                   : static_cast<double>(r.inter_class_edges) /
                         static_cast<double>(r.edges);
  for (NodeId u = 0; u < g.num_nodes(); ++u)
    if (g.degree(u) == 0) ++r.isolated_nodes;
  if (split) {
    r.pool = split->pool.size();
    r.val = split->val.size();
    r.test = split->test.size();
  }
  r.reference = reference_stats(g.name());
  if (r.reference) {
    const auto& ref = *r.reference;
    auto note = [&](const char* what, std::size_t have, std::size_t want) {
      if (have != want)
        r.discrepancies.push_back(std::string(what) + ": " +
                                  std::to_string(have) + " vs reference " +
                                  std::to_string(want));
    };
    note("nodes", r.nodes, ref.nodes);
    note("edges", r.edges, ref.edges);
    note("inter-class edges", r.inter_class_edges, ref.inter_class_edges);
    note("features", r.features, ref.features);
    note("classes", r.classes, ref.classes);
  }
  return r;
}

std::string format_stats_row(const StatsReport& r) {
  std::ostringstream os;
  os << r.name << '\t' << r.nodes << '\t' << r.edges << '\t'
     << r.inter_class_edges << '\t';
  os.setf(std::ios::fixed);
  os.precision(1);
  os << 100.0 * r.inter_class_ratio << "%\t" << r.features << '\t' << r.classes
     << '\t' << r.pool << '/' << r.val << '/' << r.test;
  return os.str();
}

}  // namespace sagal
