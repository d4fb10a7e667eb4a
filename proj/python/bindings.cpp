#include <numeric>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "sagal/graph.hpp"
#include "sagal/harness.hpp"
#include "sagal/influence.hpp"
#include "sagal/metrics.hpp"
#include "sagal/synthetic.hpp"

namespace py = pybind11;
using namespace sagal;

namespace {

NirMode parse_nir_mode(const std::string& s) {
  if (s == "incident") return NirMode::incident;
  if (s == "within") return NirMode::within;
  throw std::invalid_argument("unknown NIR mode '" + s + "'");
}

template <typename T>
py::array_t<T> to_array(const std::vector<T>& v) {
  py::array_t<T> a(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

py::dict stats_dict(const StatsReport& r) {
  py::dict d;
  d["name"] = r.name;
  d["nodes"] = r.nodes;
  d["edges"] = r.edges;
  d["inter_class_edges"] = r.inter_class_edges;
  d["inter_class_ratio"] = r.inter_class_ratio;
  d["features"] = r.features;
  d["classes"] = r.classes;
  d["isolated_nodes"] = r.isolated_nodes;
  d["pool"] = r.pool;
  d["val"] = r.val;
  d["test"] = r.test;
  d["row"] = format_stats_row(r);
  d["discrepancies"] = r.discrepancies;
  return d;
}

// Results cross the boundary as JSON text; the Python side parses it.
std::string experiment(const Dataset& ds, const std::vector<std::string>& strategies,
                       std::optional<std::size_t> budget, std::size_t runs,
                       std::uint64_t seed, double lambda, double theta, int k,
                       double epsilon, const std::string& sim, bool no_semantic,
                       bool no_diversity, bool no_class_balance,
                       std::optional<int> retrain_epochs, std::optional<int> final_epochs,
                       std::optional<std::filesystem::path> out, std::size_t parallel) {
  ExperimentConfig cfg;
  cfg.strategies.clear();
  for (const auto& s : strategies) cfg.strategies.push_back(parse_strategy(s));
  cfg.budget = budget;
  cfg.runs = runs;
  cfg.base_seed = seed;
  cfg.parallel = parallel;
  cfg.sag.lambda = lambda;
  cfg.sag.theta = theta;
  cfg.sag.k = k;
  cfg.sag.epsilon = epsilon;
  cfg.sag.metric.kind = parse_similarity_kind(sim);
  cfg.sag.no_semantic = no_semantic;
  cfg.sag.no_diversity = no_diversity;
  cfg.sag.no_class_balance = no_class_balance;
  if (retrain_epochs) cfg.sag.retrain.max_epochs = *retrain_epochs;
  if (final_epochs) cfg.final_training.max_epochs = *final_epochs;
  cfg.validate();

  ExperimentResults res;
  {
    py::gil_scoped_release release;
    const DatasetContext ctx(ds);
    res = run_experiment(ctx, cfg);
    if (out) emit_results(res, *out);
  }
  nlohmann::json doc;
  doc["dataset"] = res.dataset_name;
  doc["config"] = res.config;
  doc["runs"] = nlohmann::json::array();
  for (const RunResult& r : res.runs) {
    nlohmann::json j = to_json(r);
    j["trace"] = nlohmann::json::array();
    for (const TraceEntry& e : r.trace) j["trace"].push_back(to_json(e));
    doc["runs"].push_back(std::move(j));
  }
  return doc.dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Graph active learning with semantic-aware influence (native core).";

  py::register_exception<DatasetError>(m, "DatasetError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::class_<Dataset>(m, "Dataset")
      .def_static("load", &load_dataset, py::arg("path"))
      .def("save", [](const Dataset& d, const std::filesystem::path& p) { save_dataset(d, p); },
           py::arg("path"))
      .def_property_readonly("name", [](const Dataset& d) { return d.graph.name(); })
      .def_property_readonly("num_nodes", [](const Dataset& d) { return d.graph.num_nodes(); })
      .def_property_readonly("num_edges", [](const Dataset& d) { return d.graph.num_edges(); })
      .def_property_readonly("num_features",
                             [](const Dataset& d) { return d.graph.num_features(); })
      .def_property_readonly("num_classes",
                             [](const Dataset& d) { return d.graph.num_classes(); })
      .def_property_readonly("labels",
                             [](const Dataset& d) {
                               const auto l = d.graph.labels();
                               return to_array(std::vector<int>(l.begin(), l.end()));
                             })
      .def_property_readonly("features",
                             [](const Dataset& d) {
                               const auto f = d.graph.features();
                               py::array_t<float> a({d.graph.num_nodes(), d.graph.num_features()});
                               std::copy(f.begin(), f.end(), a.mutable_data());
                               return a;
                             })
      .def("edges", [](const Dataset& d) { return d.graph.edge_list(); },
           "Undirected edges as (u, v) pairs with u < v.")
      .def("neighbors",
           [](const Dataset& d, NodeId u) {
             if (u >= d.graph.num_nodes()) throw py::index_error("node out of range");
             const auto n = d.graph.neighbors(u);
             return std::vector<NodeId>(n.begin(), n.end());
           })
      .def_property_readonly("val", [](const Dataset& d) { return d.split.val; })
      .def_property_readonly("test", [](const Dataset& d) { return d.split.test; })
      .def_property_readonly("pool", [](const Dataset& d) { return d.split.pool; })
      .def("stats", [](const Dataset& d) { return stats_dict(validate_stats(d.graph, &d.split)); })
      .def("__repr__", [](const Dataset& d) {
        return "<Dataset " + d.graph.name() + ": " + std::to_string(d.graph.num_nodes()) +
               " nodes, " + std::to_string(d.graph.num_edges()) + " edges>";
      });

  m.def(
      "synthetic",
      [](std::size_t nodes, std::size_t classes, std::size_t features, double degree,
         double inter_ratio, std::size_t words, double topic_fraction, std::size_t topic_size,
         std::size_t val, std::size_t test, std::uint64_t seed, std::string name) {
        SyntheticSpec s;
        s.name = std::move(name);
        s.num_nodes = nodes;
        s.num_classes = classes;
        s.num_features = features;
        s.average_degree = degree;
        s.inter_class_ratio = inter_ratio;
        s.words_per_node = words;
        s.topic_fraction = topic_fraction;
        s.topic_size = topic_size;
        s.val_size = val;
        s.test_size = test;
        s.seed = seed;
        return make_synthetic(s);
      },
      py::arg("nodes") = 600, py::arg("classes") = 4, py::arg("features") = 200,
      py::arg("degree") = 4.0, py::arg("inter_ratio") = 0.2, py::arg("words") = 12,
      py::arg("topic_fraction") = 0.6, py::arg("topic_size") = 30, py::arg("val") = 100,
      py::arg("test") = 200, py::arg("seed") = 0, py::arg("name") = "synthetic");

  m.def(
      "propagation",
      [](const Dataset& d, int k, double epsilon) {
        const PropagationOperator op =
            build_propagation(normalize_adjacency(d.graph), k, epsilon);
        const CsrMatrix& c = op.matrix();
        return py::make_tuple(to_array(c.row_ptr), to_array(c.col_idx), to_array(c.values));
      },
      py::arg("dataset"), py::arg("k") = 2, py::arg("epsilon") = 1e-4,
      "CSR arrays (indptr, indices, data) of the pruned k-step operator.");

  m.def(
      "nir",
      [](const Dataset& d, const std::vector<NodeId>& nodes, const std::string& mode) {
        for (NodeId u : nodes)
          if (u >= d.graph.num_nodes()) throw py::index_error("node out of range");
        return nir(d.graph, nodes, parse_nir_mode(mode));
      },
      py::arg("dataset"), py::arg("nodes"), py::arg("mode") = "incident");
  m.def("nir_all", [](const Dataset& d) { return nir_all(d.graph); }, py::arg("dataset"));

  m.def(
      "accuracy",
      [](const std::vector<int>& preds, const std::vector<int>& labels) {
        if (preds.size() != labels.size()) throw py::value_error("length mismatch");
        std::vector<NodeId> all(preds.size());
        std::iota(all.begin(), all.end(), NodeId{0});
        return accuracy(preds, labels, all);
      },
      py::arg("preds"), py::arg("labels"));
  m.def(
      "macro_f1",
      [](const std::vector<int>& preds, const std::vector<int>& labels, std::size_t classes) {
        if (preds.size() != labels.size()) throw py::value_error("length mismatch");
        for (std::size_t i = 0; i < preds.size(); ++i)
          if (preds[i] < 0 || labels[i] < 0 || static_cast<std::size_t>(preds[i]) >= classes ||
              static_cast<std::size_t>(labels[i]) >= classes)
            throw py::value_error("class id out of range");
        std::vector<NodeId> all(preds.size());
        std::iota(all.begin(), all.end(), NodeId{0});
        return macro_f1(preds, labels, all, classes);
      },
      py::arg("preds"), py::arg("labels"), py::arg("num_classes"));
  m.def(
      "binary_f1_auc",
      [](const std::vector<double>& scores, const std::vector<int>& labels) {
        if (scores.size() != labels.size()) throw py::value_error("length mismatch");
        std::vector<NodeId> all(scores.size());
        std::iota(all.begin(), all.end(), NodeId{0});
        const BinaryScores b = binary_f1_auc(scores, labels, all);
        return py::make_tuple(b.f1, b.auc);
      },
      py::arg("scores"), py::arg("labels"));

  m.def("_run_experiment", &experiment, py::arg("dataset"), py::arg("strategies"),
        py::arg("budget"), py::arg("runs"), py::arg("seed"), py::arg("lambda_"),
        py::arg("theta"), py::arg("k"), py::arg("epsilon"), py::arg("sim"),
        py::arg("no_semantic"), py::arg("no_diversity"), py::arg("no_class_balance"),
        py::arg("retrain_epochs"), py::arg("final_epochs"), py::arg("out"),
        py::arg("parallel"));
}
