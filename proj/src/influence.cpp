#include "sagal/influence.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sagal {

namespace {

CsrMatrix pruned(const CsrMatrix& m, double epsilon) {
  CsrMatrix out;
  out.rows = m.rows;
  out.cols = m.cols;
  out.row_ptr.assign(m.rows + 1, 0);
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (std::size_t p = m.row_ptr[r]; p < m.row_ptr[r + 1]; ++p) {
      if (std::abs(m.values[p]) > epsilon) {
        out.col_idx.push_back(m.col_idx[p]);
        out.values.push_back(m.values[p]);
      }
    }
    out.row_ptr[r + 1] = out.col_idx.size();
  }
  return out;
}

}  // namespace

PropagationOperator build_propagation(const NormalizedAdjacency& adj, int k,
                                      double epsilon,
                                      std::size_t max_entries) {
  if (k < 1) throw std::invalid_argument("propagation depth k must be >= 1");
  if (!(epsilon >= 0.0))
    throw std::invalid_argument("pruning threshold epsilon must be >= 0");
  CsrMatrix base = pruned(adj.matrix, epsilon);
  if (base.nnz() > max_entries)
    throw MemoryBudgetError(base.nnz(), max_entries);
  CsrMatrix power = base;
  for (int step = 1; step < k; ++step)
    power = multiply(power, base, epsilon, max_entries);
  return {k, epsilon, std::move(power)};
}

std::string to_string(SimilarityKind kind) {
  switch (kind) {
    case SimilarityKind::cosine: return "cosine";
    case SimilarityKind::inverse_euclidean: return "euclidean";
    case SimilarityKind::constant_one: return "one";
  }
  return "?";
}

std::string to_string(FeatureSpace space) {
  return space == FeatureSpace::raw ? "raw" : "propagated";
}

SimilarityKind parse_similarity_kind(const std::string& s) {
  if (s == "cosine") return SimilarityKind::cosine;
  if (s == "euclidean") return SimilarityKind::inverse_euclidean;
  if (s == "one") return SimilarityKind::constant_one;
  throw std::invalid_argument("unknown similarity '" + s + "'");
}

FeatureSpace parse_feature_space(const std::string& s) {
  if (s == "raw") return FeatureSpace::raw;
  if (s == "propagated") return FeatureSpace::propagated;
  throw std::invalid_argument("unknown feature space '" + s + "'");
}

FeatureTable::FeatureTable(std::size_t rows, std::size_t cols,
                           std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_)
    throw std::invalid_argument("FeatureTable: size mismatch");
  norms_.resize(rows_);
  support_ptr_.assign(rows_ + 1, 0);
  for (std::size_t r = 0; r < rows_; ++r) {
    double sq = 0.0;
    for (std::size_t c = 0; c < cols_; ++c) {
      const double v = data_[r * cols_ + c];
      if (v != 0.0) {
        sq += v * v;
        support_.push_back(static_cast<NodeId>(c));
      }
    }
    norms_[r] = std::sqrt(sq);
    support_ptr_[r + 1] = support_.size();
  }
}

FeatureTable FeatureTable::build(const Graph& g, const NormalizedAdjacency& adj,
                                 FeatureSpace space, int k) {
  const std::size_t n = g.num_nodes();
  const std::size_t f = g.num_features();
  auto raw = g.features();
  if (space == FeatureSpace::raw)
    return FeatureTable(n, f, std::vector<double>(raw.begin(), raw.end()));

  DenseMatrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(f));
  for (std::size_t i = 0; i < n * f; ++i) x.data()[i] = raw[i];
  DenseMatrix next;
  for (int step = 0; step < k; ++step) {
    multiply_dense(adj.matrix, x, next);
    x.swap(next);
  }
  return FeatureTable(n, f, std::vector<double>(x.data(), x.data() + n * f));
}

double similarity(SimilarityKind kind, std::span<const double> a,
                  std::span<const double> b) {
  if (a.size() != b.size())
    throw std::invalid_argument("similarity: dimension mismatch");
  switch (kind) {
    case SimilarityKind::constant_one: return 1.0;
    case SimilarityKind::cosine: {
      double dot = 0.0, na = 0.0, nb = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
      }
      if (na == 0.0 || nb == 0.0) return 0.0;
      return dot / (std::sqrt(na) * std::sqrt(nb));
    }
    case SimilarityKind::inverse_euclidean: {
      double sq = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sq += d * d;
      }
      return 1.0 / (1.0 + std::sqrt(sq));
    }
  }
  return 0.0;
}

SemanticInfluence::SemanticInfluence(const PropagationOperator& op,
                                     const FeatureTable& features,
                                     SimilarityKind kind)
    : op_(&op), features_(&features), kind_(kind) {
  if (kind != SimilarityKind::constant_one &&
      features.rows() != op.num_nodes())
    throw std::invalid_argument(
        "SemanticInfluence: feature rows do not match operator size");
}

double SemanticInfluence::pair_similarity(NodeId u, NodeId v) const {
  if (kind_ == SimilarityKind::constant_one) return 1.0;
  // Iterate the sparse support of u against the dense row of v.
  const auto xu = features_->row(u);
  const auto xv = features_->row(v);
  double dot = 0.0;
  for (NodeId j : features_->support(u)) dot += xu[j] * xv[j];
  const double nu = features_->norm(u);
  const double nv = features_->norm(v);
  if (kind_ == SimilarityKind::cosine) {
    if (nu == 0.0 || nv == 0.0) return 0.0;
    return dot / (nu * nv);
  }
  const double sq = std::max(0.0, nu * nu + nv * nv - 2.0 * dot);
  return 1.0 / (1.0 + std::sqrt(sq));
}

double SemanticInfluence::similarity(NodeId u, NodeId v) const {
  return pair_similarity(u, v);
}

double SemanticInfluence::operator()(NodeId u, NodeId v) const {
  const double inf = op_->influence(u, v);
  if (inf == 0.0) return 0.0;
  return pair_similarity(u, v) * inf;
}

std::vector<NodeId> ActivatedSet::members() const {
  std::vector<NodeId> out;
  out.reserve(count_);
  for (std::size_t v = 0; v < mask_.size(); ++v)
    if (mask_[v]) out.push_back(static_cast<NodeId>(v));
  return out;
}

ActivatedSet activated_set(const SemanticInfluence& si,
                           std::span<const NodeId> labeled, double theta) {
  ActivatedSet out(si.op().num_nodes());
  for (NodeId l : labeled)
    si.for_each_in_range(l, [&](NodeId v, double value) {
      if (value > theta) out.insert(v);
    });
  return out;
}

std::size_t marginal_gain(const SemanticInfluence& si, NodeId u, double theta,
                          const ActivatedSet& activated) {
  std::size_t gain = 0;
  si.for_each_in_range(u, [&](NodeId v, double value) {
    if (value > theta && !activated.contains(v)) ++gain;
  });
  return gain;
}

ActivationIndex::ActivationIndex(const SemanticInfluence& si, double theta)
    : theta_(theta) {
  if (!(theta > 0.0))
    throw std::invalid_argument("activation threshold theta must be > 0");
  const std::size_t n = si.op().num_nodes();
  ptr_.assign(n + 1, 0);
  for (NodeId u = 0; u < n; ++u) {
    si.for_each_in_range(u, [&](NodeId v, double value) {
      if (value > theta) targets_.push_back(v);
    });
    ptr_[u + 1] = targets_.size();
  }
}

std::size_t ActivationIndex::marginal_gain(NodeId u,
                                           const ActivatedSet& activated) const {
  std::size_t gain = 0;
  for (NodeId v : activates(u))
    if (!activated.contains(v)) ++gain;
  return gain;
}

std::size_t ActivationIndex::activate(NodeId u, ActivatedSet& activated) const {
  std::size_t added = 0;
  for (NodeId v : activates(u))
    if (activated.insert(v)) ++added;
  return added;
}

}  // namespace sagal
