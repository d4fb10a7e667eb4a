#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sagal/graph.hpp"
#include "sagal/sparse.hpp"

namespace sagal {

/// Sparse k-step propagation matrix Â^k. Entry (v, u) is the influence of
/// node u on node v after k GCN layers; the matrix is symmetric.
class PropagationOperator {
 public:
  PropagationOperator() = default;
  PropagationOperator(int k, double epsilon, CsrMatrix matrix)
      : k_(k), epsilon_(epsilon), matrix_(std::move(matrix)) {}

  int k() const { return k_; }
  double epsilon() const { return epsilon_; }
  const CsrMatrix& matrix() const { return matrix_; }
  std::size_t num_nodes() const { return matrix_.rows; }

  /// I(u, v) = (Â^k)[v, u]; zero outside the retained k-hop support.
  double influence(NodeId u, NodeId v) const { return matrix_.at(v, u); }

  /// N_k(u): retained support of row u, ascending.
  std::span<const NodeId> neighborhood(NodeId u) const {
    return matrix_.row_cols(u);
  }
  std::span<const double> neighborhood_influence(NodeId u) const {
    return matrix_.row_values(u);
  }

 private:
  int k_ = 0;
  double epsilon_ = 0.0;
  CsrMatrix matrix_;
};

/// Default bound on retained entries of Â^k (about 1.6 GB of storage).
inline constexpr std::size_t kDefaultPropagationBudget = 100'000'000;

/// Repeated sparse products of Â, pruning entries <= epsilon after each
/// product (and on Â itself).
PropagationOperator build_propagation(
    const NormalizedAdjacency& adj, int k, double epsilon,
    std::size_t max_entries = kDefaultPropagationBudget);

enum class SimilarityKind { cosine, inverse_euclidean, constant_one };
enum class FeatureSpace { raw, propagated };

struct SimilarityMetric {
  SimilarityKind kind = SimilarityKind::cosine;
  FeatureSpace space = FeatureSpace::raw;
};

std::string to_string(SimilarityKind kind);
std::string to_string(FeatureSpace space);
SimilarityKind parse_similarity_kind(const std::string& s);
FeatureSpace parse_feature_space(const std::string& s);

/// Dense double-precision feature rows in one feature space, with cached
/// L2 norms.
class FeatureTable {
 public:
  FeatureTable() = default;
  FeatureTable(std::size_t rows, std::size_t cols, std::vector<double> data);

  /// Raw rows of X, or rows of Â^k X (k exact applications of Â).
  static FeatureTable build(const Graph& g, const NormalizedAdjacency& adj,
                            FeatureSpace space, int k);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::span<const double> row(NodeId u) const {
    return {data_.data() + static_cast<std::size_t>(u) * cols_, cols_};
  }
  /// Column indices of nonzero entries in row u.
  std::span<const NodeId> support(NodeId u) const {
    return {support_.data() + support_ptr_[u],
            support_ptr_[u + 1] - support_ptr_[u]};
  }
  double norm(NodeId u) const { return norms_[u]; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
  std::vector<double> norms_;
  std::vector<std::size_t> support_ptr_{0};
  std::vector<NodeId> support_;
};

/// sim(a, b). Cosine with an all-zero vector is 0.
double similarity(SimilarityKind kind, std::span<const double> a,
                  std::span<const double> b);

/// Pairs a propagation operator with a feature table and similarity metric:
/// SI(u, v) = sim(u, v) * I(u, v).
class SemanticInfluence {
 public:
  SemanticInfluence(const PropagationOperator& op, const FeatureTable& features,
                    SimilarityKind kind);

  const PropagationOperator& op() const { return *op_; }
  SimilarityKind kind() const { return kind_; }

  double similarity(NodeId u, NodeId v) const;
  double operator()(NodeId u, NodeId v) const;

  /// Visits (v, SI(u, v)) for every v in N_k(u).
  template <typename Fn>
  void for_each_in_range(NodeId u, Fn&& fn) const {
    auto cols = op_->neighborhood(u);
    auto vals = op_->neighborhood_influence(u);
    for (std::size_t i = 0; i < cols.size(); ++i)
      fn(cols[i], pair_similarity(u, cols[i]) * vals[i]);
  }

 private:
  double pair_similarity(NodeId u, NodeId v) const;

  const PropagationOperator* op_;
  const FeatureTable* features_;
  SimilarityKind kind_;
};

/// Membership set over node ids with O(1) lookup.
class ActivatedSet {
 public:
  explicit ActivatedSet(std::size_t num_nodes = 0) : mask_(num_nodes, 0) {}

  bool contains(NodeId v) const { return mask_[v] != 0; }
  bool insert(NodeId v) {
    if (mask_[v]) return false;
    mask_[v] = 1;
    ++count_;
    return true;
  }
  std::size_t size() const { return count_; }
  std::size_t capacity() const { return mask_.size(); }
  std::vector<NodeId> members() const;

 private:
  std::vector<unsigned char> mask_;
  std::size_t count_ = 0;
};

/// σ_p(L): nodes v in N_k(l) with SI(l, v) > theta for some l in L.
ActivatedSet activated_set(const SemanticInfluence& si,
                           std::span<const NodeId> labeled, double theta);

/// |σ_p(L ∪ {u}) − σ_p(L)| given the cached σ_p(L); scans row u only.
std::size_t marginal_gain(const SemanticInfluence& si, NodeId u, double theta,
                          const ActivatedSet& activated);

/// Per-node activation lists {v : SI(u, v) > theta}, precomputed once so
/// repeated gain evaluation is a membership scan.
class ActivationIndex {
 public:
  ActivationIndex(const SemanticInfluence& si, double theta);

  std::size_t num_nodes() const { return ptr_.size() - 1; }
  double theta() const { return theta_; }
  std::span<const NodeId> activates(NodeId u) const {
    return {targets_.data() + ptr_[u], ptr_[u + 1] - ptr_[u]};
  }

  std::size_t marginal_gain(NodeId u, const ActivatedSet& activated) const;
  /// Adds u's activations to `activated`; returns how many were new.
  std::size_t activate(NodeId u, ActivatedSet& activated) const;

 private:
  double theta_;
  std::vector<std::size_t> ptr_{0};
  std::vector<NodeId> targets_;
};

}  // namespace sagal
