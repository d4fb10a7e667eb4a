#include <gtest/gtest.h>

#include "sagal/influence.hpp"
#include "test_util.hpp"

namespace sagal {
namespace {

using testing::path3;

struct PathFixture {
  Graph g = path3();
  NormalizedAdjacency adj = normalize_adjacency(g);
  PropagationOperator op = build_propagation(adj, 2, 0.0);
  FeatureTable features = FeatureTable::build(g, adj, FeatureSpace::raw, 2);

  SemanticInfluence si(SimilarityKind kind = SimilarityKind::cosine) const {
    return SemanticInfluence(op, features, kind);
  }
};

TEST(Propagation, PathSquareEntries) {
  PathFixture f;
  EXPECT_NEAR(f.op.matrix().at(0, 2), 1.0 / 6.0, 1e-15);
  EXPECT_NEAR(f.op.matrix().at(0, 0), 5.0 / 12.0, 1e-15);
  EXPECT_NEAR(f.op.matrix().at(1, 0), 5.0 / (6.0 * std::sqrt(6.0)), 1e-15);
  EXPECT_NEAR(f.op.influence(0, 2), 1.0 / 6.0, 1e-15);
}

TEST(Propagation, KOneIsAdjacency) {
  PathFixture f;
  const PropagationOperator op1 = build_propagation(f.adj, 1, 0.0);
  EXPECT_EQ(op1.matrix().to_dense(), f.adj.matrix.to_dense());
}

TEST(Propagation, SymmetricInfluence) {
  std::mt19937_64 rng(17);
  const Graph g = testing::random_graph(25, 0.15, 3, 2, rng);
  const PropagationOperator op = build_propagation(normalize_adjacency(g), 3, 0.0);
  for (NodeId u = 0; u < 25; ++u)
    for (NodeId v = 0; v < 25; ++v) EXPECT_NEAR(op.influence(u, v), op.influence(v, u), 1e-15);
}

TEST(Propagation, DistanceBeyondKIsZero) {
  const Graph g = testing::make_graph(4, {{0, 1}, {1, 2}, {2, 3}}, {}, {0, 0, 0, 0}, 1);
  const PropagationOperator op = build_propagation(normalize_adjacency(g), 2, 0.0);
  EXPECT_EQ(op.influence(0, 3), 0.0);
  EXPECT_GT(op.influence(0, 2), 0.0);
}

TEST(Propagation, PrunesAtEpsilon) {
  PathFixture f;
  const PropagationOperator op = build_propagation(f.adj, 2, 0.2);
  EXPECT_EQ(op.influence(0, 2), 0.0);
  EXPECT_NEAR(op.influence(0, 0), 5.0 / 12.0, 1e-15);
  EXPECT_THROW(build_propagation(f.adj, 0, 0.0), std::invalid_argument);
  EXPECT_THROW(build_propagation(f.adj, 2, -1.0), std::invalid_argument);
}

TEST(Similarity, AnalyticValues) {
  const std::vector<double> a{1, 0}, b{1, 1}, c{0, 1}, z{0, 0};
  EXPECT_NEAR(similarity(SimilarityKind::cosine, a, b), 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(similarity(SimilarityKind::cosine, b, b), 1.0, 1e-15);
  EXPECT_NEAR(similarity(SimilarityKind::inverse_euclidean, a, c), 1.0 / (1.0 + std::sqrt(2.0)),
              1e-15);
  EXPECT_EQ(similarity(SimilarityKind::cosine, a, z), 0.0);
  EXPECT_EQ(similarity(SimilarityKind::constant_one, a, c), 1.0);
}

TEST(Similarity, ParseNames) {
  EXPECT_EQ(parse_similarity_kind("cosine"), SimilarityKind::cosine);
  EXPECT_EQ(parse_similarity_kind("euclidean"), SimilarityKind::inverse_euclidean);
  EXPECT_EQ(parse_similarity_kind("one"), SimilarityKind::constant_one);
  EXPECT_EQ(parse_feature_space("propagated"), FeatureSpace::propagated);
  EXPECT_THROW(parse_similarity_kind("att"), std::invalid_argument);
}

TEST(FeatureTable, PropagatedSpaceAppliesAdjacencyKTimes) {
  PathFixture f;
  const FeatureTable t = FeatureTable::build(f.g, f.adj, FeatureSpace::propagated, 2);
  DenseMatrix x(3, 2);
  x << 1, 0, 1, 0, 0, 1;
  const DenseMatrix expect = testing::dense_power(testing::dense_normalized(f.g), 2) * x;
  for (NodeId u = 0; u < 3; ++u)
    for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(t.row(u)[j], expect(u, j), 1e-15);
}

TEST(SemanticInfluence, PathExample) {
  PathFixture f;
  const SemanticInfluence si = f.si();
  EXPECT_NEAR(si(0, 1), 0.34021, 1e-5);
  EXPECT_NEAR(si(0, 1), 5.0 / (6.0 * std::sqrt(6.0)), 1e-15);
  EXPECT_EQ(si(0, 2), 0.0);
  const SemanticInfluence ones = f.si(SimilarityKind::constant_one);
  for (NodeId u = 0; u < 3; ++u)
    for (NodeId v = 0; v < 3; ++v) EXPECT_EQ(ones(u, v), f.op.influence(u, v));
}

TEST(ActivatedSet, PathExample) {
  PathFixture f;
  const SemanticInfluence si = f.si();
  const std::vector<NodeId> l0{0};
  EXPECT_EQ(activated_set(si, l0, 0.1).members(), (std::vector<NodeId>{0, 1}));
  EXPECT_EQ(activated_set(si, {}, 0.1).size(), 0u);
  EXPECT_EQ(activated_set(si, l0, 0.9).size(), 0u);
}

TEST(MarginalGain, PathExample) {
  PathFixture f;
  const SemanticInfluence si = f.si();
  const ActivatedSet act = activated_set(si, std::vector<NodeId>{0}, 0.1);
  EXPECT_EQ(marginal_gain(si, 2, 0.1, act), 1u);
  EXPECT_EQ(marginal_gain(si, 1, 0.1, act), 0u);
  const ActivationIndex index(si, 0.1);
  EXPECT_EQ(index.marginal_gain(2, act), 1u);
  EXPECT_EQ(index.marginal_gain(1, act), 0u);
}

TEST(MarginalGain, SmallThresholdCoversNeighborhood) {
  std::mt19937_64 rng(2);
  const Graph g = testing::random_graph(20, 0.15, 3, 2, rng);
  const NormalizedAdjacency adj = normalize_adjacency(g);
  const PropagationOperator op = build_propagation(adj, 2, 0.0);
  const FeatureTable t = FeatureTable::build(g, adj, FeatureSpace::raw, 2);
  const SemanticInfluence si(op, t, SimilarityKind::constant_one);
  const ActivatedSet empty(20);
  for (NodeId u = 0; u < 20; ++u)
    EXPECT_EQ(marginal_gain(si, u, 1e-12, empty), op.neighborhood(u).size());
}

TEST(ActivationIndex, AgreesWithDirectEvaluation) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const Graph g = testing::random_graph(30, 0.12, 5, 3, rng);
    const NormalizedAdjacency adj = normalize_adjacency(g);
    const PropagationOperator op = build_propagation(adj, 2, 1e-4);
    const FeatureTable t = FeatureTable::build(g, adj, FeatureSpace::raw, 2);
    const SemanticInfluence si(op, t, SimilarityKind::cosine);
    const ActivationIndex index(si, 0.05);
    ActivatedSet act(30);
    for (NodeId u : {3u, 17u, 8u}) {
      for (NodeId v = 0; v < 30; ++v)
        EXPECT_EQ(index.marginal_gain(v, act), marginal_gain(si, v, 0.05, act));
      index.activate(u, act);
    }
    const std::vector<NodeId> l{3, 17, 8};
    EXPECT_EQ(act.members(), activated_set(si, l, 0.05).members());
  }
  PathFixture f;
  EXPECT_THROW(ActivationIndex(f.si(), 0.0), std::invalid_argument);
}

}  // namespace
}  // namespace sagal
