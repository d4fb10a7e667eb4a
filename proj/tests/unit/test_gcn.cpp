#include <gtest/gtest.h>

#include "sagal/gcn.hpp"
#include "test_util.hpp"

namespace sagal {
namespace {

struct Problem {
  Graph g;
  NormalizedAdjacency adj;
  CsrMatrix x;
  GcnInputs in() const { return {&adj.matrix, &x}; }
  std::vector<int> labels() const { return {g.labels().begin(), g.labels().end()}; }
};

Problem make_problem(Graph g) {
  Problem p{std::move(g), {}, {}};
  p.adj = normalize_adjacency(p.g);
  p.x = csr_from_dense_rows(p.g.features(), p.g.num_nodes(), p.g.num_features());
  return p;
}

// Dense reference: loss and gradients straight from the matrix formulas.
struct DenseReference {
  double loss;
  DenseMatrix g1, g2;
};

DenseReference dense_reference(const Problem& p, const DenseMatrix& w1,
                               const DenseMatrix& w2, std::span<const NodeId> labeled,
                               double wd) {
  const DenseMatrix a = p.adj.matrix.to_dense();
  const DenseMatrix x = p.x.to_dense();
  const DenseMatrix z1 = a * x * w1;
  const DenseMatrix h = z1.cwiseMax(0.0);
  DenseMatrix z2 = a * h * w2;
  DenseMatrix probs = z2;
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    probs.row(r) = (probs.row(r).array() - probs.row(r).maxCoeff()).exp();
    probs.row(r) /= probs.row(r).sum();
  }
  DenseMatrix dz2 = DenseMatrix::Zero(probs.rows(), probs.cols());
  double ce = 0.0;
  const auto labels = p.labels();
  for (NodeId u : labeled) {
    ce -= std::log(probs(u, labels[u]));
    dz2.row(u) = probs.row(u);
    dz2(u, labels[u]) -= 1.0;
  }
  const double inv = labeled.empty() ? 0.0 : 1.0 / static_cast<double>(labeled.size());
  ce *= inv;
  dz2 *= inv;
  const DenseMatrix dhw = a.transpose() * dz2;
  DenseMatrix g2 = h.transpose() * dhw + wd * w2;
  DenseMatrix dh = dhw * w2.transpose();
  for (Eigen::Index i = 0; i < dh.size(); ++i)
    if (z1.data()[i] <= 0.0) dh.data()[i] = 0.0;
  DenseMatrix g1 = x.transpose() * (a.transpose() * dh) + wd * w1;
  return {ce + 0.5 * wd * (w1.squaredNorm() + w2.squaredNorm()), g1, g2};
}

TEST(Gcn, OutputRowsAreDistributions) {
  std::mt19937_64 rng(1);
  const Problem p = make_problem(testing::random_graph(15, 0.2, 6, 3, rng));
  GcnModel m(6, 3, 4, 16);
  for (bool training : {false, true}) {
    const DenseMatrix probs = m.forward(p.in(), training);
    ASSERT_EQ(probs.rows(), 15);
    ASSERT_EQ(probs.cols(), 3);
    for (Eigen::Index r = 0; r < probs.rows(); ++r) EXPECT_NEAR(probs.row(r).sum(), 1.0, 1e-6);
  }
}

TEST(Gcn, ZeroWeightsGiveUniformRows) {
  const Problem p = make_problem(testing::path3());
  GcnModel m(2, 2, 0, 4);
  m.set_weights(m.w1(), DenseMatrix::Zero(4, 2));
  const DenseMatrix probs = m.forward(p.in(), false);
  for (Eigen::Index i = 0; i < probs.size(); ++i) EXPECT_DOUBLE_EQ(probs.data()[i], 0.5);
}

TEST(Gcn, DefaultShapes) {
  GcnModel m(1433, 7, 0);
  EXPECT_EQ(m.hidden(), 128u);
  EXPECT_EQ(m.w1().rows(), 1433);
  EXPECT_EQ(m.w1().cols(), 128);
  EXPECT_EQ(m.w2().rows(), 128);
  EXPECT_EQ(m.w2().cols(), 7);
  EXPECT_THROW(GcnModel(0, 7, 0), std::invalid_argument);
}

TEST(Gcn, TrainingReducesLossOnPath) {
  const Problem p = make_problem(testing::path3());
  GcnModel m(2, 2, 3);
  TrainConfig cfg;
  cfg.early_stopping = false;
  const std::vector<NodeId> labeled{0, 2};
  const TrainReport r = m.train(p.in(), labeled, p.labels(), cfg);
  EXPECT_EQ(r.epochs_run, 200);
  EXPECT_LT(r.final_loss, r.initial_loss);
}

TEST(Gcn, SameSeedSameTrajectory) {
  std::mt19937_64 rng(5);
  const Problem p = make_problem(testing::random_graph(40, 0.1, 8, 3, rng));
  const std::vector<NodeId> labeled{0, 5, 9, 13, 22};
  const std::vector<NodeId> val{1, 2, 3, 4};
  GcnModel a(8, 3, 42, 16), b(8, 3, 42, 16);
  const TrainReport ra = a.train(p.in(), labeled, p.labels(), TrainConfig::final_protocol(), val);
  const TrainReport rb = b.train(p.in(), labeled, p.labels(), TrainConfig::final_protocol(), val);
  EXPECT_EQ(ra.loss_curve, rb.loss_curve);
  EXPECT_EQ(a.w1(), b.w1());
  EXPECT_EQ(a.w2(), b.w2());
  GcnModel c(8, 3, 43, 16);
  EXPECT_NE(c.w1(), GcnModel(8, 3, 42, 16).w1());
}

TEST(Gcn, EarlyStoppingRestoresBestEpoch) {
  std::mt19937_64 rng(8);
  const Problem p = make_problem(testing::random_graph(40, 0.1, 8, 3, rng));
  const std::vector<NodeId> labeled{0, 5, 9};
  const std::vector<NodeId> val{10, 11, 12, 13, 14, 15};
  GcnModel m(8, 3, 1, 16);
  TrainConfig cfg;
  cfg.patience = 5;
  const TrainReport r = m.train(p.in(), labeled, p.labels(), cfg, val);
  EXPECT_LE(r.epochs_run, 200);
  EXPECT_GE(r.best_epoch, 0);
  EXPECT_LE(r.epochs_run - 1 - r.best_epoch, cfg.patience);
  EXPECT_THROW(m.train(p.in(), {}, p.labels(), cfg, val), std::invalid_argument);
}

TEST(Gcn, GradientsMatchDenseReference) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 5; ++trial) {
    const Problem p = make_problem(testing::random_graph(18, 0.15, 7, 3, rng));
    GcnModel m(7, 3, static_cast<std::uint64_t>(trial), 10);
    const std::vector<NodeId> labeled{1, 4, 7};
    const DenseReference ref = dense_reference(p, m.w1(), m.w2(), labeled, 5e-4);
    double loss = 0.0;
    const Gradients g = m.gradients(p.in(), labeled, p.labels(), 5e-4, false, &loss);
    EXPECT_NEAR(loss, ref.loss, 1e-12);
    EXPECT_NEAR(m.loss(p.in(), labeled, p.labels(), 5e-4), ref.loss, 1e-12);
    EXPECT_LT((g.w1 - ref.g1).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((g.w2 - ref.g2).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Gcn, GradientCheckSmallGraph) {
  std::mt19937_64 rng(33);
  const Problem p = make_problem(testing::random_graph(5, 0.5, 4, 2, rng));
  GcnModel m(4, 2, 2, 8);
  const std::vector<NodeId> labeled{0, 3};
  EXPECT_LT(gradient_check(m, p.in(), labeled, p.labels(), 5e-4), 1e-4);
}

TEST(Gcn, NoLabeledNodesMeansOnlyWeightDecay) {
  std::mt19937_64 rng(4);
  const Problem p = make_problem(testing::random_graph(8, 0.3, 4, 2, rng));
  GcnModel m(4, 2, 9, 6);
  const Gradients zero = m.gradients(p.in(), {}, p.labels(), 0.0, false);
  EXPECT_EQ(zero.w1.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(zero.w2.cwiseAbs().maxCoeff(), 0.0);
  const Gradients wd = m.gradients(p.in(), {}, p.labels(), 0.01, false);
  EXPECT_EQ(wd.w1, DenseMatrix(0.01 * m.w1()));
  EXPECT_EQ(wd.w2, DenseMatrix(0.01 * m.w2()));
}

TEST(Gcn, CheckpointRoundTrip) {
  GcnModel m(5, 3, 77, 4);
  const auto dir = testing::temp_dir("ckpt");
  m.save_checkpoint(dir / "w.bin");
  EXPECT_EQ(std::filesystem::file_size(dir / "w.bin"), (5 * 4 + 4 * 3) * sizeof(float));
  GcnModel back(5, 3, 1, 4);
  back.load_checkpoint(dir / "w.bin");
  EXPECT_LT((back.w1() - m.w1()).cwiseAbs().maxCoeff(), 1e-7);
  EXPECT_LT((back.w2() - m.w2()).cwiseAbs().maxCoeff(), 1e-7);
  GcnModel other(6, 3, 1, 4);
  EXPECT_THROW(other.load_checkpoint(dir / "w.bin"), std::runtime_error);
  std::filesystem::remove_all(dir);
}

TEST(Entropy, Values) {
  const std::vector<double> uniform(7, 1.0 / 7.0);
  EXPECT_NEAR(entropy(uniform), std::log(7.0), 1e-12);
  EXPECT_NEAR(entropy(uniform), 1.9459, 1e-4);
  EXPECT_EQ(entropy(std::vector<double>{0, 1, 0}), 0.0);
  EXPECT_NEAR(entropy(std::vector<double>{0.5, 0.5}), 0.6931, 1e-4);
}

TEST(PseudoLabel, ArgmaxWithLowTieBreak) {
  EXPECT_EQ(pseudo_label(std::vector<double>{0.1, 0.7, 0.2}), 1);
  EXPECT_EQ(pseudo_label(std::vector<double>{0.5, 0.5}), 0);
  EXPECT_EQ(pseudo_label(std::vector<double>{0, 0, 0, 1}), 3);
}

}  // namespace
}  // namespace sagal
