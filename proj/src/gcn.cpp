#include "sagal/gcn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

namespace sagal {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
  if (!(dropout >= 0.0 && dropout < 1.0))
    throw std::invalid_argument("dropout must be in [0, 1)");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("weight_decay must be >= 0");
  if (max_epochs < 0) throw std::invalid_argument("max_epochs must be >= 0");
  if (early_stopping && patience < 1)
    throw std::invalid_argument("patience must be >= 1");
}

// Rows that must be computed for outputs on `out`: hidden rows are the
// one-hop closure of `out` under Â, input rows the closure of `hidden`.
// Rows outside the plan hold stale values and are never read.
struct GcnModel::RowPlan {
  std::vector<NodeId> out, hidden, input;

  static RowPlan around(const CsrMatrix& adj, std::span<const NodeId> targets) {
    RowPlan plan;
    std::vector<char> mark(adj.rows, 0);
    for (NodeId u : targets) {
      if (u >= adj.rows) throw std::out_of_range("GCN target node out of range");
      mark[u] = 1;
    }
    plan.out = collect(mark);
    expand(adj, plan.out, mark);
    plan.hidden = collect(mark);
    expand(adj, plan.hidden, mark);
    plan.input = collect(mark);
    return plan;
  }

  static RowPlan all(std::size_t n) {
    RowPlan plan;
    plan.out.resize(n);
    std::iota(plan.out.begin(), plan.out.end(), NodeId{0});
    plan.hidden = plan.input = plan.out;
    return plan;
  }

 private:
  static std::vector<NodeId> collect(const std::vector<char>& mark) {
    std::vector<NodeId> rows;
    for (std::size_t i = 0; i < mark.size(); ++i)
      if (mark[i]) rows.push_back(static_cast<NodeId>(i));
    return rows;
  }
  static void expand(const CsrMatrix& adj, std::span<const NodeId> rows,
                     std::vector<char>& mark) {
    for (NodeId r : rows)
      for (NodeId c : adj.row_cols(r)) mark[c] = 1;
  }
};

struct GcnModel::Workspace {
  std::vector<double> x_values;  // dropped copy of X.values, input rows only
  bool x_dropped = false;
  double hidden_scale = 1.0;     // surviving hidden units are scaled by this
  DenseMatrix xw;                // X W1
  DenseMatrix h1;                // dropout(relu(Â X W1))
  DenseMatrix hw;                // h1 W2
  DenseMatrix probs;             // softmax(Â h1 W2), rows of plan.out
  DenseMatrix d_out, d_hw, d_h1, d_xw;
};

namespace {

DenseMatrix glorot(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  DenseMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

// Bernoulli(p) stream that spends one 64-bit engine draw per four decisions.
class DropStream {
 public:
  DropStream(std::mt19937_64& rng, double p)
      : rng_(rng), threshold_(static_cast<std::uint32_t>(std::lround(p * 65536.0))) {}
  bool drop() {
    if (left_ == 0) {
      bits_ = rng_();
      left_ = 4;
    }
    const auto chunk = static_cast<std::uint32_t>(bits_ & 0xFFFFu);
    bits_ >>= 16;
    --left_;
    return chunk < threshold_;
  }

 private:
  std::mt19937_64& rng_;
  std::uint32_t threshold_;
  std::uint64_t bits_ = 0;
  int left_ = 0;
};

void ensure_shape(DenseMatrix& m, Eigen::Index rows, Eigen::Index cols) {
  if (m.rows() != rows || m.cols() != cols) m.resize(rows, cols);
}

void require_finite(const DenseMatrix& m, const char* what) {
  if (!m.allFinite())
    throw NumericalError(std::string("non-finite values in ") + what +
                         " (max |entry| = " +
                         std::to_string(m.cwiseAbs().maxCoeff()) + ")");
}

double accuracy_on(const DenseMatrix& probs, std::span<const NodeId> nodes,
                   std::span<const int> labels) {
  if (nodes.empty()) return 0.0;
  std::size_t hit = 0;
  for (NodeId u : nodes) {
    const auto row = probs.row(u);
    if (pseudo_label({row.data(), static_cast<std::size_t>(row.size())}) ==
        labels[u])
      ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(nodes.size());
}

}  // namespace

GcnModel::GcnModel(std::size_t num_features, std::size_t num_classes,
                   std::uint64_t seed, std::size_t hidden)
    : rng_(seed) {
  if (num_features == 0 || num_classes == 0 || hidden == 0)
    throw std::invalid_argument("GcnModel: dimensions must be positive");
  w1_ = glorot(num_features, hidden, rng_);
  w2_ = glorot(hidden, num_classes, rng_);
  m1_ = v1_ = DenseMatrix::Zero(w1_.rows(), w1_.cols());
  m2_ = v2_ = DenseMatrix::Zero(w2_.rows(), w2_.cols());
}

void GcnModel::set_weights(DenseMatrix w1, DenseMatrix w2) {
  if (w1.cols() != w2.rows())
    throw std::invalid_argument("set_weights: hidden sizes differ");
  w1_ = std::move(w1);
  w2_ = std::move(w2);
  m1_ = v1_ = DenseMatrix::Zero(w1_.rows(), w1_.cols());
  m2_ = v2_ = DenseMatrix::Zero(w2_.rows(), w2_.cols());
  adam_step_ = 0;
}

void GcnModel::forward_impl(const GcnInputs& in, bool training,
                            const RowPlan& plan, Workspace& ws) {
  const CsrMatrix& adj = *in.adj;
  const CsrMatrix& x = *in.features;
  if (x.cols != static_cast<std::size_t>(w1_.rows()) || adj.rows != x.rows)
    throw std::invalid_argument("forward: input shapes do not match the model");

  const auto n = static_cast<Eigen::Index>(x.rows);
  const bool drop = training && dropout_ > 0.0;
  const double keep_scale = 1.0 / (1.0 - dropout_);
  DropStream stream(rng_, dropout_);

  ws.x_dropped = drop;
  ws.hidden_scale = drop ? keep_scale : 1.0;
  if (drop) ws.x_values.resize(x.values.size());

  ensure_shape(ws.xw, n, w1_.cols());
  for (NodeId r : plan.input) {
    auto dst = ws.xw.row(r);
    dst.setZero();
    for (std::size_t p = x.row_ptr[r]; p < x.row_ptr[r + 1]; ++p) {
      double v = x.values[p];
      if (drop) ws.x_values[p] = v = stream.drop() ? 0.0 : v * keep_scale;
      if (v != 0.0) dst.noalias() += v * w1_.row(x.col_idx[p]);
    }
  }

  ensure_shape(ws.h1, n, w1_.cols());
  ensure_shape(ws.hw, n, w2_.cols());
  const DenseMatrix w2t = w2_.transpose();
  for (NodeId r : plan.hidden) {
    auto h = ws.h1.row(r);
    h.setZero();
    const auto cols = adj.row_cols(r);
    const auto vals = adj.row_values(r);
    for (std::size_t i = 0; i < cols.size(); ++i) h.noalias() += vals[i] * ws.xw.row(cols[i]);
    for (Eigen::Index j = 0; j < h.size(); ++j) {
      double& v = h(j);
      if (v <= 0.0 || (drop && stream.drop()))
        v = 0.0;
      else if (drop)
        v *= keep_scale;
    }
    for (Eigen::Index j = 0; j < w2t.rows(); ++j) ws.hw(r, j) = h.dot(w2t.row(j));
  }

  ensure_shape(ws.probs, n, w2_.cols());
  for (NodeId r : plan.out) {
    auto z = ws.probs.row(r);
    z.setZero();
    const auto cols = adj.row_cols(r);
    const auto vals = adj.row_values(r);
    for (std::size_t i = 0; i < cols.size(); ++i) z.noalias() += vals[i] * ws.hw.row(cols[i]);
    if (!z.allFinite()) throw NumericalError("non-finite values in output logits");
    const double mx = z.maxCoeff();
    z = (z.array() - mx).exp();
    z /= z.sum();
  }
}

DenseMatrix GcnModel::forward(const GcnInputs& in, bool training) {
  Workspace ws;
  forward_impl(in, training, RowPlan::all(in.features->rows), ws);
  return std::move(ws.probs);
}

double GcnModel::loss(const GcnInputs& in, std::span<const NodeId> labeled,
                      std::span<const int> labels, double weight_decay) {
  Workspace ws;
  forward_impl(in, false, RowPlan::around(*in.adj, labeled), ws);
  double ce = 0.0;
  for (NodeId u : labeled) ce -= std::log(std::max(ws.probs(u, labels[u]), 1e-300));
  if (!labeled.empty()) ce /= static_cast<double>(labeled.size());
  return ce + 0.5 * weight_decay * (w1_.squaredNorm() + w2_.squaredNorm());
}

double GcnModel::backward(const GcnInputs& in, std::span<const NodeId> labeled,
                          std::span<const int> labels, double weight_decay,
                          const RowPlan& plan, Workspace& ws, Gradients& g) const {
  const CsrMatrix& adj = *in.adj;
  const CsrMatrix& x = *in.features;
  const auto n = static_cast<Eigen::Index>(x.rows);
  const Eigen::Index hidden = w1_.cols(), classes = w2_.cols();

  ensure_shape(ws.d_out, n, classes);
  for (NodeId r : plan.out) ws.d_out.row(r).setZero();
  double ce = 0.0;
  if (!labeled.empty()) {
    const double inv = 1.0 / static_cast<double>(labeled.size());
    for (NodeId u : labeled) {
      const int y = labels[u];
      ce -= std::log(std::max(ws.probs(u, y), 1e-300));
      ws.d_out.row(u) += inv * ws.probs.row(u);
      ws.d_out(u, y) -= inv;
    }
    ce *= inv;
  }

  // Â is symmetric, so Âᵀ·G scatters each output row to its neighbours.
  ensure_shape(ws.d_hw, n, classes);
  for (NodeId r : plan.hidden) ws.d_hw.row(r).setZero();
  for (NodeId r : plan.out) {
    const auto cols = adj.row_cols(r);
    const auto vals = adj.row_values(r);
    for (std::size_t i = 0; i < cols.size(); ++i)
      ws.d_hw.row(cols[i]).noalias() += vals[i] * ws.d_out.row(r);
  }

  const DenseMatrix w2t = w2_.transpose();
  DenseMatrix g2t = DenseMatrix::Zero(classes, hidden);
  ensure_shape(ws.d_h1, n, hidden);
  ensure_shape(ws.d_xw, n, hidden);
  for (NodeId r : plan.input) ws.d_xw.row(r).setZero();
  for (NodeId r : plan.hidden) {
    const auto h = ws.h1.row(r);
    const auto dhw = ws.d_hw.row(r);
    auto dh = ws.d_h1.row(r);
    dh.setZero();
    for (Eigen::Index j = 0; j < classes; ++j) {
      g2t.row(j).noalias() += dhw(j) * h;
      dh.noalias() += dhw(j) * w2t.row(j);
    }
    // h1 > 0 exactly where the unit was active and kept.
    for (Eigen::Index j = 0; j < hidden; ++j) dh(j) = h(j) > 0.0 ? dh(j) * ws.hidden_scale : 0.0;
    const auto cols = adj.row_cols(r);
    const auto vals = adj.row_values(r);
    for (std::size_t i = 0; i < cols.size(); ++i)
      ws.d_xw.row(cols[i]).noalias() += vals[i] * dh;
  }
  g.w2 = g2t.transpose() + weight_decay * w2_;

  ensure_shape(g.w1, w1_.rows(), hidden);
  g.w1.setZero();
  for (NodeId r : plan.input) {
    const auto src = ws.d_xw.row(r);
    for (std::size_t p = x.row_ptr[r]; p < x.row_ptr[r + 1]; ++p) {
      const double v = ws.x_dropped ? ws.x_values[p] : x.values[p];
      if (v != 0.0) g.w1.row(x.col_idx[p]).noalias() += v * src;
    }
  }
  g.w1 += weight_decay * w1_;
  require_finite(g.w1, "W1 gradient");
  require_finite(g.w2, "W2 gradient");
  return ce + 0.5 * weight_decay * (w1_.squaredNorm() + w2_.squaredNorm());
}

Gradients GcnModel::gradients(const GcnInputs& in,
                              std::span<const NodeId> labeled,
                              std::span<const int> labels, double weight_decay,
                              bool training, double* loss_out) {
  Workspace ws;
  const RowPlan plan = RowPlan::around(*in.adj, labeled);
  forward_impl(in, training, plan, ws);
  Gradients g;
  const double value = backward(in, labeled, labels, weight_decay, plan, ws, g);
  if (loss_out) *loss_out = value;
  return g;
}

TrainReport GcnModel::train(const GcnInputs& in,
                            std::span<const NodeId> labeled,
                            std::span<const int> labels, const TrainConfig& cfg,
                            std::span<const NodeId> val) {
  cfg.validate();
  if (labeled.empty()) throw std::invalid_argument("train: no labeled nodes");
  dropout_ = cfg.dropout;

  TrainReport report;
  report.initial_loss = loss(in, labeled, labels, cfg.weight_decay);
  const bool stopping = cfg.early_stopping && !val.empty();
  const RowPlan train_plan = RowPlan::around(*in.adj, labeled);
  const RowPlan val_plan = stopping ? RowPlan::around(*in.adj, val) : RowPlan{};
  Workspace ws, val_ws;
  Gradients g;
  DenseMatrix best_w1, best_w2;
  double best_acc = -1.0;
  int since_best = 0;

  auto adam = [&](DenseMatrix& w, DenseMatrix& m, DenseMatrix& v,
                  const DenseMatrix& grad) {
    const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(adam_step_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(adam_step_));
    m = b1 * m + (1.0 - b1) * grad;
    v = b2 * v + (1.0 - b2) * grad.cwiseProduct(grad);
    w.array() -= cfg.learning_rate * (m.array() / c1) /
                 ((v.array() / c2).sqrt() + cfg.adam_epsilon);
  };

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    forward_impl(in, true, train_plan, ws);
    const double train_loss =
        backward(in, labeled, labels, cfg.weight_decay, train_plan, ws, g);
    if (!std::isfinite(train_loss))
      throw NumericalError("training diverged at epoch " + std::to_string(epoch));
    ++adam_step_;
    adam(w1_, m1_, v1_, g.w1);
    adam(w2_, m2_, v2_, g.w2);
    report.loss_curve.push_back(train_loss);
    report.epochs_run = epoch + 1;

    if (stopping) {
      forward_impl(in, false, val_plan, val_ws);
      const double acc = accuracy_on(val_ws.probs, val, labels);
      if (acc > best_acc) {
        best_acc = acc;
        best_w1 = w1_;
        best_w2 = w2_;
        report.best_epoch = epoch;
        since_best = 0;
      } else if (++since_best >= cfg.patience) {
        break;
      }
    }
  }
  if (stopping && report.best_epoch >= 0) {
    w1_ = std::move(best_w1);
    w2_ = std::move(best_w2);
    report.best_val_accuracy = best_acc;
  } else {
    report.best_epoch = report.epochs_run - 1;
  }
  report.final_loss = loss(in, labeled, labels, cfg.weight_decay);
  return report;
}

void GcnModel::save_checkpoint(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  for (const DenseMatrix* w : {&w1_, &w2_})
    for (Eigen::Index i = 0; i < w->size(); ++i) {
      const float v = static_cast<float>(w->data()[i]);
      out.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
  nlohmann::json shape = {
      {"w1", {w1_.rows(), w1_.cols()}}, {"w2", {w2_.rows(), w2_.cols()}}};
  std::ofstream side(path.string() + ".json", std::ios::trunc);
  side << shape.dump() << '\n';
}

void GcnModel::load_checkpoint(const std::filesystem::path& path) {
  std::ifstream side(path.string() + ".json");
  if (!side) throw std::runtime_error("missing checkpoint sidecar for " + path.string());
  const auto shape = nlohmann::json::parse(side);
  const auto s1 = shape.at("w1").get<std::vector<Eigen::Index>>();
  const auto s2 = shape.at("w2").get<std::vector<Eigen::Index>>();
  if (s1.size() != 2 || s2.size() != 2 || s1[0] != w1_.rows() ||
      s1[1] != w1_.cols() || s2[0] != w2_.rows() || s2[1] != w2_.cols())
    throw std::runtime_error("checkpoint shape does not match the model");
  std::ifstream in(path, std::ios::binary);
  DenseMatrix w1(s1[0], s1[1]), w2(s2[0], s2[1]);
  for (DenseMatrix* w : {&w1, &w2})
    for (Eigen::Index i = 0; i < w->size(); ++i) {
      float v;
      in.read(reinterpret_cast<char*>(&v), sizeof v);
      w->data()[i] = v;
    }
  if (!in) throw std::runtime_error("truncated checkpoint " + path.string());
  set_weights(std::move(w1), std::move(w2));
}

double entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs)
    if (p > 0.0) h -= p * std::log(p);
  return h;
}

int pseudo_label(std::span<const double> probs) {
  int best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i)
    if (probs[i] > probs[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  return best;
}

std::vector<int> predict(const DenseMatrix& probs) {
  std::vector<int> out(static_cast<std::size_t>(probs.rows()));
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    const auto row = probs.row(r);
    out[static_cast<std::size_t>(r)] =
        pseudo_label({row.data(), static_cast<std::size_t>(row.size())});
  }
  return out;
}

double gradient_check(GcnModel& model, const GcnInputs& in,
                      std::span<const NodeId> labeled,
                      std::span<const int> labels, double weight_decay,
                      double step) {
  const Gradients analytic =
      model.gradients(in, labeled, labels, weight_decay, false);
  DenseMatrix w1 = model.w1(), w2 = model.w2();
  double worst = 0.0;
  auto probe = [&](DenseMatrix& w, const DenseMatrix& grad) {
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      const double saved = w.data()[i];
      w.data()[i] = saved + step;
      model.set_weights(w1, w2);
      const double up = model.loss(in, labeled, labels, weight_decay);
      w.data()[i] = saved - step;
      model.set_weights(w1, w2);
      const double down = model.loss(in, labeled, labels, weight_decay);
      w.data()[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double a = grad.data()[i];
      if (std::abs(a) < 1e-10 && std::abs(numeric) < 1e-10) continue;
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  };
  probe(w1, analytic.w1);
  probe(w2, analytic.w2);
  model.set_weights(w1, w2);
  return worst;
}

}  // namespace sagal
