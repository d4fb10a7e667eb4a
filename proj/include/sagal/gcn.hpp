#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "sagal/graph.hpp"
#include "sagal/sparse.hpp"

namespace sagal {

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  double learning_rate = 0.05;
  double dropout = 0.5;
  double weight_decay = 5e-4;
  int max_epochs = 200;
  int patience = 30;
  bool early_stopping = true;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;

  /// Final-evaluation protocol: fresh weights, early stopping on validation.
  static TrainConfig final_protocol() { return {}; }
  /// Per-acquisition-round retraining: warm start, fixed epochs.
  static TrainConfig acquisition_round() {
    TrainConfig c;
    c.max_epochs = 50;
    c.early_stopping = false;
    return c;
  }
  void validate() const;
};

/// Inputs shared by every forward pass on one dataset.
struct GcnInputs {
  const CsrMatrix* adj = nullptr;       ///< normalized adjacency
  const CsrMatrix* features = nullptr;  ///< sparse X, num_nodes x num_features
};

struct Gradients {
  DenseMatrix w1;
  DenseMatrix w2;
};

struct TrainReport {
  int epochs_run = 0;
  int best_epoch = -1;
  double best_val_accuracy = 0.0;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  std::vector<double> loss_curve;
};

/// Two-layer GCN: softmax(Â · relu(Â X W1) · W2), no biases.
class GcnModel {
 public:
  static constexpr std::size_t kDefaultHidden = 128;

  GcnModel(std::size_t num_features, std::size_t num_classes,
           std::uint64_t seed, std::size_t hidden = kDefaultHidden);

  std::size_t num_features() const { return static_cast<std::size_t>(w1_.rows()); }
  std::size_t hidden() const { return static_cast<std::size_t>(w1_.cols()); }
  std::size_t num_classes() const { return static_cast<std::size_t>(w2_.cols()); }

  const DenseMatrix& w1() const { return w1_; }
  const DenseMatrix& w2() const { return w2_; }
  void set_weights(DenseMatrix w1, DenseMatrix w2);

  /// Row-stochastic class probabilities. Dropout (inverted scaling) is only
  /// drawn when `training` is set. Keep/drop decisions use 16-bit uniform
  /// draws, so the effective rate is quantized to multiples of 2^-16.
  DenseMatrix forward(const GcnInputs& in, bool training);

  /// Mean cross-entropy over `labeled` plus weight_decay/2 (‖W1‖²+‖W2‖²),
  /// evaluated without dropout.
  double loss(const GcnInputs& in, std::span<const NodeId> labeled,
              std::span<const int> labels, double weight_decay);

  /// Analytic gradient of loss(). With `training`, one dropout mask is drawn
  /// and used for both passes.
  Gradients gradients(const GcnInputs& in, std::span<const NodeId> labeled,
                      std::span<const int> labels, double weight_decay,
                      bool training, double* loss_out = nullptr);

  /// Adam on the labeled cross-entropy. With early stopping, weights are
  /// restored to the best-validation epoch. Adam moments persist across calls,
  /// so repeated calls warm-start.
  TrainReport train(const GcnInputs& in, std::span<const NodeId> labeled,
                    std::span<const int> labels, const TrainConfig& cfg,
                    std::span<const NodeId> val = {});

  /// Row-major float32 weights plus a JSON shape sidecar (`<path>.json`).
  void save_checkpoint(const std::filesystem::path& path) const;
  void load_checkpoint(const std::filesystem::path& path);

 private:
  struct Workspace;
  struct RowPlan;
  void forward_impl(const GcnInputs& in, bool training, const RowPlan& plan,
                    Workspace& ws);
  double backward(const GcnInputs& in, std::span<const NodeId> labeled,
                  std::span<const int> labels, double weight_decay,
                  const RowPlan& plan, Workspace& ws, Gradients& out) const;

  DenseMatrix w1_, w2_;
  DenseMatrix m1_, v1_, m2_, v2_;
  long adam_step_ = 0;
  double dropout_ = 0.5;
  std::mt19937_64 rng_;
};

/// -Σ p log p (natural log), with 0 log 0 = 0.
double entropy(std::span<const double> probs);

/// argmax, lowest index wins ties.
int pseudo_label(std::span<const double> probs);

/// Central finite differences (step 1e-5) against analytic gradients with
/// dropout off. Returns max |a − n| / max(|a|, |n|, 1e-6) over all weights
/// (entries where both are below 1e-10 count as exact).
double gradient_check(GcnModel& model, const GcnInputs& in,
                      std::span<const NodeId> labeled,
                      std::span<const int> labels, double weight_decay,
                      double step = 1e-5);

std::vector<int> predict(const DenseMatrix& probs);

}  // namespace sagal
