#pragma once

#include <optional>
#include <span>
#include <vector>

#include "reinitlab/network.hpp"
#include "reinitlab/rng.hpp"
#include "reinitlab/tensor.hpp"

namespace reinitlab {

enum class LossKind { CrossEntropy, SquaredError };

struct Dataset {
  Tensor x;
  std::vector<int> y;

  size_t size() const noexcept { return y.size(); }
  bool empty() const noexcept { return y.empty(); }
  /// Rows selected by index, in the given order.
  Dataset subset(std::span<const size_t> indices) const;
};

/// Sentinel: one step consumes the whole training split.
inline constexpr int kFullBatch = 0;

struct TrainConfig {
  double learning_rate = 0.003;
  double momentum = 0.0;
  double weight_decay = 0.0;
  int batch_size = kFullBatch;
  int max_steps = 0;
  int plateau_patience_epochs = 20;
  double plateau_factor = 0.5;
  double val_fraction = 0.0;
  bool early_stop = false;
  LossKind loss = LossKind::CrossEntropy;

  void validate() const;
};

/// Per-run training record. train_acc[t] is the training accuracy after t
/// updates (entry 0 = model as handed in, last entry = a full-split
/// evaluation of the final model); under full-batch training every entry is
/// an exact training-set accuracy, under minibatches the interior entries
/// are per-batch estimates.
struct TrainTrace {
  std::vector<double> step_loss;
  std::vector<double> train_acc;
  std::vector<double> epoch_val_acc;
  std::vector<double> epoch_lr;
  int total_steps = 0;

  /// Number of updates after which train_acc first reaches threshold;
  /// nullopt when the threshold is never reached.
  std::optional<int> steps_to(double threshold) const;
};

/// v <- momentum * v - lr * g;  w <- w + v. Weight decay is already folded
/// into g by loss_and_grads.
void sgd_step(std::span<double> params, std::span<const double> grads,
              std::span<double> velocity, double learning_rate, double momentum);

/// Mean loss over the batch plus weight_decay * 0.5 * ||w||^2, with gradients
/// accumulated into grad_flat (zeroed here; length d, store layout). Returns
/// the loss; *batch_acc, when given, receives the batch accuracy of the
/// pre-update model. Throws NumericError when the loss is not finite.
double loss_and_grads(const Network& net, const Tensor& x, const std::vector<int>& labels,
                      double weight_decay, LossKind kind, Mode mode, RngStream* rng,
                      std::vector<double>& grad_flat, double* batch_acc = nullptr);

/// Eval-mode accuracy; a prediction counts as correct only when the true
/// class probability strictly exceeds every other class probability.
double evaluate_accuracy(const Network& net, const Dataset& data);
double evaluate_loss(const Network& net, const Dataset& data, double weight_decay = 0.0,
                     LossKind kind = LossKind::CrossEntropy);

/// Runs at most cfg.max_steps updates on train_data. The validation split
/// drives the plateau schedule (learning rate times plateau_factor whenever
/// validation error fails to improve for patience epochs) and, when
/// cfg.early_stop is set, a best-validation checkpoint restored at the end.
/// Without a validation split both mechanisms stay inactive. frozen, when
/// given, marks parameter entries excluded from updates (d bytes, 1 = hold).
TrainTrace train(Network& net, const Dataset& train_data, const Dataset& val_data,
                 const TrainConfig& cfg, RngStream& rng,
                 const std::vector<uint8_t>* frozen = nullptr);

}  // namespace reinitlab
