#include "reinitlab/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "reinitlab/errors.hpp"

namespace reinitlab {

Dataset Dataset::subset(std::span<const size_t> indices) const {
  const size_t row = size() == 0 ? 0 : x.size() / size();
  std::vector<size_t> shape = x.shape();
  shape[0] = indices.size();
  Dataset out;
  out.x = Tensor(shape);
  out.y.resize(indices.size());
  for (size_t i = 0; i < indices.size(); ++i) {
    const double* src = x.data() + indices[i] * row;
    std::copy(src, src + row, out.x.data() + i * row);
    out.y[i] = y[indices[i]];
  }
  return out;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("train: learning_rate must be positive");
  if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("train: momentum must lie in [0, 1)");
  if (weight_decay < 0.0) throw ConfigError("train: weight_decay must be >= 0");
  if (batch_size < 0) throw ConfigError("train: batch_size must be positive or kFullBatch");
  if (max_steps < 0) throw ConfigError("train: max_steps must be >= 0");
  if (plateau_patience_epochs < 1) throw ConfigError("train: plateau patience must be >= 1");
  if (!(plateau_factor > 0.0 && plateau_factor < 1.0)) {
    throw ConfigError("train: plateau_factor must lie in (0, 1)");
  }
  if (val_fraction < 0.0 || val_fraction >= 1.0) {
    throw ConfigError("train: val_fraction must lie in [0, 1)");
  }
}

std::optional<int> TrainTrace::steps_to(double threshold) const {
  for (size_t t = 0; t < train_acc.size(); ++t) {
    if (train_acc[t] >= threshold) {
      return static_cast<int>(t);
    }
  }
  return std::nullopt;
}

void sgd_step(std::span<double> params, std::span<const double> grads,
              std::span<double> velocity, double learning_rate, double momentum) {
  if (params.size() != grads.size() || params.size() != velocity.size()) {
    throw ContractError("sgd_step: size mismatch");
  }
  for (size_t i = 0; i < params.size(); ++i) {
    velocity[i] = momentum * velocity[i] - learning_rate * grads[i];
    params[i] += velocity[i];
  }
}

namespace {

double batch_accuracy(const Tensor& probs, const std::vector<int>& labels) {
  const size_t n = probs.dim(0), c = probs.dim(1);
  size_t correct = 0;
  for (size_t i = 0; i < n; ++i) {
    const double* p = probs.data() + i * c;
    const double pt = p[labels[i]];
    double other = -1.0;
    for (size_t j = 0; j < c; ++j) {
      if (static_cast<int>(j) != labels[i]) {
        other = std::max(other, p[j]);
      }
    }
    correct += pt > other ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

double output_loss(const Tensor& out, const std::vector<int>& labels, LossKind kind,
                   Tensor& grad_out) {
  const size_t n = out.dim(0), c = out.dim(1);
  grad_out = Tensor(out.shape());
  double loss = 0.0;
  const double invn = 1.0 / static_cast<double>(n);
  if (kind == LossKind::CrossEntropy) {
    for (size_t i = 0; i < n; ++i) {
      const double p = out[i * c + static_cast<size_t>(labels[i])];
      loss -= std::log(p);
      grad_out[i * c + static_cast<size_t>(labels[i])] = -invn / p;
    }
  } else {
    for (size_t i = 0; i < n; ++i) {
      for (size_t j = 0; j < c; ++j) {
        const double target = static_cast<int>(j) == labels[i] ? 1.0 : 0.0;
        const double d = out[i * c + j] - target;
        loss += 0.5 * d * d;
        grad_out[i * c + j] = d * invn;
      }
    }
  }
  return loss * invn;
}

}  // namespace

double loss_and_grads(const Network& net, const Tensor& x, const std::vector<int>& labels,
                      double weight_decay, LossKind kind, Mode mode, RngStream* rng,
                      std::vector<double>& grad_flat, double* batch_acc) {
  if (x.dim(0) != labels.size()) {
    throw ContractError("loss_and_grads: batch/label count mismatch");
  }
  const size_t c = net.num_classes();
  for (int label : labels) {
    if (label < 0 || static_cast<size_t>(label) >= c) {
      throw ConfigError("loss_and_grads: label out of range");
    }
  }
  grad_flat.assign(net.params().dim(), 0.0);

  Tape tape;
  Tensor out = net.forward(x, mode, rng, tape);
  if (batch_acc) {
    *batch_acc = batch_accuracy(out, labels);
  }
  Tensor grad_out;
  double loss = output_loss(out, labels, kind, grad_out);

  const auto w = net.params().flat();
  if (weight_decay > 0.0) {
    double sq = 0.0;
    for (double v : w) {
      sq += v * v;
    }
    loss += weight_decay * 0.5 * sq;
  }
  if (!std::isfinite(loss)) {
    throw NumericError("loss_and_grads: non-finite loss");
  }

  net.backward(tape, grad_out, grad_flat);
  if (weight_decay > 0.0) {
    for (size_t i = 0; i < grad_flat.size(); ++i) {
      grad_flat[i] += weight_decay * w[i];
    }
  }
  return loss;
}

namespace {

Tensor forward_chunked(const Network& net, const Dataset& data, size_t chunk = 512) {
  const size_t n = data.size();
  const size_t row = data.x.size() / n;
  Tensor probs({n, net.num_classes()});
  std::vector<size_t> shape = data.x.shape();
  for (size_t start = 0; start < n; start += chunk) {
    const size_t m = std::min(chunk, n - start);
    shape[0] = m;
    Tensor batch(shape, {data.x.data() + start * row, data.x.data() + (start + m) * row});
    Tensor out = net.forward(batch, Mode::Eval, nullptr);
    std::copy(out.data(), out.data() + m * net.num_classes(),
              probs.data() + start * net.num_classes());
  }
  return probs;
}

}  // namespace

double evaluate_accuracy(const Network& net, const Dataset& data) {
  if (data.empty()) {
    throw ConfigError("evaluate_accuracy: empty dataset");
  }
  return batch_accuracy(forward_chunked(net, data), data.y);
}

double evaluate_loss(const Network& net, const Dataset& data, double weight_decay,
                     LossKind kind) {
  if (data.empty()) {
    throw ConfigError("evaluate_loss: empty dataset");
  }
  Tensor probs = forward_chunked(net, data);
  Tensor unused;
  double loss = output_loss(probs, data.y, kind, unused);
  if (weight_decay > 0.0) {
    double sq = 0.0;
    for (double v : net.params().flat()) {
      sq += v * v;
    }
    loss += weight_decay * 0.5 * sq;
  }
  return loss;
}

TrainTrace train(Network& net, const Dataset& train_data, const Dataset& val_data,
                 const TrainConfig& cfg, RngStream& rng,
                 const std::vector<uint8_t>* frozen) {
  cfg.validate();
  if (train_data.empty()) {
    throw ConfigError("train: empty training set");
  }
  TrainTrace trace;
  if (cfg.max_steps == 0) {
    return trace;
  }
  if (frozen && frozen->size() != net.params().dim()) {
    throw ContractError("train: frozen mask length mismatch");
  }

  const size_t n = train_data.size();
  const size_t row = train_data.x.size() / n;
  const size_t batch = cfg.batch_size == kFullBatch
                           ? n
                           : std::min<size_t>(static_cast<size_t>(cfg.batch_size), n);
  const bool full_batch = batch == n;

  std::vector<double> velocity(net.params().dim(), 0.0);
  std::vector<double> grads;
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  double lr = cfg.learning_rate;
  double best_val_err = std::numeric_limits<double>::infinity();
  double best_val_acc = -1.0;
  int bad_epochs = 0;
  std::vector<double> best_snapshot;

  Tensor batch_x;
  std::vector<int> batch_y;
  std::vector<size_t> batch_shape = train_data.x.shape();

  int steps = 0;
  while (steps < cfg.max_steps) {
    if (!full_batch) {
      rng.shuffle(order.begin(), order.end());
    }
    for (size_t start = 0; start < n && steps < cfg.max_steps; start += batch) {
      const size_t m = std::min(batch, n - start);
      const Tensor* bx;
      const std::vector<int>* by;
      if (full_batch) {
        bx = &train_data.x;
        by = &train_data.y;
      } else {
        batch_shape[0] = m;
        batch_x = Tensor(batch_shape);
        batch_y.resize(m);
        for (size_t i = 0; i < m; ++i) {
          const size_t src = order[start + i];
          std::copy(train_data.x.data() + src * row, train_data.x.data() + (src + 1) * row,
                    batch_x.data() + i * row);
          batch_y[i] = train_data.y[src];
        }
        bx = &batch_x;
        by = &batch_y;
      }

      double acc = 0.0;
      const double loss = loss_and_grads(net, *bx, *by, cfg.weight_decay, cfg.loss,
                                         Mode::Train, &rng, grads, &acc);
      trace.step_loss.push_back(loss);
      trace.train_acc.push_back(acc);
      if (frozen) {
        for (size_t i = 0; i < grads.size(); ++i) {
          if ((*frozen)[i]) {
            grads[i] = 0.0;
          }
        }
      }
      sgd_step(net.params().flat(), grads, velocity, lr, cfg.momentum);
      ++steps;
    }

    if (!val_data.empty()) {
      const double vacc = evaluate_accuracy(net, val_data);
      trace.epoch_val_acc.push_back(vacc);
      if (cfg.early_stop && vacc > best_val_acc) {
        best_val_acc = vacc;
        best_snapshot = net.params().snapshot();
      }
      const double verr = 1.0 - vacc;
      if (verr < best_val_err) {
        best_val_err = verr;
        bad_epochs = 0;
      } else if (++bad_epochs >= cfg.plateau_patience_epochs) {
        lr *= cfg.plateau_factor;
        bad_epochs = 0;
      }
    }
    trace.epoch_lr.push_back(lr);
  }

  // trailing entry: exact training accuracy of the final parameters
  trace.train_acc.push_back(evaluate_accuracy(net, train_data));
  if (cfg.early_stop && !best_snapshot.empty()) {
    net.params().restore(best_snapshot);
  }
  trace.total_steps = steps;
  return trace;
}

}  // namespace reinitlab
