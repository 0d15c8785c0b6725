#pragma once

#include <optional>
#include <vector>

#include "reinitlab/network.hpp"
#include "reinitlab/records.hpp"
#include "reinitlab/rng.hpp"
#include "reinitlab/train.hpp"

namespace reinitlab {

/// Per-example softmax margins, sorted ascending. A margin is the probability
/// assigned to the true class minus the largest probability among the other
/// classes; an example is classified correctly iff its margin is positive
/// (ties count as incorrect).
struct MarginReport {
  std::vector<double> margins;
  size_t smallest_m = 400;

  double mean_smallest(size_t m) const;
};

MarginReport softmax_margins(const Network& net, const Dataset& data, size_t smallest_m = 400);

/// Weight-size measures: the product of squared Frobenius norms over weight
/// matrices/kernels (biases excluded), and the product of the norm of the
/// activations entering the classifier head with the norm of the head weight
/// matrix on a fixed sample.
struct WeightSizeReport {
  double frob_product = 0.0;
  double head_measure = 0.0;
  double ratio_vs_baseline = std::numeric_limits<double>::quiet_NaN();
};

WeightSizeReport weight_size(const Network& net, const Tensor& sample_x);

struct FlatnessPoint {
  double sigma_noise = 0.0;
  double mean_delta_acc = 0.0;
  double stderr_acc = 0.0;
  double mean_delta_loss = 0.0;
  double stderr_loss = 0.0;
};

struct FlatnessDraw {
  double sigma_noise = 0.0;
  int draw = 0;
  double delta_acc = 0.0;
  double delta_loss = 0.0;
};

/// Signed change in training accuracy/loss under parameter noise
/// w + xi, xi ~ N(0, sigma^2 I), averaged over n_draws per sigma. Points are
/// sorted by sigma; the sigma = 0 point is exactly zero. Parameters are
/// restored bitwise after every draw.
struct FlatnessCurve {
  std::vector<FlatnessPoint> points;
  std::vector<FlatnessDraw> draws;
  int n_draws = 0;
};

FlatnessCurve flatness_curve(Network& net, const Dataset& train_data,
                             std::vector<double> sigmas, int n_draws, RngStream& rng);

/// Updates-to-threshold per round; nullopt marks rounds that never reached it.
std::vector<std::optional<int>> round_speed(const std::vector<TrainTrace>& traces,
                                            double threshold);
/// Same, read from persisted per-round metrics.
std::vector<std::optional<int>> round_speed(const std::vector<RoundMetrics>& rounds,
                                            double threshold);

}  // namespace reinitlab
