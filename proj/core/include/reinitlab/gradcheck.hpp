#pragma once

#include <vector>

#include "reinitlab/network.hpp"
#include "reinitlab/rng.hpp"
#include "reinitlab/train.hpp"

namespace reinitlab {

/// Eval-mode batch loss without gradients (used as the probe function for
/// finite differences).
double batch_loss(const Network& net, const Tensor& x, const std::vector<int>& labels,
                  double weight_decay = 0.0, LossKind kind = LossKind::CrossEntropy);

/// Central-difference check of reverse-mode gradients, run in eval mode.
/// Compares analytic gradients against (L(w+e) - L(w-e)) / 2e on a random
/// subset of sample_size parameters (all of them when d is smaller) and
/// returns the maximum relative error
///   |ga - gn| / (|ga| + |gn| + 1e-12).
/// epsilon must lie in (0, 1e-2]. Parameters are left bitwise unchanged.
double finite_diff_gradcheck(Network& net, const Tensor& x, const std::vector<int>& labels,
                             double epsilon, RngStream& rng,
                             LossKind kind = LossKind::CrossEntropy,
                             double weight_decay = 0.0, size_t sample_size = 200);

}  // namespace reinitlab
