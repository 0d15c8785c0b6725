#include "reinitlab/gradcheck.hpp"

#include <cmath>
#include <numeric>

#include "reinitlab/errors.hpp"

namespace reinitlab {

double batch_loss(const Network& net, const Tensor& x, const std::vector<int>& labels,
                  double weight_decay, LossKind kind) {
  Dataset d;
  d.x = x;
  d.y = labels;
  return evaluate_loss(net, d, weight_decay, kind);
}

double finite_diff_gradcheck(Network& net, const Tensor& x, const std::vector<int>& labels,
                             double epsilon, RngStream& rng, LossKind kind,
                             double weight_decay, size_t sample_size) {
  if (!(epsilon > 0.0 && epsilon <= 1e-2)) {
    throw ConfigError("gradcheck: epsilon must lie in (0, 1e-2]");
  }
  const size_t d = net.params().dim();
  if (d == 0) {
    throw ConfigError("gradcheck: network has no parameters");
  }

  std::vector<double> analytic;
  loss_and_grads(net, x, labels, weight_decay, kind, Mode::Eval, nullptr, analytic);

  std::vector<size_t> indices(d);
  std::iota(indices.begin(), indices.end(), 0);
  if (sample_size < d) {
    // partial Fisher-Yates: first sample_size entries become the sample
    for (size_t i = 0; i < sample_size; ++i) {
      const size_t j = i + static_cast<size_t>(rng.below(d - i));
      std::swap(indices[i], indices[j]);
    }
    indices.resize(sample_size);
  }

  auto w = net.params().flat();
  double max_rel = 0.0;
  for (size_t idx : indices) {
    const double saved = w[idx];
    w[idx] = saved + epsilon;
    const double lp = batch_loss(net, x, labels, weight_decay, kind);
    w[idx] = saved - epsilon;
    const double lm = batch_loss(net, x, labels, weight_decay, kind);
    w[idx] = saved;
    if (!std::isfinite(lp) || !std::isfinite(lm)) {
      throw NumericError("gradcheck: non-finite loss during probing");
    }
    const double numeric = (lp - lm) / (2.0 * epsilon);
    const double ga = analytic[idx];
    const double rel = std::fabs(ga - numeric) / (std::fabs(ga) + std::fabs(numeric) + 1e-12);
    max_rel = std::max(max_rel, rel);
  }
  return max_rel;
}

}  // namespace reinitlab
