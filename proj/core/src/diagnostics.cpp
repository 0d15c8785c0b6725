#include "reinitlab/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "reinitlab/errors.hpp"

namespace reinitlab {

double MarginReport::mean_smallest(size_t m) const {
  if (margins.empty()) {
    throw ContractError("MarginReport: empty report");
  }
  m = std::min(m, margins.size());
  double s = 0.0;
  for (size_t i = 0; i < m; ++i) {
    s += margins[i];
  }
  return s / static_cast<double>(m);
}

MarginReport softmax_margins(const Network& net, const Dataset& data, size_t smallest_m) {
  if (data.empty()) {
    throw ConfigError("softmax_margins: empty dataset");
  }
  const size_t n = data.size();
  const size_t c = net.num_classes();
  MarginReport report;
  report.smallest_m = smallest_m;
  report.margins.resize(n);

  const size_t row = data.x.size() / n;
  std::vector<size_t> shape = data.x.shape();
  constexpr size_t kChunk = 512;
  for (size_t start = 0; start < n; start += kChunk) {
    const size_t m = std::min(kChunk, n - start);
    shape[0] = m;
    Tensor batch(shape, {data.x.data() + start * row, data.x.data() + (start + m) * row});
    Tensor probs = net.forward(batch, Mode::Eval, nullptr);
    for (size_t i = 0; i < m; ++i) {
      const double* p = probs.data() + i * c;
      const int label = data.y[start + i];
      double other = -1.0;
      for (size_t j = 0; j < c; ++j) {
        if (static_cast<int>(j) != label) {
          other = std::max(other, p[j]);
        }
      }
      report.margins[start + i] = p[label] - other;
    }
  }
  std::sort(report.margins.begin(), report.margins.end());
  return report;
}

WeightSizeReport weight_size(const Network& net, const Tensor& sample_x) {
  WeightSizeReport report;
  report.frob_product = 1.0;
  std::optional<size_t> head_layer;
  for (size_t i = 0; i < net.num_layers(); ++i) {
    const Layer& l = net.layer(i);
    if (l.kind() == LayerKind::Dense || l.kind() == LayerKind::Conv2D) {
      const double norm = net.params().segment_norm(l.segments()[0]);
      report.frob_product *= norm * norm;
      if (l.kind() == LayerKind::Dense) {
        head_layer = i;  // the last dense layer is the classifier head
      }
    }
  }
  if (!head_layer.has_value()) {
    throw ConfigError("weight_size: network has no dense layers");
  }
  const Tensor acts = net.capture_input_of_layer(sample_x, *head_layer);
  const double head_w = net.params().segment_norm(net.layer(*head_layer).segments()[0]);
  report.head_measure = acts.frobenius_norm() * head_w;
  return report;
}

FlatnessCurve flatness_curve(Network& net, const Dataset& train_data,
                             std::vector<double> sigmas, int n_draws, RngStream& rng) {
  if (n_draws < 1) {
    throw ConfigError("flatness_curve: n_draws must be >= 1");
  }
  std::sort(sigmas.begin(), sigmas.end());
  if (sigmas.empty() || sigmas.front() != 0.0) {
    throw ConfigError("flatness_curve: sigma list must include 0");
  }

  const double base_acc = evaluate_accuracy(net, train_data);
  const double base_loss = evaluate_loss(net, train_data);
  const std::vector<double> saved = net.params().snapshot();
  auto w = net.params().flat();

  FlatnessCurve curve;
  curve.n_draws = n_draws;
  for (double sigma : sigmas) {
    double sum_a = 0.0, sum_a2 = 0.0, sum_l = 0.0, sum_l2 = 0.0;
    for (int d = 0; d < n_draws; ++d) {
      if (sigma > 0.0) {
        for (size_t i = 0; i < w.size(); ++i) {
          w[i] = saved[i] + sigma * rng.normal();
        }
      }
      const double da = sigma > 0.0 ? evaluate_accuracy(net, train_data) - base_acc : 0.0;
      const double dl = sigma > 0.0 ? evaluate_loss(net, train_data) - base_loss : 0.0;
      curve.draws.push_back({sigma, d, da, dl});
      sum_a += da;
      sum_a2 += da * da;
      sum_l += dl;
      sum_l2 += dl * dl;
      if (sigma > 0.0) {
        net.params().restore(saved);
      }
    }
    const double n = static_cast<double>(n_draws);
    FlatnessPoint pt;
    pt.sigma_noise = sigma;
    pt.mean_delta_acc = sum_a / n;
    pt.mean_delta_loss = sum_l / n;
    if (n_draws > 1) {
      const double var_a = std::max(0.0, (sum_a2 - sum_a * sum_a / n) / (n - 1.0));
      const double var_l = std::max(0.0, (sum_l2 - sum_l * sum_l / n) / (n - 1.0));
      pt.stderr_acc = std::sqrt(var_a / n);
      pt.stderr_loss = std::sqrt(var_l / n);
    }
    curve.points.push_back(pt);
  }
  return curve;
}

std::vector<std::optional<int>> round_speed(const std::vector<TrainTrace>& traces,
                                            double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw ConfigError("round_speed: threshold must lie in (0, 1]");
  }
  std::vector<std::optional<int>> out;
  out.reserve(traces.size());
  for (const auto& t : traces) {
    out.push_back(t.steps_to(threshold));
  }
  return out;
}

std::vector<std::optional<int>> round_speed(const std::vector<RoundMetrics>& rounds,
                                            double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw ConfigError("round_speed: threshold must lie in (0, 1]");
  }
  std::vector<std::optional<int>> out;
  out.reserve(rounds.size());
  for (const auto& r : rounds) {
    auto it = r.steps_to.find(threshold);
    if (it != r.steps_to.end()) {
      out.push_back(it->second);
    } else {
      out.push_back(std::nullopt);
    }
  }
  return out;
}

}  // namespace reinitlab
