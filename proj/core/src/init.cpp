#include "reinitlab/init.hpp"

#include <cmath>

#include "reinitlab/errors.hpp"

namespace reinitlab {

std::string to_string(InitKind kind) {
  return kind == InitKind::HeNormal ? "he_normal" : "xavier_uniform";
}

InitKind init_kind_from_string(const std::string& name) {
  if (name == "he_normal") return InitKind::HeNormal;
  if (name == "xavier_uniform") return InitKind::XavierUniform;
  throw ConfigError("unknown initializer '" + name + "' (expected he_normal or xavier_uniform)");
}

Tensor he_normal_init(size_t fan_in, std::vector<size_t> shape, RngStream& rng) {
  if (fan_in == 0) {
    throw ConfigError("he_normal_init: fan_in must be >= 1");
  }
  const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
  Tensor t(std::move(shape));
  for (size_t i = 0; i < t.size(); ++i) {
    t[i] = rng.normal(0.0, stddev);
  }
  return t;
}

Tensor xavier_uniform_init(size_t fan_in, size_t fan_out, std::vector<size_t> shape, RngStream& rng) {
  if (fan_in == 0 || fan_out == 0) {
    throw ConfigError("xavier_uniform_init: fans must be >= 1");
  }
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor t(std::move(shape));
  for (size_t i = 0; i < t.size(); ++i) {
    t[i] = rng.uniform(-limit, limit);
  }
  return t;
}

}  // namespace reinitlab
