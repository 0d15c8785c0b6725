#pragma once

#include <string>
#include <vector>

#include "reinitlab/rng.hpp"
#include "reinitlab/tensor.hpp"

namespace reinitlab {

enum class InitKind { HeNormal, XavierUniform };

std::string to_string(InitKind kind);
InitKind init_kind_from_string(const std::string& name);

/// Entries i.i.d. Normal(0, sqrt(2 / fan_in)).
Tensor he_normal_init(size_t fan_in, std::vector<size_t> shape, RngStream& rng);

/// Entries i.i.d. Uniform(-L, L) with L = sqrt(6 / (fan_in + fan_out)).
Tensor xavier_uniform_init(size_t fan_in, size_t fan_out, std::vector<size_t> shape, RngStream& rng);

}  // namespace reinitlab
