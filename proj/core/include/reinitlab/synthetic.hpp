#pragma once

#include <cstdint>
#include <utility>

#include "reinitlab/train.hpp"

namespace reinitlab {

/// Eight-class vector task: the label's three bits set the first three
/// coordinates to +/- alpha (most significant bit first, bit 1 -> +alpha);
/// the remaining coordinates are standard normal noise.
struct SyntheticSpec {
  double alpha = 1.0;
  int n_train = 256;
  int n_test = 2048;
  int dim = 128;
  int n_classes = 8;
  uint64_t seed = 1;

  void validate() const;
};

/// Train and test sets from independent substreams of spec.seed.
std::pair<Dataset, Dataset> gen_synthetic(const SyntheticSpec& spec);

/// Image analogue for the small CNN: hw x hw x channels standard-normal
/// noise, with the top-left patch of each channel overwritten by the label
/// bit for that channel (+/- alpha, channel c holds bit c, MSB first).
struct SyntheticImageSpec {
  double alpha = 1.0;
  int n_train = 256;
  int n_test = 1024;
  int hw = 16;
  int channels = 3;
  int patch = 4;
  int n_classes = 8;
  uint64_t seed = 1;

  void validate() const;
};

std::pair<Dataset, Dataset> gen_synthetic_images(const SyntheticImageSpec& spec);

}  // namespace reinitlab
