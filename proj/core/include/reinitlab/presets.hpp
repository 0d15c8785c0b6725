#pragma once

#include <string>

#include "reinitlab/network.hpp"

namespace reinitlab {

/// Named architecture recipe.
///
/// MLP_SYNTH: 128 -> dense 32 + relu -> dense 32 + relu -> dense 8 -> softmax,
///   each dense layer its own block (3 feature blocks); the softmax forms the
///   final block. Dense layers after block 2 count as the final dense layers.
/// SCNN_MINI: 16x16x3 input; two conv blocks (8 and 16 filters, 3x3, feature
///   norm + relu + 2x2 max pool), then flatten -> dense 64 + relu,
///   dense 8, softmax; 2 feature blocks.
struct ArchPreset {
  std::string name = "MLP_SYNTH";
  InitKind initializer = InitKind::HeNormal;
  double dropout = 0.0;

  static ArchPreset mlp_synth();
  static ArchPreset scnn_mini();
  static ArchPreset by_name(const std::string& name);
};

Network build_network(const ArchPreset& preset, RngStream& init_rng);

}  // namespace reinitlab
