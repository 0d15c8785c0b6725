#include "reinitlab/presets.hpp"

#include "reinitlab/errors.hpp"

namespace reinitlab {

ArchPreset ArchPreset::mlp_synth() { return ArchPreset{"MLP_SYNTH", InitKind::HeNormal, 0.0}; }

ArchPreset ArchPreset::scnn_mini() { return ArchPreset{"SCNN_MINI", InitKind::HeNormal, 0.0}; }

ArchPreset ArchPreset::by_name(const std::string& name) {
  if (name == "MLP_SYNTH") return mlp_synth();
  if (name == "SCNN_MINI") return scnn_mini();
  throw ConfigError("unknown architecture '" + name + "' (expected MLP_SYNTH or SCNN_MINI)");
}

namespace {

Network build_mlp_synth(const ArchPreset& p, RngStream& rng) {
  NetworkBuilder b;
  b.name(p.name).input({128}).classes(8);
  b.begin_block().add(std::make_unique<DenseLayer>(128, 32)).add(std::make_unique<ReLULayer>());
  if (p.dropout > 0.0) {
    b.add(std::make_unique<DropoutLayer>(p.dropout));
  }
  b.end_block();
  b.begin_block().add(std::make_unique<DenseLayer>(32, 32)).add(std::make_unique<ReLULayer>());
  if (p.dropout > 0.0) {
    b.add(std::make_unique<DropoutLayer>(p.dropout));
  }
  b.end_block();
  b.begin_block().add(std::make_unique<DenseLayer>(32, 8)).end_block();
  b.begin_block().add(std::make_unique<SoftmaxHeadLayer>()).end_block();
  // every dense layer is a block; the head weights sit above the hidden stack
  b.feature_blocks(3).fc_boundary(2);
  return b.build(p.initializer, rng);
}

Network build_scnn_mini(const ArchPreset& p, RngStream& rng) {
  NetworkBuilder b;
  b.name(p.name).input({16, 16, 3}).classes(8);
  b.begin_block()
      .add(std::make_unique<Conv2DLayer>(3, 3, 8))
      .add(std::make_unique<FeatureNormLayer>())
      .add(std::make_unique<ReLULayer>())
      .add(std::make_unique<MaxPool2DLayer>(2))
      .end_block();
  b.begin_block()
      .add(std::make_unique<Conv2DLayer>(3, 8, 16))
      .add(std::make_unique<FeatureNormLayer>())
      .add(std::make_unique<ReLULayer>())
      .add(std::make_unique<MaxPool2DLayer>(2))
      .end_block();
  b.begin_block()
      .add(std::make_unique<FlattenLayer>())
      .add(std::make_unique<DenseLayer>(4 * 4 * 16, 64))
      .add(std::make_unique<ReLULayer>());
  if (p.dropout > 0.0) {
    b.add(std::make_unique<DropoutLayer>(p.dropout));
  }
  b.end_block();
  b.begin_block().add(std::make_unique<DenseLayer>(64, 8)).end_block();
  b.begin_block().add(std::make_unique<SoftmaxHeadLayer>()).end_block();
  b.feature_blocks(2).fc_boundary(2);
  return b.build(p.initializer, rng);
}

}  // namespace

Network build_network(const ArchPreset& preset, RngStream& init_rng) {
  if (preset.name == "MLP_SYNTH") return build_mlp_synth(preset, init_rng);
  if (preset.name == "SCNN_MINI") return build_scnn_mini(preset, init_rng);
  throw ConfigError("unknown architecture '" + preset.name + "'");
}

}  // namespace reinitlab
