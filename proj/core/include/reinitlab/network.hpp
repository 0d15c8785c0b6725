#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "reinitlab/layers.hpp"
#include "reinitlab/param_store.hpp"

namespace reinitlab {

/// Activation record of one taped forward pass: acts[0] is the input,
/// acts[u + 1] the output of execution unit u. scratch holds per-unit state
/// that backward cannot recompute (dropout masks).
struct Tape {
  Mode mode = Mode::Eval;
  std::vector<Tensor> acts;
  std::vector<Tensor> scratch;
};

/// Block-structured feed-forward network.
///
/// Layers are partitioned into consecutive blocks. The first feature_blocks()
/// blocks are the rescale/normalize targets of the layerwise schedule; the
/// remaining blocks are the head. Each block can carry one scalar
/// normalization layer that runs right after the block's own layers; these
/// attachments contribute no trainable parameters.
class Network {
 public:
  Network() = default;
  Network(Network&&) = default;
  Network& operator=(Network&&) = default;
  Network(const Network&) = delete;
  Network& operator=(const Network&) = delete;

  size_t num_layers() const noexcept { return layers_.size(); }
  size_t num_blocks() const noexcept { return block_end_.size(); }
  int feature_blocks() const noexcept { return feature_blocks_; }
  int fc_boundary_block() const noexcept { return fc_boundary_; }
  /// Index of the first layer after the last feature block.
  size_t head_start() const;
  const Layer& layer(size_t i) const { return *layers_[i]; }
  /// Half-open layer index range of 1-based block b.
  std::pair<size_t, size_t> block_layers(size_t b) const;
  /// 1-based block that owns layer i.
  size_t block_of_layer(size_t i) const;

  const std::vector<size_t>& input_shape() const noexcept { return input_shape_; }
  size_t num_classes() const noexcept { return num_classes_; }
  const std::string& arch_name() const noexcept { return arch_name_; }
  InitKind initializer() const noexcept { return init_kind_; }

  ParameterStore& params() noexcept { return params_; }
  const ParameterStore& params() const noexcept { return params_; }

  bool has_lambda(size_t block) const;
  const LambdaNormLayer& lambda(size_t block) const;
  void set_lambda(size_t block, double mu, double sigma);
  size_t lambda_count() const;
  /// (block, mu, sigma) for every attached normalizer, in block order.
  std::vector<std::tuple<size_t, double, double>> lambda_states() const;

  bool scales_recorded() const noexcept { return scales_recorded_; }
  /// Frobenius norm per parameter segment, captured at initialization time.
  const std::vector<double>& init_scales() const;

  Tensor forward(const Tensor& x, Mode mode = Mode::Eval, RngStream* rng = nullptr) const;
  Tensor forward(const Tensor& x, Mode mode, RngStream* rng, Tape& tape) const;
  /// Eval-mode output of 1-based block k, excluding block k's own lambda
  /// attachment (earlier blocks run in full).
  Tensor forward_to_block(const Tensor& x, size_t k) const;
  /// Eval-mode input reaching layer_index.
  Tensor capture_input_of_layer(const Tensor& x, size_t layer_index) const;

  /// Backpropagates grad_out through the taped pass, accumulating parameter
  /// gradients into grad_flat (must be zeroed by the caller, length d).
  void backward(const Tape& tape, const Tensor& grad_out, std::span<double> grad_flat) const;

 private:
  friend class NetworkBuilder;
  friend void record_init_scales(Network&);

  struct ExecUnit {
    int layer = -1;         // >= 0: layer index
    int lambda_block = -1;  // >= 0: lambda attachment of 1-based block
  };
  std::vector<ExecUnit> exec_units(size_t upto_block, bool include_last_lambda) const;
  Tensor run(const Tensor& x, Mode mode, RngStream* rng, Tape* tape, size_t upto_block,
             bool include_last_lambda, int capture_layer, Tensor* captured) const;

  std::vector<std::unique_ptr<Layer>> layers_;
  std::vector<size_t> block_end_;  // exclusive layer index per block
  int feature_blocks_ = 0;
  int fc_boundary_ = 0;
  std::vector<std::optional<LambdaNormLayer>> lambdas_;
  ParameterStore params_;
  std::vector<double> init_scales_;
  bool scales_recorded_ = false;
  std::vector<size_t> input_shape_;
  size_t num_classes_ = 0;
  std::string arch_name_;
  InitKind init_kind_ = InitKind::HeNormal;
};

/// Assembles a network: layers grouped into blocks, parameter registration,
/// store finalization, and initialization, in that order.
class NetworkBuilder {
 public:
  NetworkBuilder& name(std::string arch_name);
  /// Input shape excluding the batch dimension.
  NetworkBuilder& input(std::vector<size_t> shape);
  NetworkBuilder& classes(size_t n);
  NetworkBuilder& begin_block();
  NetworkBuilder& add(std::unique_ptr<Layer> layer);
  NetworkBuilder& end_block();
  /// Number of leading blocks treated as feature blocks (K).
  NetworkBuilder& feature_blocks(int k);
  /// Block after which dense layers count as "final layers"; defaults to K.
  NetworkBuilder& fc_boundary(int block);

  Network build(InitKind init, RngStream& init_rng);

 private:
  Network net_;
  bool in_block_ = false;
  int fc_boundary_ = -1;
};

}  // namespace reinitlab
