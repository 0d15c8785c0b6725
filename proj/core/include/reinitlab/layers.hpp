#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "reinitlab/init.hpp"
#include "reinitlab/param_store.hpp"
#include "reinitlab/rng.hpp"
#include "reinitlab/tensor.hpp"

namespace reinitlab {

enum class LayerKind {
  Dense,
  Conv2D,
  MaxPool2D,
  Flatten,
  ReLU,
  Dropout,
  LambdaNorm,
  FeatureNorm,
  SoftmaxHead,
};

enum class Mode { Train, Eval };

std::string to_string(LayerKind kind);

/// One network layer. Parameters live in the owning ParameterStore; the layer
/// keeps only segment indices. backward() accumulates parameter gradients
/// into grad_flat (aligned with the store layout) and returns the gradient
/// with respect to its input, unless skip_input_grad says nobody needs it.
class Layer {
 public:
  virtual ~Layer() = default;

  virtual LayerKind kind() const noexcept = 0;
  virtual std::string describe() const = 0;
  virtual std::vector<size_t> output_shape(const std::vector<size_t>& in) const = 0;

  virtual void register_params(ParameterStore& store, int layer_id) { (void)store, (void)layer_id; }
  virtual void init_params(ParameterStore& store, InitKind kind, RngStream& rng) const {
    (void)store, (void)kind, (void)rng;
  }

  virtual Tensor forward(const Tensor& x, const ParameterStore& store, Mode mode,
                         RngStream* rng, Tensor* scratch) const = 0;
  virtual Tensor backward(const Tensor& x, const Tensor& y, const Tensor& gy,
                          const Tensor* scratch, const ParameterStore& store,
                          std::span<double> grad_flat, bool skip_input_grad) const = 0;

  bool has_params() const noexcept { return !segments_.empty(); }
  const std::vector<size_t>& segments() const noexcept { return segments_; }

 protected:
  std::vector<size_t> segments_;
};

/// y = x.W + b with W:[in,out], b:[out]. fan_in = in, fan_out = out.
class DenseLayer final : public Layer {
 public:
  DenseLayer(size_t in, size_t out, bool bias = true);

  LayerKind kind() const noexcept override { return LayerKind::Dense; }
  std::string describe() const override;
  std::vector<size_t> output_shape(const std::vector<size_t>& in) const override;
  void register_params(ParameterStore& store, int layer_id) override;
  void init_params(ParameterStore& store, InitKind kind, RngStream& rng) const override;
  Tensor forward(const Tensor& x, const ParameterStore& store, Mode mode,
                 RngStream* rng, Tensor* scratch) const override;
  Tensor backward(const Tensor& x, const Tensor& y, const Tensor& gy, const Tensor* scratch,
                  const ParameterStore& store, std::span<double> grad_flat,
                  bool skip_input_grad) const override;

  size_t in_features() const noexcept { return in_; }
  size_t out_features() const noexcept { return out_; }
  bool has_bias() const noexcept { return bias_; }

 private:
  size_t in_;
  size_t out_;
  bool bias_;
};

/// NHWC convolution, stride 1, zero-padded to keep spatial size ("same").
/// Kernel layout [kh, kw, in_ch, out_ch]; fan_in = kh*kw*in_ch.
class Conv2DLayer final : public Layer {
 public:
  Conv2DLayer(size_t kernel, size_t in_ch, size_t out_ch, bool bias = true);

  LayerKind kind() const noexcept override { return LayerKind::Conv2D; }
  std::string describe() const override;
  std::vector<size_t> output_shape(const std::vector<size_t>& in) const override;
  void register_params(ParameterStore& store, int layer_id) override;
  void init_params(ParameterStore& store, InitKind kind, RngStream& rng) const override;
  Tensor forward(const Tensor& x, const ParameterStore& store, Mode mode,
                 RngStream* rng, Tensor* scratch) const override;
  Tensor backward(const Tensor& x, const Tensor& y, const Tensor& gy, const Tensor* scratch,
                  const ParameterStore& store, std::span<double> grad_flat,
                  bool skip_input_grad) const override;

 private:
  size_t kernel_;
  size_t in_ch_;
  size_t out_ch_;
  bool bias_;
};

/// Non-overlapping max pooling over [pool x pool] windows, NHWC.
class MaxPool2DLayer final : public Layer {
 public:
  explicit MaxPool2DLayer(size_t pool = 2);

  LayerKind kind() const noexcept override { return LayerKind::MaxPool2D; }
  std::string describe() const override;
  std::vector<size_t> output_shape(const std::vector<size_t>& in) const override;
  Tensor forward(const Tensor& x, const ParameterStore& store, Mode mode,
                 RngStream* rng, Tensor* scratch) const override;
  Tensor backward(const Tensor& x, const Tensor& y, const Tensor& gy, const Tensor* scratch,
                  const ParameterStore& store, std::span<double> grad_flat,
                  bool skip_input_grad) const override;

 private:
  size_t pool_;
};

class FlattenLayer final : public Layer {
 public:
  LayerKind kind() const noexcept override { return LayerKind::Flatten; }
  std::string describe() const override { return "flatten"; }
  std::vector<size_t> output_shape(const std::vector<size_t>& in) const override;
  Tensor forward(const Tensor& x, const ParameterStore& store, Mode mode,
                 RngStream* rng, Tensor* scratch) const override;
  Tensor backward(const Tensor& x, const Tensor& y, const Tensor& gy, const Tensor* scratch,
                  const ParameterStore& store, std::span<double> grad_flat,
                  bool skip_input_grad) const override;
};

class ReLULayer final : public Layer {
 public:
  LayerKind kind() const noexcept override { return LayerKind::ReLU; }
  std::string describe() const override { return "relu"; }
  std::vector<size_t> output_shape(const std::vector<size_t>& in) const override { return in; }
  Tensor forward(const Tensor& x, const ParameterStore& store, Mode mode,
                 RngStream* rng, Tensor* scratch) const override;
  Tensor backward(const Tensor& x, const Tensor& y, const Tensor& gy, const Tensor* scratch,
                  const ParameterStore& store, std::span<double> grad_flat,
                  bool skip_input_grad) const override;
};

/// Inverted dropout: kept units scaled by 1/(1-rate) at train time so that
/// evaluation is the exact identity. The keep mask is stored in scratch.
class DropoutLayer final : public Layer {
 public:
  explicit DropoutLayer(double rate);

  LayerKind kind() const noexcept override { return LayerKind::Dropout; }
  std::string describe() const override;
  std::vector<size_t> output_shape(const std::vector<size_t>& in) const override { return in; }
  Tensor forward(const Tensor& x, const ParameterStore& store, Mode mode,
                 RngStream* rng, Tensor* scratch) const override;
  Tensor backward(const Tensor& x, const Tensor& y, const Tensor& gy, const Tensor* scratch,
                  const ParameterStore& store, std::span<double> grad_flat,
                  bool skip_input_grad) const override;

  double rate() const noexcept { return rate_; }

 private:
  double rate_;
};

/// Per-sample normalization over all non-batch features; no trainable
/// parameters. Stands in for group normalization with a single group.
class FeatureNormLayer final : public Layer {
 public:
  explicit FeatureNormLayer(double eps = 1e-5) : eps_(eps) {}

  LayerKind kind() const noexcept override { return LayerKind::FeatureNorm; }
  std::string describe() const override { return "feature_norm"; }
  std::vector<size_t> output_shape(const std::vector<size_t>& in) const override { return in; }
  Tensor forward(const Tensor& x, const ParameterStore& store, Mode mode,
                 RngStream* rng, Tensor* scratch) const override;
  Tensor backward(const Tensor& x, const Tensor& y, const Tensor& gy, const Tensor* scratch,
                  const ParameterStore& store, std::span<double> grad_flat,
                  bool skip_input_grad) const override;

 private:
  double eps_;
};

/// Row-wise softmax over the class dimension of [n, classes] logits.
class SoftmaxHeadLayer final : public Layer {
 public:
  LayerKind kind() const noexcept override { return LayerKind::SoftmaxHead; }
  std::string describe() const override { return "softmax_head"; }
  std::vector<size_t> output_shape(const std::vector<size_t>& in) const override { return in; }
  Tensor forward(const Tensor& x, const ParameterStore& store, Mode mode,
                 RngStream* rng, Tensor* scratch) const override;
  Tensor backward(const Tensor& x, const Tensor& y, const Tensor& gy, const Tensor* scratch,
                  const ParameterStore& store, std::span<double> grad_flat,
                  bool skip_input_grad) const override;
};

/// x -> (x - mu) / sigma with scalar, non-trainable mu and sigma (> 0).
class LambdaNormLayer final : public Layer {
 public:
  LambdaNormLayer(double mu, double sigma);

  LayerKind kind() const noexcept override { return LayerKind::LambdaNorm; }
  std::string describe() const override;
  std::vector<size_t> output_shape(const std::vector<size_t>& in) const override { return in; }
  Tensor forward(const Tensor& x, const ParameterStore& store, Mode mode,
                 RngStream* rng, Tensor* scratch) const override;
  Tensor backward(const Tensor& x, const Tensor& y, const Tensor& gy, const Tensor* scratch,
                  const ParameterStore& store, std::span<double> grad_flat,
                  bool skip_input_grad) const override;

  double mu() const noexcept { return mu_; }
  double sigma() const noexcept { return sigma_; }
  void set_stats(double mu, double sigma);

 private:
  double mu_;
  double sigma_;
};

}  // namespace reinitlab
