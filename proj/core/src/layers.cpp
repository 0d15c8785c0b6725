#include "reinitlab/layers.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "reinitlab/errors.hpp"

namespace reinitlab {

std::string to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::Dense: return "dense";
    case LayerKind::Conv2D: return "conv2d";
    case LayerKind::MaxPool2D: return "max_pool2d";
    case LayerKind::Flatten: return "flatten";
    case LayerKind::ReLU: return "relu";
    case LayerKind::Dropout: return "dropout";
    case LayerKind::LambdaNorm: return "lambda_norm";
    case LayerKind::FeatureNorm: return "feature_norm";
    case LayerKind::SoftmaxHead: return "softmax_head";
  }
  return "?";
}

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) {
    throw ConfigError(msg);
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Dense
// ---------------------------------------------------------------------------

DenseLayer::DenseLayer(size_t in, size_t out, bool bias) : in_(in), out_(out), bias_(bias) {
  if (in == 0 || out == 0) {
    throw ConfigError("dense: zero-sized layer");
  }
}

std::string DenseLayer::describe() const {
  std::ostringstream os;
  os << "dense(" << in_ << "->" << out_ << (bias_ ? "" : ", no bias") << ")";
  return os.str();
}

std::vector<size_t> DenseLayer::output_shape(const std::vector<size_t>& in) const {
  require(in.size() == 2 && in[1] == in_,
          describe() + ": bad input shape (expected [n," + std::to_string(in_) + "])");
  return {in[0], out_};
}

void DenseLayer::register_params(ParameterStore& store, int layer_id) {
  segments_.push_back(store.add(layer_id, 0, {in_, out_}));
  if (bias_) {
    segments_.push_back(store.add(layer_id, 1, {out_}));
  }
}

void DenseLayer::init_params(ParameterStore& store, InitKind kind, RngStream& rng) const {
  Tensor w = kind == InitKind::HeNormal
                 ? he_normal_init(in_, {in_, out_}, rng)
                 : xavier_uniform_init(in_, out_, {in_, out_}, rng);
  auto wv = store.values(segments_[0]);
  std::copy(w.flat().begin(), w.flat().end(), wv.begin());
  // biases start at zero
}

Tensor DenseLayer::forward(const Tensor& x, const ParameterStore& store, Mode, RngStream*,
                           Tensor*) const {
  require(x.rank() == 2 && x.dim(1) == in_,
          describe() + ": input shape " + x.shape_str() + " mismatch");
  const size_t n = x.dim(0);
  Tensor y({n, out_});
  kernels::mm(x.data(), store.values(segments_[0]).data(), y.data(), n, in_, out_);
  if (bias_) {
    const auto b = store.values(segments_[1]);
    for (size_t i = 0; i < n; ++i) {
      double* yi = y.data() + i * out_;
      for (size_t j = 0; j < out_; ++j) {
        yi[j] += b[j];
      }
    }
  }
  return y;
}

Tensor DenseLayer::backward(const Tensor& x, const Tensor&, const Tensor& gy, const Tensor*,
                            const ParameterStore& store, std::span<double> grad_flat,
                            bool skip_input_grad) const {
  const size_t n = x.dim(0);
  const ParamSegment& wseg = store.segment(segments_[0]);
  kernels::mm_at_acc(x.data(), gy.data(), grad_flat.data() + wseg.offset, n, in_, out_);
  if (bias_) {
    const ParamSegment& bseg = store.segment(segments_[1]);
    double* gb = grad_flat.data() + bseg.offset;
    for (size_t i = 0; i < n; ++i) {
      const double* gi = gy.data() + i * out_;
      for (size_t j = 0; j < out_; ++j) {
        gb[j] += gi[j];
      }
    }
  }
  if (skip_input_grad) {
    return Tensor();
  }
  Tensor gx({n, in_});
  kernels::mm_bt(gy.data(), store.values(segments_[0]).data(), gx.data(), n, in_, out_);
  return gx;
}

// ---------------------------------------------------------------------------
// Conv2D
// ---------------------------------------------------------------------------

Conv2DLayer::Conv2DLayer(size_t kernel, size_t in_ch, size_t out_ch, bool bias)
    : kernel_(kernel), in_ch_(in_ch), out_ch_(out_ch), bias_(bias) {
  if (kernel == 0 || kernel % 2 == 0) {
    throw ConfigError("conv2d: kernel size must be odd and positive");
  }
  if (in_ch == 0 || out_ch == 0) {
    throw ConfigError("conv2d: zero channels");
  }
}

std::string Conv2DLayer::describe() const {
  std::ostringstream os;
  os << "conv2d(" << kernel_ << "x" << kernel_ << ", " << in_ch_ << "->" << out_ch_ << ")";
  return os.str();
}

std::vector<size_t> Conv2DLayer::output_shape(const std::vector<size_t>& in) const {
  require(in.size() == 4 && in[3] == in_ch_, describe() + ": expected NHWC input with " +
                                                 std::to_string(in_ch_) + " channels");
  return {in[0], in[1], in[2], out_ch_};
}

void Conv2DLayer::register_params(ParameterStore& store, int layer_id) {
  segments_.push_back(store.add(layer_id, 0, {kernel_, kernel_, in_ch_, out_ch_}));
  if (bias_) {
    segments_.push_back(store.add(layer_id, 1, {out_ch_}));
  }
}

void Conv2DLayer::init_params(ParameterStore& store, InitKind kind, RngStream& rng) const {
  const size_t fan_in = kernel_ * kernel_ * in_ch_;
  const size_t fan_out = kernel_ * kernel_ * out_ch_;
  const std::vector<size_t> shape{kernel_, kernel_, in_ch_, out_ch_};
  Tensor w = kind == InitKind::HeNormal ? he_normal_init(fan_in, shape, rng)
                                        : xavier_uniform_init(fan_in, fan_out, shape, rng);
  auto wv = store.values(segments_[0]);
  std::copy(w.flat().begin(), w.flat().end(), wv.begin());
}

Tensor Conv2DLayer::forward(const Tensor& x, const ParameterStore& store, Mode, RngStream*,
                            Tensor*) const {
  require(x.rank() == 4 && x.dim(3) == in_ch_,
          describe() + ": input shape " + x.shape_str() + " mismatch");
  const size_t n = x.dim(0), h = x.dim(1), w = x.dim(2);
  const size_t pad = kernel_ / 2;
  const auto kern = store.values(segments_[0]);
  Tensor y({n, h, w, out_ch_});
  std::vector<double> acc(out_ch_);
  for (size_t i = 0; i < n; ++i) {
    for (size_t oy = 0; oy < h; ++oy) {
      for (size_t ox = 0; ox < w; ++ox) {
        if (bias_) {
          const auto b = store.values(segments_[1]);
          std::copy(b.begin(), b.end(), acc.begin());
        } else {
          std::fill(acc.begin(), acc.end(), 0.0);
        }
        for (size_t ky = 0; ky < kernel_; ++ky) {
          const long iy = static_cast<long>(oy + ky) - static_cast<long>(pad);
          if (iy < 0 || iy >= static_cast<long>(h)) continue;
          for (size_t kx = 0; kx < kernel_; ++kx) {
            const long ix = static_cast<long>(ox + kx) - static_cast<long>(pad);
            if (ix < 0 || ix >= static_cast<long>(w)) continue;
            const double* xp = x.data() + ((i * h + iy) * w + ix) * in_ch_;
            const double* kp = kern.data() + (ky * kernel_ + kx) * in_ch_ * out_ch_;
            for (size_t c = 0; c < in_ch_; ++c) {
              const double xv = xp[c];
              const double* kc = kp + c * out_ch_;
              for (size_t oc = 0; oc < out_ch_; ++oc) {
                acc[oc] += xv * kc[oc];
              }
            }
          }
        }
        double* yp = y.data() + ((i * h + oy) * w + ox) * out_ch_;
        std::copy(acc.begin(), acc.end(), yp);
      }
    }
  }
  return y;
}

Tensor Conv2DLayer::backward(const Tensor& x, const Tensor&, const Tensor& gy, const Tensor*,
                             const ParameterStore& store, std::span<double> grad_flat,
                             bool skip_input_grad) const {
  const size_t n = x.dim(0), h = x.dim(1), w = x.dim(2);
  const size_t pad = kernel_ / 2;
  const auto kern = store.values(segments_[0]);
  const ParamSegment& kseg = store.segment(segments_[0]);
  double* gk = grad_flat.data() + kseg.offset;
  double* gb = nullptr;
  if (bias_) {
    gb = grad_flat.data() + store.segment(segments_[1]).offset;
  }
  Tensor gx;
  if (!skip_input_grad) {
    gx = Tensor(x.shape());
  }
  for (size_t i = 0; i < n; ++i) {
    for (size_t oy = 0; oy < h; ++oy) {
      for (size_t ox = 0; ox < w; ++ox) {
        const double* gp = gy.data() + ((i * h + oy) * w + ox) * out_ch_;
        if (gb) {
          for (size_t oc = 0; oc < out_ch_; ++oc) {
            gb[oc] += gp[oc];
          }
        }
        for (size_t ky = 0; ky < kernel_; ++ky) {
          const long iy = static_cast<long>(oy + ky) - static_cast<long>(pad);
          if (iy < 0 || iy >= static_cast<long>(h)) continue;
          for (size_t kx = 0; kx < kernel_; ++kx) {
            const long ix = static_cast<long>(ox + kx) - static_cast<long>(pad);
            if (ix < 0 || ix >= static_cast<long>(w)) continue;
            const size_t xoff = ((i * h + iy) * w + ix) * in_ch_;
            const double* xp = x.data() + xoff;
            const size_t koff = (ky * kernel_ + kx) * in_ch_ * out_ch_;
            for (size_t c = 0; c < in_ch_; ++c) {
              const double xv = xp[c];
              double* gkc = gk + koff + c * out_ch_;
              const double* kc = kern.data() + koff + c * out_ch_;
              double acc = 0.0;
              for (size_t oc = 0; oc < out_ch_; ++oc) {
                gkc[oc] += xv * gp[oc];
                acc += kc[oc] * gp[oc];
              }
              if (!skip_input_grad) {
                gx[xoff + c] += acc;
              }
            }
          }
        }
      }
    }
  }
  return gx;
}

// ---------------------------------------------------------------------------
// MaxPool2D
// ---------------------------------------------------------------------------

MaxPool2DLayer::MaxPool2DLayer(size_t pool) : pool_(pool) {
  if (pool < 2) {
    throw ConfigError("max_pool2d: pool size must be >= 2");
  }
}

std::string MaxPool2DLayer::describe() const {
  return "max_pool2d(" + std::to_string(pool_) + ")";
}

std::vector<size_t> MaxPool2DLayer::output_shape(const std::vector<size_t>& in) const {
  require(in.size() == 4 && in[1] % pool_ == 0 && in[2] % pool_ == 0,
          describe() + ": spatial dims must be divisible by pool size");
  return {in[0], in[1] / pool_, in[2] / pool_, in[3]};
}

Tensor MaxPool2DLayer::forward(const Tensor& x, const ParameterStore&, Mode, RngStream*,
                               Tensor*) const {
  const auto out_shape = output_shape(x.shape());
  const size_t n = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
  const size_t oh = out_shape[1], ow = out_shape[2];
  Tensor y(out_shape);
  for (size_t i = 0; i < n; ++i) {
    for (size_t oy = 0; oy < oh; ++oy) {
      for (size_t ox = 0; ox < ow; ++ox) {
        double* yp = y.data() + ((i * oh + oy) * ow + ox) * c;
        for (size_t ch = 0; ch < c; ++ch) {
          double best = -std::numeric_limits<double>::infinity();
          for (size_t py = 0; py < pool_; ++py) {
            for (size_t px = 0; px < pool_; ++px) {
              const size_t iy = oy * pool_ + py, ix = ox * pool_ + px;
              best = std::max(best, x[((i * h + iy) * w + ix) * c + ch]);
            }
          }
          yp[ch] = best;
        }
      }
    }
  }
  return y;
}

Tensor MaxPool2DLayer::backward(const Tensor& x, const Tensor&, const Tensor& gy, const Tensor*,
                                const ParameterStore&, std::span<double>,
                                bool skip_input_grad) const {
  if (skip_input_grad) {
    return Tensor();
  }
  const size_t n = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
  const size_t oh = h / pool_, ow = w / pool_;
  Tensor gx(x.shape());
  for (size_t i = 0; i < n; ++i) {
    for (size_t oy = 0; oy < oh; ++oy) {
      for (size_t ox = 0; ox < ow; ++ox) {
        const double* gp = gy.data() + ((i * oh + oy) * ow + ox) * c;
        for (size_t ch = 0; ch < c; ++ch) {
          // first maximum in scan order receives the gradient
          double best = -std::numeric_limits<double>::infinity();
          size_t best_idx = 0;
          for (size_t py = 0; py < pool_; ++py) {
            for (size_t px = 0; px < pool_; ++px) {
              const size_t iy = oy * pool_ + py, ix = ox * pool_ + px;
              const size_t idx = ((i * h + iy) * w + ix) * c + ch;
              if (x[idx] > best) {
                best = x[idx];
                best_idx = idx;
              }
            }
          }
          gx[best_idx] += gp[ch];
        }
      }
    }
  }
  return gx;
}

// ---------------------------------------------------------------------------
// Flatten
// ---------------------------------------------------------------------------

std::vector<size_t> FlattenLayer::output_shape(const std::vector<size_t>& in) const {
  require(in.size() >= 2, "flatten: input must have a batch dimension");
  size_t rest = 1;
  for (size_t i = 1; i < in.size(); ++i) {
    rest *= in[i];
  }
  return {in[0], rest};
}

Tensor FlattenLayer::forward(const Tensor& x, const ParameterStore&, Mode, RngStream*,
                             Tensor*) const {
  return Tensor(output_shape(x.shape()), {x.flat().begin(), x.flat().end()});
}

Tensor FlattenLayer::backward(const Tensor& x, const Tensor&, const Tensor& gy, const Tensor*,
                              const ParameterStore&, std::span<double>,
                              bool skip_input_grad) const {
  if (skip_input_grad) {
    return Tensor();
  }
  return Tensor(x.shape(), {gy.flat().begin(), gy.flat().end()});
}

// ---------------------------------------------------------------------------
// ReLU
// ---------------------------------------------------------------------------

Tensor ReLULayer::forward(const Tensor& x, const ParameterStore&, Mode, RngStream*,
                          Tensor*) const {
  Tensor y(x.shape());
  for (size_t i = 0; i < x.size(); ++i) {
    y[i] = x[i] > 0.0 ? x[i] : 0.0;
  }
  return y;
}

Tensor ReLULayer::backward(const Tensor& x, const Tensor&, const Tensor& gy, const Tensor*,
                           const ParameterStore&, std::span<double>,
                           bool skip_input_grad) const {
  if (skip_input_grad) {
    return Tensor();
  }
  Tensor gx(x.shape());
  for (size_t i = 0; i < x.size(); ++i) {
    gx[i] = x[i] > 0.0 ? gy[i] : 0.0;
  }
  return gx;
}

// ---------------------------------------------------------------------------
// Dropout
// ---------------------------------------------------------------------------

DropoutLayer::DropoutLayer(double rate) : rate_(rate) {
  if (rate < 0.0 || rate >= 1.0) {
    throw ConfigError("dropout: rate must lie in [0, 1)");
  }
}

std::string DropoutLayer::describe() const {
  std::ostringstream os;
  os << "dropout(" << rate_ << ")";
  return os.str();
}

Tensor DropoutLayer::forward(const Tensor& x, const ParameterStore&, Mode mode, RngStream* rng,
                             Tensor* scratch) const {
  if (mode == Mode::Eval) {
    return x;
  }
  if (rng == nullptr) {
    throw ContractError("dropout: train-mode forward requires an RngStream");
  }
  const double scale = 1.0 / (1.0 - rate_);
  Tensor mask(x.shape());
  for (size_t i = 0; i < mask.size(); ++i) {
    mask[i] = rng->uniform01() >= rate_ ? scale : 0.0;
  }
  Tensor y = mul(x, mask);
  if (scratch) {
    *scratch = std::move(mask);
  }
  return y;
}

Tensor DropoutLayer::backward(const Tensor& x, const Tensor&, const Tensor& gy,
                              const Tensor* scratch, const ParameterStore&, std::span<double>,
                              bool skip_input_grad) const {
  if (skip_input_grad) {
    return Tensor();
  }
  if (scratch == nullptr || scratch->empty()) {
    // eval-mode identity
    return gy;
  }
  (void)x;
  return mul(gy, *scratch);
}

// ---------------------------------------------------------------------------
// FeatureNorm
// ---------------------------------------------------------------------------

Tensor FeatureNormLayer::forward(const Tensor& x, const ParameterStore&, Mode, RngStream*,
                                 Tensor*) const {
  require(x.rank() >= 2, "feature_norm: input must have a batch dimension");
  const size_t n = x.dim(0);
  const size_t f = x.size() / n;
  Tensor y(x.shape());
  for (size_t i = 0; i < n; ++i) {
    const double* xp = x.data() + i * f;
    double* yp = y.data() + i * f;
    double mean = 0.0;
    for (size_t j = 0; j < f; ++j) {
      mean += xp[j];
    }
    mean /= static_cast<double>(f);
    double var = 0.0;
    for (size_t j = 0; j < f; ++j) {
      const double d = xp[j] - mean;
      var += d * d;
    }
    var /= static_cast<double>(f);
    const double inv = 1.0 / std::sqrt(var + eps_);
    for (size_t j = 0; j < f; ++j) {
      yp[j] = (xp[j] - mean) * inv;
    }
  }
  return y;
}

Tensor FeatureNormLayer::backward(const Tensor& x, const Tensor&, const Tensor& gy, const Tensor*,
                                  const ParameterStore&, std::span<double>,
                                  bool skip_input_grad) const {
  if (skip_input_grad) {
    return Tensor();
  }
  const size_t n = x.dim(0);
  const size_t f = x.size() / n;
  Tensor gx(x.shape());
  std::vector<double> xh(f);
  for (size_t i = 0; i < n; ++i) {
    const double* xp = x.data() + i * f;
    const double* gp = gy.data() + i * f;
    double* op = gx.data() + i * f;
    double mean = 0.0;
    for (size_t j = 0; j < f; ++j) {
      mean += xp[j];
    }
    mean /= static_cast<double>(f);
    double var = 0.0;
    for (size_t j = 0; j < f; ++j) {
      const double d = xp[j] - mean;
      var += d * d;
    }
    var /= static_cast<double>(f);
    const double inv = 1.0 / std::sqrt(var + eps_);
    double gmean = 0.0, gxh = 0.0;
    for (size_t j = 0; j < f; ++j) {
      xh[j] = (xp[j] - mean) * inv;
      gmean += gp[j];
      gxh += gp[j] * xh[j];
    }
    gmean /= static_cast<double>(f);
    gxh /= static_cast<double>(f);
    for (size_t j = 0; j < f; ++j) {
      op[j] = (gp[j] - gmean - xh[j] * gxh) * inv;
    }
  }
  return gx;
}

// ---------------------------------------------------------------------------
// SoftmaxHead
// ---------------------------------------------------------------------------

Tensor SoftmaxHeadLayer::forward(const Tensor& x, const ParameterStore&, Mode, RngStream*,
                                 Tensor*) const {
  require(x.rank() == 2, "softmax_head: expected [n, classes] logits");
  const size_t n = x.dim(0), c = x.dim(1);
  Tensor y(x.shape());
  for (size_t i = 0; i < n; ++i) {
    const double* xp = x.data() + i * c;
    double* yp = y.data() + i * c;
    double mx = xp[0];
    for (size_t j = 1; j < c; ++j) {
      mx = std::max(mx, xp[j]);
    }
    double sum = 0.0;
    for (size_t j = 0; j < c; ++j) {
      yp[j] = std::exp(xp[j] - mx);
      sum += yp[j];
    }
    const double inv = 1.0 / sum;
    for (size_t j = 0; j < c; ++j) {
      yp[j] *= inv;
    }
  }
  return y;
}

Tensor SoftmaxHeadLayer::backward(const Tensor& x, const Tensor& y, const Tensor& gy,
                                  const Tensor*, const ParameterStore&, std::span<double>,
                                  bool skip_input_grad) const {
  if (skip_input_grad) {
    return Tensor();
  }
  const size_t n = x.dim(0), c = x.dim(1);
  Tensor gx(x.shape());
  for (size_t i = 0; i < n; ++i) {
    const double* yp = y.data() + i * c;
    const double* gp = gy.data() + i * c;
    double* op = gx.data() + i * c;
    double dot = 0.0;
    for (size_t j = 0; j < c; ++j) {
      dot += gp[j] * yp[j];
    }
    for (size_t j = 0; j < c; ++j) {
      op[j] = yp[j] * (gp[j] - dot);
    }
  }
  return gx;
}

// ---------------------------------------------------------------------------
// LambdaNorm
// ---------------------------------------------------------------------------

LambdaNormLayer::LambdaNormLayer(double mu, double sigma) : mu_(mu), sigma_(sigma) {
  if (!(sigma > 0.0)) {
    throw ContractError("lambda_norm: sigma must be positive");
  }
}

std::string LambdaNormLayer::describe() const {
  std::ostringstream os;
  os << "lambda_norm(mu=" << mu_ << ", sigma=" << sigma_ << ")";
  return os.str();
}

void LambdaNormLayer::set_stats(double mu, double sigma) {
  if (!(sigma > 0.0)) {
    throw ContractError("lambda_norm: sigma must be positive");
  }
  mu_ = mu;
  sigma_ = sigma;
}

Tensor LambdaNormLayer::forward(const Tensor& x, const ParameterStore&, Mode, RngStream*,
                                Tensor*) const {
  Tensor y(x.shape());
  const double inv = 1.0 / sigma_;
  for (size_t i = 0; i < x.size(); ++i) {
    y[i] = (x[i] - mu_) * inv;
  }
  return y;
}

Tensor LambdaNormLayer::backward(const Tensor&, const Tensor&, const Tensor& gy, const Tensor*,
                                 const ParameterStore&, std::span<double>,
                                 bool skip_input_grad) const {
  if (skip_input_grad) {
    return Tensor();
  }
  Tensor gx(gy.shape());
  const double inv = 1.0 / sigma_;
  for (size_t i = 0; i < gy.size(); ++i) {
    gx[i] = gy[i] * inv;
  }
  return gx;
}

}  // namespace reinitlab
