#include "reinitlab/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "reinitlab/errors.hpp"

namespace reinitlab {

size_t shape_product(const std::vector<size_t>& shape) noexcept {
  size_t p = 1;
  for (size_t d : shape) {
    p *= d;
  }
  return p;
}

Tensor::Tensor(std::vector<size_t> shape)
    : shape_(std::move(shape)), data_(shape_product(shape_), 0.0) {
  for (size_t d : shape_) {
    if (d == 0) {
      throw ContractError("Tensor: zero dimension in shape " + shape_str());
    }
  }
}

Tensor::Tensor(std::vector<size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
  if (shape_product(shape_) != data_.size()) {
    throw ContractError("Tensor: shape " + shape_str() + " does not match " +
                        std::to_string(data_.size()) + " values");
  }
}

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

double Tensor::frobenius_norm() const noexcept {
  double s = 0.0;
  for (double v : data_) {
    s += v * v;
  }
  return std::sqrt(s);
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape_.size(); ++i) {
    os << (i ? "," : "") << shape_[i];
  }
  os << "]";
  return os.str();
}

namespace kernels {

void mm(const double* x, const double* w, double* y, size_t m, size_t k, size_t n) {
  for (size_t i = 0; i < m; ++i) {
    double* yi = y + i * n;
    std::fill(yi, yi + n, 0.0);
    const double* xi = x + i * k;
    for (size_t p = 0; p < k; ++p) {
      const double xv = xi[p];
      const double* wp = w + p * n;
      for (size_t j = 0; j < n; ++j) {
        yi[j] += xv * wp[j];
      }
    }
  }
}

void mm_at_acc(const double* x, const double* gy, double* gw, size_t m, size_t k, size_t n) {
  for (size_t i = 0; i < m; ++i) {
    const double* xi = x + i * k;
    const double* gi = gy + i * n;
    for (size_t p = 0; p < k; ++p) {
      const double xv = xi[p];
      double* gwp = gw + p * n;
      for (size_t j = 0; j < n; ++j) {
        gwp[j] += xv * gi[j];
      }
    }
  }
}

void mm_bt(const double* gy, const double* w, double* gx, size_t m, size_t k, size_t n) {
  for (size_t i = 0; i < m; ++i) {
    const double* gi = gy + i * n;
    double* gxi = gx + i * k;
    for (size_t p = 0; p < k; ++p) {
      const double* wp = w + p * n;
      double acc = 0.0;
      for (size_t j = 0; j < n; ++j) {
        acc += gi[j] * wp[j];
      }
      gxi[p] = acc;
    }
  }
}

}  // namespace kernels

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw ContractError("matmul: incompatible shapes " + a.shape_str() + " x " + b.shape_str());
  }
  Tensor y({a.dim(0), b.dim(1)});
  kernels::mm(a.data(), b.data(), y.data(), a.dim(0), a.dim(1), b.dim(1));
  return y;
}

namespace {

template <typename F>
Tensor zip(const Tensor& a, const Tensor& b, const char* op, F f) {
  if (!a.same_shape(b)) {
    throw ContractError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
  }
  Tensor out(a.shape());
  for (size_t i = 0; i < a.size(); ++i) {
    out[i] = f(a[i], b[i]);
  }
  return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return zip(a, b, "add", [](double x, double y) { return x + y; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return zip(a, b, "sub", [](double x, double y) { return x - y; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return zip(a, b, "mul", [](double x, double y) { return x * y; });
}

}  // namespace reinitlab
