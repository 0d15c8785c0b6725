#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace reinitlab {

/// Dense row-major array of 64-bit reals; the single numeric carrier.
class Tensor {
 public:
  Tensor() = default;
  /// Zero-filled tensor of the given shape.
  explicit Tensor(std::vector<size_t> shape);
  /// Wraps existing values; product(shape) must equal values.size().
  Tensor(std::vector<size_t> shape, std::vector<double> values);

  const std::vector<size_t>& shape() const noexcept { return shape_; }
  size_t rank() const noexcept { return shape_.size(); }
  size_t dim(size_t i) const noexcept { return shape_[i]; }
  size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }
  double& operator[](size_t i) noexcept { return data_[i]; }
  double operator[](size_t i) const noexcept { return data_[i]; }
  double& operator()(size_t i, size_t j) noexcept { return data_[i * shape_[1] + j]; }
  double operator()(size_t i, size_t j) const noexcept { return data_[i * shape_[1] + j]; }

  std::span<double> flat() noexcept { return data_; }
  std::span<const double> flat() const noexcept { return data_; }

  bool same_shape(const Tensor& other) const noexcept { return shape_ == other.shape_; }
  bool all_finite() const noexcept;
  double frobenius_norm() const noexcept;
  void fill(double v);
  std::string shape_str() const;

 private:
  std::vector<size_t> shape_;
  std::vector<double> data_;
};

size_t shape_product(const std::vector<size_t>& shape) noexcept;

/// a:[m,k] x b:[k,n] -> [m,n]. Throws ContractError on shape mismatch.
Tensor matmul(const Tensor& a, const Tensor& b);
/// Elementwise ops; shapes must match exactly (no broadcasting).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

namespace kernels {
/// y[m,n] = x[m,k] . w[k,n]
void mm(const double* x, const double* w, double* y, size_t m, size_t k, size_t n);
/// gw[k,n] += x[m,k]^T . gy[m,n]
void mm_at_acc(const double* x, const double* gy, double* gw, size_t m, size_t k, size_t n);
/// gx[m,k] = gy[m,n] . w[k,n]^T
void mm_bt(const double* gy, const double* w, double* gx, size_t m, size_t k, size_t n);
}  // namespace kernels

}  // namespace reinitlab
