#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace reinitlab {

struct ParamSegment {
  int layer_id = -1;
  int tensor_id = 0;  // 0 = weight/kernel, 1 = bias
  size_t offset = 0;
  size_t length = 0;
  std::vector<size_t> shape;
};

/// Owns the flat parameter vector w of dimension d. Layers hold segment
/// indices and view their tensors as spans into the same storage, so writes
/// through the flat vector and through a layer view observe the same values.
/// Segments tile [0, d) exactly, in registration order.
class ParameterStore {
 public:
  /// Registration phase; returns the segment index.
  size_t add(int layer_id, int tensor_id, std::vector<size_t> shape);
  void finalize();
  bool finalized() const noexcept { return finalized_; }

  size_t dim() const noexcept { return dim_; }
  size_t num_segments() const noexcept { return segments_.size(); }
  const ParamSegment& segment(size_t i) const { return segments_[i]; }
  const std::vector<ParamSegment>& segments() const noexcept { return segments_; }

  std::span<double> values(size_t seg);
  std::span<const double> values(size_t seg) const;
  std::span<double> flat();
  std::span<const double> flat() const;

  std::vector<double> snapshot() const;
  void restore(std::span<const double> values);

  double segment_norm(size_t seg) const;
  void scale_segment(size_t seg, double factor);

 private:
  std::vector<ParamSegment> segments_;
  std::vector<double> flat_;
  size_t dim_ = 0;
  bool finalized_ = false;
};

}  // namespace reinitlab
