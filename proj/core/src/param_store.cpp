#include "reinitlab/param_store.hpp"

#include <algorithm>
#include <cmath>

#include "reinitlab/errors.hpp"
#include "reinitlab/tensor.hpp"

namespace reinitlab {

size_t ParameterStore::add(int layer_id, int tensor_id, std::vector<size_t> shape) {
  if (finalized_) {
    throw ContractError("ParameterStore::add after finalize");
  }
  ParamSegment seg;
  seg.layer_id = layer_id;
  seg.tensor_id = tensor_id;
  seg.offset = dim_;
  seg.length = shape_product(shape);
  seg.shape = std::move(shape);
  dim_ += seg.length;
  segments_.push_back(std::move(seg));
  return segments_.size() - 1;
}

void ParameterStore::finalize() {
  if (finalized_) {
    throw ContractError("ParameterStore::finalize called twice");
  }
  flat_.assign(dim_, 0.0);
  finalized_ = true;
}

std::span<double> ParameterStore::values(size_t seg) {
  const ParamSegment& s = segments_[seg];
  return {flat_.data() + s.offset, s.length};
}

std::span<const double> ParameterStore::values(size_t seg) const {
  const ParamSegment& s = segments_[seg];
  return {flat_.data() + s.offset, s.length};
}

std::span<double> ParameterStore::flat() { return flat_; }

std::span<const double> ParameterStore::flat() const { return flat_; }

std::vector<double> ParameterStore::snapshot() const { return flat_; }

void ParameterStore::restore(std::span<const double> values) {
  if (values.size() != flat_.size()) {
    throw ContractError("ParameterStore::restore: size mismatch");
  }
  std::copy(values.begin(), values.end(), flat_.begin());
}

double ParameterStore::segment_norm(size_t seg) const {
  double s = 0.0;
  for (double v : values(seg)) {
    s += v * v;
  }
  return std::sqrt(s);
}

void ParameterStore::scale_segment(size_t seg, double factor) {
  for (double& v : values(seg)) {
    v *= factor;
  }
}

}  // namespace reinitlab
