#include "reinitlab/synthetic.hpp"

#include "reinitlab/errors.hpp"
#include "reinitlab/reinit.hpp"

namespace reinitlab {

void SyntheticSpec::validate() const {
  if (!(alpha > 0.0)) throw ConfigError("synthetic: alpha must be positive");
  if (n_train < 1 || n_test < 1) throw ConfigError("synthetic: set sizes must be positive");
  if (dim < 3) throw ConfigError("synthetic: dim must be >= 3");
  if (n_classes != 8) throw ConfigError("synthetic: exactly 8 classes (3-bit labels)");
}

namespace {

Dataset draw_vectors(const SyntheticSpec& spec, int n, RngStream rng) {
  Dataset d;
  d.x = Tensor({static_cast<size_t>(n), static_cast<size_t>(spec.dim)});
  d.y.resize(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int label = static_cast<int>(rng.below(8));
    d.y[static_cast<size_t>(i)] = label;
    double* row = d.x.data() + static_cast<size_t>(i) * static_cast<size_t>(spec.dim);
    for (int bit = 0; bit < 3; ++bit) {
      // most significant bit first: coordinate 0 holds bit 2
      const int on = (label >> (2 - bit)) & 1;
      row[bit] = on ? spec.alpha : -spec.alpha;
    }
    for (int j = 3; j < spec.dim; ++j) {
      row[j] = rng.normal();
    }
  }
  return d;
}

}  // namespace

std::pair<Dataset, Dataset> gen_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  Dataset train = draw_vectors(spec, spec.n_train, RngStream(spec.seed, streams::kDataTrain));
  Dataset test = draw_vectors(spec, spec.n_test, RngStream(spec.seed, streams::kDataTest));
  return {std::move(train), std::move(test)};
}

void SyntheticImageSpec::validate() const {
  if (!(alpha > 0.0)) throw ConfigError("synthetic images: alpha must be positive");
  if (n_train < 1 || n_test < 1) throw ConfigError("synthetic images: set sizes must be positive");
  if (hw < 2 || patch < 1 || patch > hw) throw ConfigError("synthetic images: bad patch geometry");
  if (channels != 3) throw ConfigError("synthetic images: exactly 3 channels (3-bit labels)");
  if (n_classes != 8) throw ConfigError("synthetic images: exactly 8 classes");
}

namespace {

Dataset draw_images(const SyntheticImageSpec& spec, int n, RngStream rng) {
  const auto hw = static_cast<size_t>(spec.hw);
  const auto ch = static_cast<size_t>(spec.channels);
  Dataset d;
  d.x = Tensor({static_cast<size_t>(n), hw, hw, ch});
  d.y.resize(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int label = static_cast<int>(rng.below(8));
    d.y[static_cast<size_t>(i)] = label;
    double* img = d.x.data() + static_cast<size_t>(i) * hw * hw * ch;
    for (size_t p = 0; p < hw * hw * ch; ++p) {
      img[p] = rng.normal();
    }
    for (size_t y = 0; y < static_cast<size_t>(spec.patch); ++y) {
      for (size_t x = 0; x < static_cast<size_t>(spec.patch); ++x) {
        for (size_t c = 0; c < ch; ++c) {
          const int on = (label >> (2 - static_cast<int>(c))) & 1;
          img[(y * hw + x) * ch + c] = on ? spec.alpha : -spec.alpha;
        }
      }
    }
  }
  return d;
}

}  // namespace

std::pair<Dataset, Dataset> gen_synthetic_images(const SyntheticImageSpec& spec) {
  spec.validate();
  Dataset train = draw_images(spec, spec.n_train, RngStream(spec.seed, streams::kDataTrain));
  Dataset test = draw_images(spec, spec.n_test, RngStream(spec.seed, streams::kDataTest));
  return {std::move(train), std::move(test)};
}

}  // namespace reinitlab
