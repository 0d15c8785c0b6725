#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <utility>

namespace reinitlab {

/// SplitMix64 finalizer; the mixing primitive behind stream derivation.
uint64_t mix64(uint64_t x) noexcept;

/// Folds parts into one stream id: h = mix64(h ^ mix64(part)) left to right.
uint64_t stream_key(std::initializer_list<uint64_t> parts) noexcept;

/// Deterministic random stream addressed by (master_seed, stream_id).
///
/// The engine is a Mersenne twister seeded with
///   mix64(mix64(master_seed) ^ mix64(stream_id)),
/// so distinct stream ids give independent sequences while the same pair
/// replays the same draws bit-for-bit for a given build. All variates are
/// derived from raw 64-bit engine words; std::*_distribution is avoided
/// because its output is implementation-defined.
class RngStream {
 public:
  RngStream() : RngStream(0, 0) {}
  RngStream(uint64_t master_seed, uint64_t stream_id);

  uint64_t master_seed() const noexcept { return master_; }
  uint64_t stream_id() const noexcept { return stream_; }

  uint64_t next_u64();
  /// Uniform in [0, 1) with 53-bit resolution.
  double uniform01();
  double uniform(double lo, double hi);
  /// Standard normal via Box-Muller (pairs generated, spare cached).
  double normal();
  double normal(double mean, double stddev);
  /// Uniform integer in [0, n); rejection sampling, so unbiased for any n.
  uint64_t below(uint64_t n);

  /// Child stream on the same master seed, id = stream_key({stream_id, key}).
  RngStream substream(uint64_t key) const;

  template <typename RandomIt>
  void shuffle(RandomIt first, RandomIt last) {
    const auto n = static_cast<uint64_t>(last - first);
    for (uint64_t i = n; i > 1; --i) {
      std::swap(first[i - 1], first[below(i)]);
    }
  }

 private:
  uint64_t master_ = 0;
  uint64_t stream_ = 0;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace reinitlab
