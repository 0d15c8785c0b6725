#include "reinitlab/rng.hpp"

#include <cmath>
#include <numbers>

#include "reinitlab/errors.hpp"

namespace reinitlab {

uint64_t mix64(uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

uint64_t stream_key(std::initializer_list<uint64_t> parts) noexcept {
  uint64_t h = 0x8000000000000001ull;
  for (uint64_t p : parts) {
    h = mix64(h ^ mix64(p));
  }
  return h;
}

RngStream::RngStream(uint64_t master_seed, uint64_t stream_id)
    : master_(master_seed),
      stream_(stream_id),
      engine_(mix64(mix64(master_seed) ^ mix64(stream_id))) {}

uint64_t RngStream::next_u64() { return engine_(); }

double RngStream::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform01();
}

double RngStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // u1 in (0, 1] keeps the log argument positive.
  const double u1 = 1.0 - uniform01();
  const double u2 = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

double RngStream::normal(double mean, double stddev) {
  return mean + stddev * normal();
}

uint64_t RngStream::below(uint64_t n) {
  if (n == 0) {
    throw ContractError("RngStream::below: n must be positive");
  }
  // Reject draws below 2^64 mod n; what remains is a whole number of groups.
  const uint64_t threshold = (0 - n) % n;
  uint64_t v = next_u64();
  while (v < threshold) {
    v = next_u64();
  }
  return v % n;
}

RngStream RngStream::substream(uint64_t key) const {
  return RngStream(master_, stream_key({stream_, key}));
}

}  // namespace reinitlab
