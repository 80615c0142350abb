#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace dslfiqa {

// Splittable deterministic RNG. Every run derives all of its randomness from a
// single root seed; independent subsystems get decorrelated child streams via
// split(). Draws are implemented directly (no std::*_distribution) so that a
// given seed produces the same stream on every platform.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(mix(seed ^ kGolden)) {}

  uint64_t next_u64() {
    state_ += kGolden;
    return mix(state_);
  }

  // Child stream keyed by an integer tag. Children with distinct tags, and
  // the parent stream itself, are mutually decorrelated.
  Rng split(uint64_t tag) const { return Rng(mix(state_ ^ mix(tag + kGolden))); }

  Rng split(std::string_view tag) const { return split(fnv1a(tag)); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [lo, hi], inclusive.
  int64_t uniform_int(int64_t lo, int64_t hi) {
    const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    return lo + static_cast<int64_t>(next_u64() % span);
  }

  // Standard normal via Box-Muller; the spare draw is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Normal redrawn until it lands within [-2, 2] standard deviations.
  double truncated_normal(double stddev) {
    double x = normal();
    while (std::abs(x) > 2.0) x = normal();
    return x * stddev;
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(uniform_int(0, static_cast<int64_t>(i) - 1));
      std::swap(v[i - 1], v[j]);
    }
  }

  static uint64_t fnv1a(std::string_view s) {
    uint64_t h = 1469598103934665603ull;
    for (const char c : s) {
      h ^= static_cast<uint8_t>(c);
      h *= 1099511628211ull;
    }
    return h;
  }

 private:
  static constexpr uint64_t kGolden = 0x9E3779B97F4A7C15ull;

  static uint64_t mix(uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
  }

  uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace dslfiqa
