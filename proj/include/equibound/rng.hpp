#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace equibound::rng {

// splitmix64 finalizer (Steele, Lea, Flood 2014).
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Derived key for stream i of a master seed; used for per-unit streams,
// per-trial seeds and per-group fold seeds.
inline std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
  return mix64(seed + 0x9E3779B97F4A7C15ull * (stream + 1));
}

// Deterministic splitmix64 stream. Each unit of a synthetic dataset gets its
// own stream so growing n never perturbs earlier units.
class Stream {
 public:
  Stream(std::uint64_t seed, std::uint64_t stream) : state_(derive(seed, stream)) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    return mix64(state_);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return next_double() < p; }

  // Index uniform in [0, n). Modulo bias is negligible for the small n used
  // here (fold counts, group counts, shuffle positions).
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

  // Box-Muller, cosine branch only; consumes two uniforms per draw.
  double normal() {
    double u1 = 1.0 - next_double();  // (0, 1]
    double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t state_;
};

}  // namespace equibound::rng
