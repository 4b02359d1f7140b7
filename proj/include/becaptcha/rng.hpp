#pragma once

#include <cmath>
#include <cstdint>

namespace becaptcha {

// Deterministic splitmix64 generator. All stochastic code in the library
// draws from this so that a fixed seed reproduces runs bit-for-bit on any
// platform, which std:: distributions do not guarantee.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed0_(seed), state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // [0, 1)
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Unbiased index in [0, n); n must be > 0.
  std::size_t uniform_index(std::size_t n) {
    return static_cast<std::size_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // Standard normal via Box-Muller with one cached spare.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - uniform01();  // (0, 1], keeps log finite
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Independent child stream derived from the original seed and a salt.
  // Derivation ignores how much the parent has drawn, so per-tree or
  // per-repetition streams stay stable under reordering.
  Rng child(std::uint64_t salt) const {
    std::uint64_t z = seed0_ ^ (0xD6E8FEB86659FD93ull * (salt + 1));
    z = (z ^ (z >> 32)) * 0xD6E8FEB86659FD93ull;
    z = z ^ (z >> 32);
    return Rng(z);
  }

  std::uint64_t seed() const { return seed0_; }

 private:
  std::uint64_t seed0_;
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace becaptcha
