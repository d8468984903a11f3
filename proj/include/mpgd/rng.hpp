#pragma once
#include <cstdint>
#include <cmath>

namespace mpgd {

// splitmix64 finalizer, also used to derive substream seeds
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Derives the seed of an independent logical stream from a base seed.
// Replica loops hand (base, index) pairs to workers, so results do not
// depend on how the loop is partitioned across threads.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag, std::uint64_t index) {
  return mix64(mix64(base ^ (tag * 0xda942042e4dd58b5ull)) + index);
}

// Small seedable generator (splitmix64 sequence).  All sampling the project
// depends on for reproducibility goes through this class; std:: distributions
// are avoided because their draw sequences are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // uniform on [0,1) with 53 random bits
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform on (0,1), never exactly zero
  double uniform_pos() {
    double u;
    do { u = uniform01(); } while (u == 0.0);
    return u;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  // standard normal via the Marsaglia polar method, spare value cached
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    have_spare_ = true;
    return u * f;
  }

  // standard exponential, strictly positive
  double exponential() { return -std::log(uniform_pos()); }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace mpgd
