#pragma once

// Small deterministic PRNG (splitmix64) with the few distributions used in
// this project. std::mt19937 + std distributions are avoided because their
// output is implementation-defined, and generated maps should be
// reproducible from a seed regardless of standard library.

#include <cmath>
#include <cstdint>

#include "cellmap/geometry.hpp"

namespace cellmap {

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Modulo bias is ~n / 2^64, irrelevant at these sizes.
  std::uint32_t below(std::uint32_t n) { return static_cast<std::uint32_t>(next() % n); }

  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Marsaglia polar method; the spare draw is kept for the next call.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
  }

  Vec3 gaussian_vec3() {
    const double x = gaussian(), y = gaussian(), z = gaussian();
    return Vec3(x, y, z);
  }

  Vec3 unit_vec3() {
    Vec3 v;
    do {
      v = gaussian_vec3();
    } while (v.norm() < 1e-12);
    return v.normalized();
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace cellmap
