#include "cellmap/lattice.hpp"

#include <cmath>

#include "cellmap/errors.hpp"

namespace cellmap {

namespace {
// Golden angle, radians.
const double kGoldenAngle = M_PI * (3.0 - std::sqrt(5.0));
}  // namespace

Lattice::Lattice(std::uint32_t n_sp) {
  if (n_sp < 1) throw InvalidCountError("generate_lattice: n_sp must be >= 1");

  directions_.reserve(n_sp);
  const double n = static_cast<double>(n_sp);
  for (std::uint32_t i = 0; i < n_sp; ++i) {
    const double z = 1.0 - (2.0 * i + 1.0) / n;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double az = i * kGoldenAngle;
    directions_.emplace_back(r * std::cos(az), r * std::sin(az), z);
  }
  tree_ = KdTree3(directions_);
}

std::uint32_t Lattice::nearest_index(const Vec3& p) const {
  const double norm = p.norm();
  if (norm == 0.0) throw ZeroVectorError("nearest_index: zero direction vector");
  return tree_.nearest(p / norm);
}

}  // namespace cellmap
