#pragma once

// Fibonacci lattice on the unit sphere: the single shared segmentation
// template. Generated once per sample count, immutable afterwards, and safe
// for concurrent nearest-direction queries. The lattice is never serialized;
// it is regenerated from its sample count.

#include <cstdint>
#include <vector>

#include "cellmap/geometry.hpp"
#include "cellmap/kdtree.hpp"

namespace cellmap {

class Lattice {
 public:
  // Deterministic construction: for i in [0, n_sp)
  //   z_i   = 1 - (2i + 1) / n_sp
  //   az_i  = i * pi * (3 - sqrt(5))
  //   dir_i = (sqrt(1 - z_i^2) cos az_i, sqrt(1 - z_i^2) sin az_i, z_i)
  // Throws InvalidCountError if n_sp < 1.
  explicit Lattice(std::uint32_t n_sp);

  std::uint32_t size() const { return static_cast<std::uint32_t>(directions_.size()); }
  const std::vector<Vec3>& directions() const { return directions_; }
  const Vec3& direction(std::uint32_t j) const { return directions_[j]; }

  // Index of the lattice direction closest (in angle) to p. Scale invariant
  // in |p|; ties break to the lowest index. Throws ZeroVectorError if |p| = 0.
  std::uint32_t nearest_index(const Vec3& p) const;

  const KdTree3& tree() const { return tree_; }

 private:
  std::vector<Vec3> directions_;
  KdTree3 tree_;
};

inline Lattice generate_lattice(std::uint32_t n_sp) { return Lattice(n_sp); }

}  // namespace cellmap
