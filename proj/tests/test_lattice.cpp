#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "cellmap/errors.hpp"
#include "cellmap/kdtree.hpp"
#include "cellmap/lattice.hpp"
#include "cellmap/random.hpp"

using namespace cellmap;

namespace {

// Linear-scan nearest with the same tie rule as the tree (lowest index wins).
std::uint32_t nearest_brute(const std::vector<Vec3>& dirs, const Vec3& q) {
  std::uint32_t best = 0;
  double best_d2 = (dirs[0] - q).squaredNorm();
  for (std::uint32_t i = 1; i < dirs.size(); ++i) {
    const double d2 = (dirs[i] - q).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = i;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("n_sp = 1 lattice is the single direction (1,0,0)") {
  const Lattice lattice(1);
  REQUIRE(lattice.size() == 1);
  CHECK((lattice.direction(0) - Vec3(1, 0, 0)).norm() < 1e-15);
}

TEST_CASE("directions follow the offset fibonacci construction") {
  const std::uint32_t n = 4;
  const Lattice lattice(n);
  const double golden = M_PI * (3.0 - std::sqrt(5.0));
  for (std::uint32_t i = 0; i < n; ++i) {
    const double z = 1.0 - (2.0 * i + 1.0) / n;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const Vec3 expect(r * std::cos(golden * i), r * std::sin(golden * i), z);
    CHECK((lattice.direction(i) - expect).norm() < 1e-15);
  }
}

TEST_CASE("all directions are unit with strictly decreasing z") {
  const Lattice lattice(2000);
  for (std::uint32_t i = 0; i < lattice.size(); ++i) {
    CHECK(std::abs(lattice.direction(i).norm() - 1.0) < 1e-14);
    if (i > 0) CHECK(lattice.direction(i).z() < lattice.direction(i - 1).z());
  }
}

TEST_CASE("generation is deterministic") {
  const Lattice a(3000), b(3000);
  for (std::uint32_t i = 0; i < a.size(); ++i)
    CHECK(a.direction(i) == b.direction(i));
}

TEST_CASE("nearest_index equals the linear-scan oracle on 10k random directions") {
  const Lattice lattice(5000);
  SplitMix64 rng(21);
  for (int k = 0; k < 10000; ++k) {
    const Vec3 q = rng.unit_vec3();
    CHECK(lattice.nearest_index(q) == nearest_brute(lattice.directions(), q));
  }
}

TEST_CASE("nearest_index is scale invariant") {
  const Lattice lattice(2000);
  SplitMix64 rng(22);
  for (int k = 0; k < 500; ++k) {
    const Vec3 q = rng.unit_vec3();
    const std::uint32_t j = lattice.nearest_index(q);
    CHECK(lattice.nearest_index(q * 0.013) == j);
    CHECK(lattice.nearest_index(q * 370.0) == j);
  }
}

TEST_CASE("nearest_index rejects the zero vector") {
  const Lattice lattice(100);
  CHECK_THROWS_AS(lattice.nearest_index(Vec3::Zero()), ZeroVectorError);
}

TEST_CASE("kd tree breaks distance ties toward the lowest index") {
  // Two pairs of coincident points plus one equidistant pair straddling a
  // query.
  std::vector<Vec3> pts = {{1, 0, 0}, {0, 1, 0}, {1, 0, 0}, {0, -1, 0}, {0, 1, 0}};
  const KdTree3 tree(pts);
  CHECK(tree.nearest(Vec3(1, 0, 0)) == 0);
  CHECK(tree.nearest(Vec3(0, 1, 0)) == 1);
  // (0,1,0) and (0,-1,0) are equidistant from the origin-ish query on x.
  CHECK(tree.nearest(Vec3(0.2, 0, 0)) == 0);
  CHECK(tree.nearest(Vec3(-0.5, 0, 0)) == 1);
}

TEST_CASE("minimal pairwise angle at n_sp = 1000 exceeds 0.8 * sqrt(4pi/n)") {
  const Lattice lattice(1000);
  double min_angle = M_PI;
  for (std::uint32_t i = 0; i < lattice.size(); ++i)
    for (std::uint32_t j = i + 1; j < lattice.size(); ++j) {
      const double c = lattice.direction(i).dot(lattice.direction(j));
      min_angle = std::min(min_angle, std::acos(std::clamp(c, -1.0, 1.0)));
    }
  const double bound = 0.8 * std::sqrt(4.0 * M_PI / 1000.0);
  INFO("min pairwise angle ", min_angle, " bound ", bound);
  CHECK(min_angle > bound);
}

TEST_CASE("covering: random directions at n_sp = 50000 lie within 1.5 * sqrt(4pi/n)") {
  const Lattice lattice(50000);
  SplitMix64 rng(23);
  double max_angle = 0.0;
  for (int k = 0; k < 100000; ++k) {
    const Vec3 q = rng.unit_vec3();
    const Vec3 d = lattice.direction(lattice.nearest_index(q));
    max_angle = std::max(max_angle, std::acos(std::clamp(q.dot(d), -1.0, 1.0)));
  }
  const double bound = 1.5 * std::sqrt(4.0 * M_PI / 50000.0);
  INFO("max covering angle ", max_angle, " bound ", bound);
  CHECK(max_angle < bound);
}

TEST_CASE("lattice size below the default is rejected only at zero") {
  CHECK_THROWS_AS(Lattice(0), InvalidCountError);
  CHECK_NOTHROW(Lattice(2));
}
