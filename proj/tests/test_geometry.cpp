#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "cellmap/errors.hpp"
#include "cellmap/geometry.hpp"
#include "helpers.hpp"

using namespace cellmap;
using namespace cellmap::testing;

namespace {

Eigen::Matrix4d twist_matrix(const Twist& xi) {
  Eigen::Matrix4d A = Eigen::Matrix4d::Zero();
  A.topLeftCorner<3, 3>() = skew(xi.tail<3>());
  A.topRightCorner<3, 1>() = xi.head<3>();
  return A;
}

// Independent route 1: scaled-and-squared power series of the 4x4 twist matrix.
// Scaling keeps every series term below one so roundoff stays near machine epsilon.
Eigen::Matrix4d expm_series(const Eigen::Matrix4d& A) {
  int squarings = 0;
  Eigen::Matrix4d scaled = A;
  while (scaled.norm() > 0.25) {
    scaled *= 0.5;
    ++squarings;
  }
  Eigen::Matrix4d sum = Eigen::Matrix4d::Identity();
  Eigen::Matrix4d term = Eigen::Matrix4d::Identity();
  for (int k = 1; k <= 30; ++k) {
    term = (term * scaled) / static_cast<double>(k);
    sum += term;
  }
  for (int k = 0; k < squarings; ++k) sum = sum * sum;
  return sum;
}

// Independent route 2: product integration of the flow with a quartic step.
Eigen::Matrix4d expm_product(const Eigen::Matrix4d& A, int steps) {
  const Eigen::Matrix4d S = A / steps;
  const Eigen::Matrix4d S2 = S * S;
  Eigen::Matrix4d step =
      Eigen::Matrix4d::Identity() + S + 0.5 * S2 + (S2 * S) / 6.0 + (S2 * S2) / 24.0;
  Eigen::Matrix4d out = Eigen::Matrix4d::Identity();
  for (int k = 0; k < steps; ++k) out = out * step;
  return out;
}

}  // namespace

TEST_CASE("skew matches the cross product") {
  SplitMix64 rng(11);
  for (int i = 0; i < 100; ++i) {
    const Vec3 a = random_vec(rng, 5.0), b = random_vec(rng, 5.0);
    CHECK((skew(a) * b - a.cross(b)).norm() < 1e-13);
    CHECK((skew(a) + skew(a).transpose()).norm() == 0.0);
  }
}

TEST_CASE("identity transform fixes points and 90 deg about z maps x to y") {
  const PoseSE3 id = PoseSE3::identity();
  CHECK((id * Vec3(1, 2, 3) - Vec3(1, 2, 3)).norm() == 0.0);

  const PoseSE3 rz(Eigen::Quaterniond(Eigen::AngleAxisd(M_PI / 2, Vec3::UnitZ())),
                   Vec3::Zero());
  CHECK((rz * Vec3(1, 0, 0) - Vec3(0, 1, 0)).norm() < 1e-15);
}

TEST_CASE("composition and point transform agree with homogeneous matrices") {
  SplitMix64 rng(12);
  for (int i = 0; i < 50; ++i) {
    const PoseSE3 a = random_pose(rng, 10.0, 3.0), b = random_pose(rng, 10.0, 3.0);
    CHECK(((a * b).matrix() - a.matrix() * b.matrix()).norm() < 1e-12);
    const Vec3 p = random_vec(rng, 20.0);
    const Eigen::Vector4d ph(p.x(), p.y(), p.z(), 1.0);
    CHECK((a * p - (a.matrix() * ph).head<3>()).norm() < 1e-12);
  }
}

TEST_CASE("group axioms: associativity and two-sided inverse") {
  SplitMix64 rng(13);
  for (int i = 0; i < 50; ++i) {
    const PoseSE3 a = random_pose(rng, 5.0, 3.0), b = random_pose(rng, 5.0, 3.0),
                  c = random_pose(rng, 5.0, 3.0);
    CHECK((((a * b) * c).matrix() - (a * (b * c)).matrix()).norm() < 1e-12);
    CHECK(((a * a.inverse()).matrix() - Eigen::Matrix4d::Identity()).norm() < 1e-9);
    CHECK(((a.inverse() * a).matrix() - Eigen::Matrix4d::Identity()).norm() < 1e-9);
  }
}

TEST_CASE("exp of the zero twist is the identity") {
  const PoseSE3 p = se3_exp(Twist::Zero());
  CHECK((p.matrix() - Eigen::Matrix4d::Identity()).norm() == 0.0);
}

TEST_CASE("log of the identity is the zero twist") {
  CHECK(se3_log(PoseSE3::identity()).norm() == 0.0);
}

TEST_CASE("pure translation twists exponentiate exactly") {
  Twist xi = Twist::Zero();
  xi.head<3>() = Vec3(3.5, -2.0, 0.25);
  const PoseSE3 p = se3_exp(xi);
  CHECK((p.translation - Vec3(3.5, -2.0, 0.25)).norm() == 0.0);
  CHECK(p.rotation_angle() == 0.0);
}

TEST_CASE("exp matches the 4x4 matrix-exponential series across magnitudes") {
  SplitMix64 rng(14);
  const double angles[] = {1e-12, 1e-9, 1e-7, 1e-4, 0.1, 1.0, 2.5, 3.0};
  for (double angle : angles) {
    for (int i = 0; i < 20; ++i) {
      Twist xi;
      xi.head<3>() = random_vec(rng, 4.0);
      xi.tail<3>() = rng.unit_vec3() * angle;
      const Eigen::Matrix4d oracle = expm_series(twist_matrix(xi));
      CHECK((se3_exp(xi).matrix() - oracle).norm() < 1e-12);
    }
  }
}

TEST_CASE("half-turn twist: frozen constant and product-integration oracle") {
  Twist xi;
  xi << 1.0, 0.0, 0.0, 0.0, 0.0, M_PI;
  const PoseSE3 p = se3_exp(xi);

  // Left Jacobian of a half turn about z maps (1,0,0) to (0, 2/pi, 0).
  CHECK(std::abs(p.translation.x()) < 1e-12);
  CHECK(std::abs(p.translation.y() - 0.6366197723675814) < 1e-12);
  CHECK(p.translation.z() == 0.0);
  Mat3 half_turn;
  half_turn << -1, 0, 0, 0, -1, 0, 0, 0, 1;
  CHECK((p.rotation_matrix() - half_turn).norm() < 1e-12);

  const Eigen::Matrix4d oracle = expm_product(twist_matrix(xi), 1000);
  CHECK((p.matrix() - oracle).norm() < 5e-9);
}

TEST_CASE("log inverts exp away from pi") {
  SplitMix64 rng(15);
  for (int i = 0; i < 200; ++i) {
    Twist xi;
    xi.head<3>() = random_vec(rng, 8.0);
    xi.tail<3>() = rng.unit_vec3() * (rng.uniform01() * (M_PI - 1e-3));
    CHECK((se3_log(se3_exp(xi)) - xi).norm() < 1e-9);
  }
}

TEST_CASE("log throws within 1e-6 of a half turn") {
  SplitMix64 rng(16);
  Twist xi = Twist::Zero();
  xi.tail<3>() = rng.unit_vec3() * (M_PI - 1e-7);
  CHECK_THROWS_AS(se3_log(se3_exp(xi)), AngleNearPiError);

  xi.tail<3>() = rng.unit_vec3() * (M_PI - 1e-3);
  CHECK_NOTHROW(se3_log(se3_exp(xi)));
}

TEST_CASE("transform_point preserves pairwise distances") {
  SplitMix64 rng(17);
  const PoseSE3 T = random_pose(rng, 30.0, 3.0);
  for (int i = 0; i < 100; ++i) {
    const Vec3 p = random_vec(rng, 50.0), q = random_vec(rng, 50.0);
    CHECK(std::abs((transform_point(T, p) - transform_point(T, q)).norm() - (p - q).norm()) <
          1e-9);
  }
}

TEST_CASE("quaternions are canonicalized to unit norm with w >= 0") {
  const Eigen::Quaterniond q(-0.5, 0.5, 0.5, -0.5);
  const PoseSE3 p(q, Vec3::Zero());
  CHECK(p.rotation.w() >= 0.0);
  CHECK(std::abs(p.rotation.norm() - 1.0) < 1e-15);

  const PoseSE3 doubled(Eigen::Quaterniond(2.0 * q.coeffs()), Vec3::Zero());
  CHECK((doubled.rotation_matrix() - p.rotation_matrix()).norm() < 1e-15);
}

TEST_CASE("rotation_angle_between reports the relative angle") {
  const PoseSE3 a(Eigen::Quaterniond(Eigen::AngleAxisd(30.0 * M_PI / 180, Vec3::UnitZ())),
                  Vec3::Zero());
  const PoseSE3 b(Eigen::Quaterniond(Eigen::AngleAxisd(10.0 * M_PI / 180, Vec3::UnitZ())),
                  Vec3(5, 5, 5));
  CHECK(rotation_angle_between(a, b) == doctest::Approx(20.0 * M_PI / 180).epsilon(1e-12));
}

TEST_CASE("scan construction drops short-range and non-finite points") {
  std::vector<Vec3> raw = {
      {0.3, 0.0, 0.0},                                        // below r_min
      {0.5, 0.0, 0.0},                                        // exactly r_min, kept
      {0.6, 0.0, 0.0},                                        // kept
      {std::numeric_limits<double>::quiet_NaN(), 0.0, 0.0},   // dropped
      {std::numeric_limits<double>::infinity(), 1.0, 1.0},    // dropped
      {3.0, -4.0, 12.0},                                      // kept
  };
  const Scan scan(std::move(raw), 7);
  REQUIRE(scan.points.size() == 3);
  CHECK(scan.points[0] == Vec3(0.5, 0.0, 0.0));
  CHECK(scan.points[1] == Vec3(0.6, 0.0, 0.0));
  CHECK(scan.frame_id == 7);
}
