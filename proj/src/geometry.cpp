#include "cellmap/geometry.hpp"

#include <cmath>
#include <utility>

#include "cellmap/errors.hpp"

namespace cellmap {

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

namespace {

// Canonical unit quaternion: normalized, w >= 0. Keeps serialized poses and
// comparisons stable across algebraically equivalent composition orders.
Eigen::Quaterniond canonicalize(Eigen::Quaterniond q) {
  q.normalize();
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  return q;
}

// Left Jacobian of SO(3): J_l(phi) = I + c1 [phi]x + c2 [phi]x^2.
Mat3 so3_left_jacobian(const Vec3& phi) {
  const double theta = phi.norm();
  double c1, c2;
  if (theta < kSmallAngle) {
    c1 = 0.5 - theta * theta / 24.0;
    c2 = 1.0 / 6.0 - theta * theta / 120.0;
  } else {
    // 1 - cos(t) = 2 sin^2(t/2) avoids cancellation at small angles.
    const double half = 0.5 * theta;
    const double s = std::sin(half) / half;
    c1 = 0.5 * s * s;
    c2 = (theta - std::sin(theta)) / (theta * theta * theta);
  }
  const Mat3 k = skew(phi);
  return Mat3::Identity() + c1 * k + c2 * k * k;
}

Mat3 so3_left_jacobian_inverse(const Vec3& phi) {
  const double theta = phi.norm();
  double c;
  if (theta < kSmallAngle) {
    c = 1.0 / 12.0 + theta * theta / 720.0;
  } else {
    const double half = 0.5 * theta;
    c = (1.0 - half * std::cos(half) / std::sin(half)) / (theta * theta);
  }
  const Mat3 k = skew(phi);
  return Mat3::Identity() - 0.5 * k + c * k * k;
}

}  // namespace

PoseSE3::PoseSE3(const Eigen::Quaterniond& q, const Vec3& t)
    : rotation(canonicalize(q)), translation(t) {}

Eigen::Matrix4d PoseSE3::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation_matrix();
  m.topRightCorner<3, 1>() = translation;
  return m;
}

PoseSE3 PoseSE3::inverse() const {
  const Eigen::Quaterniond qi = rotation.conjugate();
  return PoseSE3(qi, qi * -translation);
}

PoseSE3 PoseSE3::operator*(const PoseSE3& other) const {
  return PoseSE3(rotation * other.rotation, rotation * other.translation + translation);
}

double PoseSE3::rotation_angle() const {
  const Eigen::Quaterniond q = canonicalize(rotation);
  return 2.0 * std::atan2(q.vec().norm(), q.w());
}

double rotation_angle_between(const PoseSE3& a, const PoseSE3& b) {
  return (a.inverse() * b).rotation_angle();
}

PoseSE3 se3_exp(const Twist& xi) {
  const Vec3 rho = xi.head<3>();
  const Vec3 phi = xi.tail<3>();
  const double theta = phi.norm();

  Eigen::Quaterniond q;
  if (theta < kSmallAngle) {
    // sin(t/2)/t ~ 1/2 - t^2/48
    const double s = 0.5 - theta * theta / 48.0;
    q = Eigen::Quaterniond(std::cos(0.5 * theta), s * phi.x(), s * phi.y(), s * phi.z());
  } else {
    q = Eigen::Quaterniond(Eigen::AngleAxisd(theta, phi / theta));
  }
  return PoseSE3(q, so3_left_jacobian(phi) * rho);
}

Twist se3_log(const PoseSE3& pose) {
  const Eigen::Quaterniond q = canonicalize(pose.rotation);
  const double theta = 2.0 * std::atan2(q.vec().norm(), q.w());
  if (theta >= M_PI - 1e-6)
    throw AngleNearPiError("se3_log: rotation angle within 1e-6 of pi");

  Vec3 phi;
  if (theta < kSmallAngle) {
    phi = 2.0 * q.vec();  // sin(t/2) ~ t/2
  } else {
    phi = q.vec() * (theta / q.vec().norm());
  }
  Twist xi;
  xi.head<3>() = so3_left_jacobian_inverse(phi) * pose.translation;
  xi.tail<3>() = phi;
  return xi;
}

Scan::Scan(std::vector<Vec3> raw_points, std::int64_t id) : frame_id(id) {
  points.reserve(raw_points.size());
  for (const Vec3& p : raw_points) {
    if (!p.allFinite()) continue;
    if (p.norm() < kMinPointRange) continue;
    points.push_back(p);
  }
}

}  // namespace cellmap
