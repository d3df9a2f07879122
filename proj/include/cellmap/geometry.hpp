#pragma once

// Core geometric types: 3-D vectors, SE(3) poses stored as quaternion +
// translation, se(3) twists and their exponential/logarithm maps, and the
// range-filtered LiDAR scan container.

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstdint>
#include <vector>

namespace cellmap {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// se(3) increment, translation part first: xi = (rho_x, rho_y, rho_z, phi_x, phi_y, phi_z).
using Twist = Eigen::Matrix<double, 6, 1>;

// Points closer than this to the sensor are discarded at Scan construction
// (self-returns; also keeps the spherical projection well conditioned).
inline constexpr double kMinPointRange = 0.5;

// Below this rotation magnitude exp/log switch to their Taylor branches.
inline constexpr double kSmallAngle = 1e-8;

// Skew-symmetric matrix [v]x with [v]x * u = v x u.
Mat3 skew(const Vec3& v);

// Rigid transform. The quaternion is kept unit-norm (w >= 0) and the type is
// treated as an immutable value after construction.
struct PoseSE3 {
  Eigen::Quaterniond rotation{1.0, 0.0, 0.0, 0.0};
  Vec3 translation{0.0, 0.0, 0.0};

  PoseSE3() = default;
  PoseSE3(const Eigen::Quaterniond& q, const Vec3& t);

  static PoseSE3 identity() { return {}; }

  Mat3 rotation_matrix() const { return rotation.toRotationMatrix(); }
  Eigen::Matrix4d matrix() const;

  PoseSE3 inverse() const;

  // Composition; result is renormalized.
  PoseSE3 operator*(const PoseSE3& other) const;

  // R * p + t
  Vec3 operator*(const Vec3& p) const { return rotation * p + translation; }

  // Rotation angle in [0, pi].
  double rotation_angle() const;
};

inline Vec3 transform_point(const PoseSE3& pose, const Vec3& p) { return pose * p; }

// Closed-form exponential map. Rotation via Rodrigues from the phi block,
// translation via the SO(3) left Jacobian applied to the rho block.
PoseSE3 se3_exp(const Twist& xi);

// Inverse of se3_exp. Throws AngleNearPiError for rotation angles within
// 1e-6 of pi, where the axis is not recoverable to full precision.
Twist se3_log(const PoseSE3& pose);

// Angle of the relative rotation between two poses, radians.
double rotation_angle_between(const PoseSE3& a, const PoseSE3& b);

// One LiDAR frame in its sensor coordinate system. Construction drops
// non-finite points and points with range below kMinPointRange.
struct Scan {
  std::vector<Vec3> points;
  std::int64_t frame_id = 0;

  Scan() = default;
  Scan(std::vector<Vec3> raw_points, std::int64_t id);
};

}  // namespace cellmap
