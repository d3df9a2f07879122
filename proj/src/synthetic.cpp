#include "cellmap/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cellmap/errors.hpp"
#include "cellmap/random.hpp"

namespace cellmap {

namespace {

ScenePlane rect(const Vec3& center, const Vec3& u, const Vec3& v, double half_u, double half_v) {
  ScenePlane p;
  p.center = center;
  p.u_axis = u;
  p.v_axis = v;
  p.half_u = half_u;
  p.half_v = half_v;
  return p;
}

const Vec3 kX{1.0, 0.0, 0.0};
const Vec3 kY{0.0, 1.0, 0.0};
const Vec3 kZ{0.0, 0.0, 1.0};

}  // namespace

SyntheticScene make_box_room(double size) {
  const double s = size / 2.0;
  SyntheticScene scene;
  scene.label = "box_room";
  scene.planes = {
      rect({+s, 0, 0}, kY, kZ, s, s), rect({-s, 0, 0}, kY, kZ, s, s),
      rect({0, +s, 0}, kX, kZ, s, s), rect({0, -s, 0}, kX, kZ, s, s),
      rect({0, 0, +s}, kX, kY, s, s), rect({0, 0, -s}, kX, kY, s, s),
  };
  return scene;
}

SyntheticScene make_corridor(double width, double height, double length) {
  const double hw = width / 2.0, hl = length / 2.0, hh = height / 2.0;
  SyntheticScene scene;
  scene.label = "corridor";
  scene.planes = {
      rect({0, +hw, hh}, kX, kZ, hl, hh),
      rect({0, -hw, hh}, kX, kZ, hl, hh),
      rect({0, 0, 0.0}, kX, kY, hl, hw),
      rect({0, 0, height}, kX, kY, hl, hw),
  };
  return scene;
}

SyntheticScene make_square_loop_world(double side, double corridor_width, double height) {
  const double outer = side / 2.0 + corridor_width / 2.0;
  const double inner = side / 2.0 - corridor_width / 2.0;
  const double hh = height / 2.0;
  SyntheticScene scene;
  scene.label = "square_loop_world";
  scene.planes = {
      rect({+outer, 0, hh}, kY, kZ, outer, hh), rect({-outer, 0, hh}, kY, kZ, outer, hh),
      rect({0, +outer, hh}, kX, kZ, outer, hh), rect({0, -outer, hh}, kX, kZ, outer, hh),
      rect({+inner, 0, hh}, kY, kZ, inner, hh), rect({-inner, 0, hh}, kY, kZ, inner, hh),
      rect({0, +inner, hh}, kX, kZ, inner, hh), rect({0, -inner, hh}, kX, kZ, inner, hh),
      rect({0, 0, 0.0}, kX, kY, outer, outer),
  };
  return scene;
}

SyntheticScene make_scene(SceneKind kind, const Vec3& dims) {
  switch (kind) {
    case SceneKind::kBoxRoom:
      return make_box_room(dims.x());
    case SceneKind::kCorridor:
      return make_corridor(dims.x(), dims.y(), dims.z());
    case SceneKind::kSquareLoopWorld:
    default:
      return make_square_loop_world(dims.x(), dims.y(), dims.z());
  }
}

std::vector<Vec3> ray_directions(const RayPattern& pattern) {
  std::vector<Vec3> dirs;
  dirs.reserve(static_cast<std::size_t>(pattern.rings) * pattern.azimuths);
  const double deg = M_PI / 180.0;
  for (std::uint32_t r = 0; r < pattern.rings; ++r) {
    const double f =
        pattern.rings > 1 ? static_cast<double>(r) / (pattern.rings - 1) : 0.5;
    const double elev =
        (pattern.elevation_min_deg + f * (pattern.elevation_max_deg - pattern.elevation_min_deg)) *
        deg;
    const double ce = std::cos(elev), se = std::sin(elev);
    for (std::uint32_t k = 0; k < pattern.azimuths; ++k) {
      const double az = 2.0 * M_PI * k / pattern.azimuths;
      dirs.emplace_back(ce * std::cos(az), ce * std::sin(az), se);
    }
  }
  return dirs;
}

std::optional<double> scene_ray_range(const SyntheticScene& scene, const Vec3& origin,
                                      const Vec3& direction) {
  double best = std::numeric_limits<double>::infinity();
  for (const ScenePlane& plane : scene.planes) {
    const Vec3 n = plane.normal();
    const double denom = n.dot(direction);
    if (std::abs(denom) < 1e-12) continue;
    const double t = (plane.offset() - n.dot(origin)) / denom;
    if (t <= 1e-6 || t >= best) continue;
    const Vec3 q = origin + t * direction - plane.center;
    if (std::abs(q.dot(plane.u_axis)) > plane.half_u + 1e-9) continue;
    if (std::abs(q.dot(plane.v_axis)) > plane.half_v + 1e-9) continue;
    best = t;
  }
  if (!std::isfinite(best)) return std::nullopt;
  return best;
}

double scene_plane_distance(const SyntheticScene& scene, const Vec3& point) {
  double best = std::numeric_limits<double>::infinity();
  for (const ScenePlane& plane : scene.planes)
    best = std::min(best, std::abs(plane.normal().dot(point) - plane.offset()));
  return best;
}

Scan raycast_scan(const SyntheticScene& scene, const PoseSE3& sensor_pose,
                  const RayPattern& pattern, double noise_sigma, std::uint64_t seed,
                  std::int64_t frame_id) {
  const Mat3 R = sensor_pose.rotation_matrix();
  const Vec3& origin = sensor_pose.translation;
  SplitMix64 rng(seed);
  std::vector<Vec3> points;
  const auto dirs = ray_directions(pattern);
  points.reserve(dirs.size());
  for (const Vec3& dir : dirs) {
    const auto range = scene_ray_range(scene, origin, R * dir);
    if (!range) continue;
    double r = *range;
    if (noise_sigma > 0.0) r += noise_sigma * std::clamp(rng.gaussian(), -3.0, 3.0);
    points.push_back(r * dir);
  }
  return Scan(std::move(points), frame_id);
}

Trajectory make_straight_trajectory(double length, double step, double height) {
  Trajectory traj;
  const std::int64_t n = static_cast<std::int64_t>(std::floor(length / step + 1e-9)) + 1;
  for (std::int64_t i = 0; i < n; ++i)
    traj.append(i, PoseSE3(Eigen::Quaterniond::Identity(), Vec3(i * step, 0.0, height)));
  return traj;
}

Trajectory make_square_trajectory(double side, double step, double height, double laps) {
  Trajectory traj;
  const double h = side / 2.0;
  const double perimeter = 4.0 * side;
  const std::int64_t n = static_cast<std::int64_t>(std::floor(perimeter * laps / step + 1e-9)) + 1;
  for (std::int64_t i = 0; i < n; ++i) {
    const double s = std::fmod(i * step, perimeter);
    const int edge = std::min(3, static_cast<int>(s / side));
    const double r = s - edge * side;
    Vec3 pos;
    double yaw = 0.0;
    switch (edge) {
      case 0: pos = Vec3(-h + r, -h, height); yaw = 0.0; break;
      case 1: pos = Vec3(+h, -h + r, height); yaw = M_PI / 2.0; break;
      case 2: pos = Vec3(+h - r, +h, height); yaw = M_PI; break;
      default: pos = Vec3(-h, +h - r, height); yaw = -M_PI / 2.0; break;
    }
    traj.append(i, PoseSE3(Eigen::Quaterniond(Eigen::AngleAxisd(yaw, kZ)), pos));
  }
  return traj;
}

Trajectory drift_odometry(const Trajectory& ground_truth, double trans_rate, double rot_rate,
                          std::uint64_t seed) {
  Trajectory out;
  if (ground_truth.size() == 0) return out;

  SplitMix64 rng(seed);
  const Vec3 bias_t = rng.unit_vec3();
  const Vec3 bias_r = rng.unit_vec3();

  out.append(ground_truth.frame_ids[0], ground_truth.poses[0]);
  for (std::size_t i = 1; i < ground_truth.size(); ++i) {
    const PoseSE3 rel = ground_truth.poses[i - 1].inverse() * ground_truth.poses[i];
    const double len = rel.translation.norm();
    Twist xi;
    xi.head<3>() = bias_t * (trans_rate * len) + rng.gaussian_vec3() * (0.2 * trans_rate * len);
    xi.tail<3>() = bias_r * (rot_rate * len) + rng.gaussian_vec3() * (0.2 * rot_rate * len);
    const PoseSE3 drifted_rel = rel * se3_exp(xi);
    out.append(ground_truth.frame_ids[i], out.poses.back() * drifted_rel);
  }
  return out;
}

}  // namespace cellmap
