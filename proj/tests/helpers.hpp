#pragma once

// Shared helpers for the test suites: seeded random poses, error metrics, and
// analytic scene cells.

#include <cmath>

#include "cellmap/cell.hpp"
#include "cellmap/geometry.hpp"
#include "cellmap/lattice.hpp"
#include "cellmap/random.hpp"
#include "cellmap/synthetic.hpp"

namespace cellmap::testing {

inline Vec3 random_vec(SplitMix64& rng, double scale) {
  return Vec3(rng.uniform01() * 2.0 - 1.0, rng.uniform01() * 2.0 - 1.0,
              rng.uniform01() * 2.0 - 1.0) *
         scale;
}

inline PoseSE3 random_pose(SplitMix64& rng, double translation_scale, double max_angle) {
  const Vec3 axis = rng.unit_vec3();
  const double angle = (rng.uniform01() * 2.0 - 1.0) * max_angle;
  return PoseSE3(Eigen::Quaterniond(Eigen::AngleAxisd(angle, axis)),
                 random_vec(rng, translation_scale));
}

// Perturbs a pose by a given translation magnitude and rotation angle in a
// seeded random direction (left-composed).
inline PoseSE3 perturb_pose(const PoseSE3& pose, SplitMix64& rng, double translation,
                            double angle) {
  const PoseSE3 delta(Eigen::Quaterniond(Eigen::AngleAxisd(angle, rng.unit_vec3())),
                      rng.unit_vec3() * translation);
  return delta * pose;
}

inline double translation_error(const PoseSE3& a, const PoseSE3& b) {
  return (a.translation - b.translation).norm();
}

inline double rotation_error_rad(const PoseSE3& a, const PoseSE3& b) {
  return rotation_angle_between(a, b);
}

inline double rotation_error_deg(const PoseSE3& a, const PoseSE3& b) {
  return rotation_error_rad(a, b) * 180.0 / M_PI;
}

// Combined pose error |log(a^-1 b)|.
inline double pose_error(const PoseSE3& a, const PoseSE3& b) {
  return se3_log(a.inverse() * b).norm();
}

// Rounds through a genuine 32-bit store; a plain static_cast<float> in an
// argument list can keep excess precision under optimization.
inline double f32q(double x) {
  volatile float f = static_cast<float>(x);
  return f;
}

// Random map whose floating-point payload is f32-quantized, so the in-memory
// values survive the f32 file fields exactly.
inline CellMap random_f32_map(SplitMix64& rng, std::uint32_t n_sp, std::uint32_t max_cells) {
  CellMap map;
  map.n_sp = n_sp;
  const std::uint32_t cells = rng.below(max_cells + 1);
  for (std::uint32_t k = 0; k < cells; ++k) {
    Cell cell;
    cell.n_sp = n_sp;
    cell.anchor_frame = rng.below(100000);
    const std::uint32_t entries = rng.below(200);
    std::uint32_t j = rng.below(5);
    for (std::uint32_t e = 0; e < entries && j < n_sp; ++e) {
      PlaneEntry entry;
      entry.distance = f32q(0.1 + 80.0 * rng.uniform01());
      const Vec3 n = rng.unit_vec3();
      entry.normal = Vec3(f32q(n.x()), f32q(n.y()), f32q(n.z()));
      cell.entries.emplace_back(j, entry);
      j += 1 + rng.below(static_cast<std::uint32_t>(n_sp / entries + 1));
    }
    map.cells.push_back(std::move(cell));
    map.poses.push_back(random_pose(rng, 50.0, 3.0));
  }
  return map;
}

inline bool cellmaps_equal(const CellMap& a, const CellMap& b) {
  if (a.n_sp != b.n_sp || a.cells.size() != b.cells.size()) return false;
  for (std::size_t k = 0; k < a.cells.size(); ++k) {
    const Cell& ca = a.cells[k];
    const Cell& cb = b.cells[k];
    if (ca.n_sp != cb.n_sp || ca.anchor_frame != cb.anchor_frame) return false;
    if (ca.entries.size() != cb.entries.size()) return false;
    for (std::size_t e = 0; e < ca.entries.size(); ++e) {
      if (ca.entries[e].first != cb.entries[e].first) return false;
      if (ca.entries[e].second.distance != cb.entries[e].second.distance) return false;
      if (ca.entries[e].second.normal != cb.entries[e].second.normal) return false;
    }
    if (a.poses[k].rotation.coeffs() != b.poses[k].rotation.coeffs()) return false;
    if (a.poses[k].translation != b.poses[k].translation) return false;
  }
  return true;
}

// Analytic cell for a scene viewed from `viewpoint`: one exact entry per
// lattice direction that hits a face. Independent of generate_cell.
inline Cell make_scene_cell(const SyntheticScene& scene, const Lattice& lattice,
                            const Vec3& viewpoint = Vec3::Zero()) {
  Cell cell;
  cell.n_sp = lattice.size();
  for (std::uint32_t j = 0; j < lattice.size(); ++j) {
    const Vec3 dir = lattice.direction(j);
    const auto range = scene_ray_range(scene, viewpoint, dir);
    if (!range) continue;
    const Vec3 hit = viewpoint + *range * dir;
    Vec3 normal = Vec3::Zero();
    double best = 1e9;
    for (const ScenePlane& plane : scene.planes) {
      const double miss = std::abs(plane.normal().dot(hit - plane.center));
      if (miss < best) {
        best = miss;
        normal = plane.normal();
      }
    }
    if (normal.dot(dir) > 0.0) normal = -normal;
    cell.entries.emplace_back(j, PlaneEntry{*range, normal});
  }
  return cell;
}

// Corridor along x with end caps so every direction is observable.
inline SyntheticScene make_capped_corridor(double width, double height, double length) {
  SyntheticScene scene = make_corridor(width, height, length);
  ScenePlane cap;
  cap.u_axis = Vec3(0, 1, 0);
  cap.v_axis = Vec3(0, 0, 1);
  cap.half_u = width / 2.0;
  cap.half_v = height / 2.0;
  cap.center = Vec3(length / 2.0, 0, height / 2.0);
  scene.planes.push_back(cap);
  cap.center = Vec3(-length / 2.0, 0, height / 2.0);
  scene.planes.push_back(cap);
  return scene;
}

inline SyntheticScene rotate_scene(const SyntheticScene& scene, const Mat3& R) {
  SyntheticScene out = scene;
  for (ScenePlane& p : out.planes) {
    p.center = R * p.center;
    p.u_axis = R * p.u_axis;
    p.v_axis = R * p.v_axis;
  }
  return out;
}

}  // namespace cellmap::testing
