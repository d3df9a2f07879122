#pragma once

// Synthetic planar worlds with an exact ray-cast sensor model, used as
// ground-truth oracles for mapping and registration tests.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cellmap/geometry.hpp"
#include "cellmap/trajectory.hpp"

namespace cellmap {

// Bounded rectangle: center +/- half_u * u_axis +/- half_v * v_axis,
// normal = u_axis x v_axis.
struct ScenePlane {
  Vec3 center{0.0, 0.0, 0.0};
  Vec3 u_axis{1.0, 0.0, 0.0};
  Vec3 v_axis{0.0, 1.0, 0.0};
  double half_u = 0.0;
  double half_v = 0.0;

  Vec3 normal() const { return u_axis.cross(v_axis); }
  double offset() const { return normal().dot(center); }
};

struct SyntheticScene {
  std::string label;
  std::vector<ScenePlane> planes;
};

enum class SceneKind { kBoxRoom, kCorridor, kSquareLoopWorld };

// Closed cuboid room centered at the origin; `size` is the full edge length
// on every axis, so faces sit at +/- size/2.
SyntheticScene make_box_room(double size);

// Straight corridor along +x: two walls at y = +/- width/2, floor z = 0,
// ceiling z = height, extent x in [-length/2, length/2].
SyntheticScene make_corridor(double width, double height, double length);

// Square ring corridor for loop closure runs: the path square has the given
// side; inner and outer walls sit half a corridor width to each side, plus a
// floor spanning everything. Walls rise from z = 0 to `height`.
SyntheticScene make_square_loop_world(double side, double corridor_width = 10.0,
                                      double height = 6.0);

// dims: box_room uses x as size; corridor uses (width, height, length);
// square loop uses (side, corridor_width, height).
SyntheticScene make_scene(SceneKind kind, const Vec3& dims);

struct RayPattern {
  std::uint32_t rings = 64;
  std::uint32_t azimuths = 1024;
  double elevation_min_deg = -25.0;
  double elevation_max_deg = 25.0;
};

// Unit directions in the sensor frame, ring-major.
std::vector<Vec3> ray_directions(const RayPattern& pattern);

// Casts every pattern ray from the pose through the scene, keeping the
// nearest bounded-face hit. Gaussian range noise with the given sigma,
// clipped to +/-3 sigma so every return stays within a hard band of the true
// surface, is applied along the ray; misses are dropped. Deterministic per
// seed.
Scan raycast_scan(const SyntheticScene& scene, const PoseSE3& sensor_pose,
                  const RayPattern& pattern, double noise_sigma, std::uint64_t seed,
                  std::int64_t frame_id);

// Nearest hit range for one world-space ray, infinite planes clipped to
// their rectangles. Nothing on a miss.
std::optional<double> scene_ray_range(const SyntheticScene& scene, const Vec3& origin,
                                      const Vec3& direction);

// Unsigned distance from a world point to the closest infinite plane through
// a scene face.
double scene_plane_distance(const SyntheticScene& scene, const Vec3& point);

// Straight line along +x in steps of `step`, yaw fixed at zero.
Trajectory make_straight_trajectory(double length, double step, double height);

// Counter-clockwise circuit of a square of the given side, centered at the
// origin, yaw following the direction of travel. `laps` may be fractional.
Trajectory make_square_trajectory(double side, double step, double height, double laps = 1.0);

// Corrupts ground truth into odometry: each relative step is composed with a
// run-constant random drift direction scaled by step length (trans_rate,
// rot_rate are per meter) plus small seeded jitter.
Trajectory drift_odometry(const Trajectory& ground_truth, double trans_rate, double rot_rate,
                          std::uint64_t seed);

}  // namespace cellmap
