#pragma once

// Cell generation: converts a local point-cloud map, expressed in its anchor
// frame, into a sparse set of per-lattice-direction plane parameters
// (range along the direction ray + unit normal).

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "cellmap/geometry.hpp"
#include "cellmap/lattice.hpp"

namespace cellmap {

// One valid plane region: `distance` is the range at which the ray through
// the lattice direction meets the fitted plane, `normal` the plane's unit
// normal oriented toward the anchor origin.
struct PlaneEntry {
  double distance = 0.0;
  Vec3 normal{0.0, 0.0, 0.0};
};

struct CellGenParams {
  double gap_threshold = 3.0;             // adjacent-range gap that splits fg/bg, m
  std::uint32_t min_points_per_group = 5;
  double ransac_inlier_dist = 0.10;       // m
  std::uint32_t ransac_max_iters = 50;
  double ransac_min_inlier_fraction = 0.6;
  std::uint64_t seed = 0;                 // mixed with (anchor_frame, lattice index)
};

// Sparse map from lattice index to plane parameters. Entries are kept sorted
// by index; immutable once generated.
struct Cell {
  std::uint32_t n_sp = 0;
  std::uint32_t anchor_frame = 0;
  std::vector<std::pair<std::uint32_t, PlaneEntry>> entries;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }

  // Pointer to the entry at lattice index j, or nullptr.
  const PlaneEntry* find(std::uint32_t j) const;
};

// Ordered set of (cell, world pose) pairs; the global map.
struct CellMap {
  std::uint32_t n_sp = 0;
  std::vector<Cell> cells;
  std::vector<PoseSE3> poses;

  std::size_t size() const { return cells.size(); }
};

// Groups anchor-frame points by nearest lattice direction. Keys are lattice
// indices, values index into `points`. The groups partition the input.
// Throws EmptyMapError on empty input; points must have |p| > 0.
std::map<std::uint32_t, std::vector<std::uint32_t>> segment_map(
    const std::vector<Vec3>& points, const Lattice& lattice);

struct GapClusterResult {
  std::vector<Vec3> kept;  // foreground run, sorted by range
  bool valid = false;      // kept.size() >= min_points
};

// Sorts a direction group by range and truncates it at the first adjacent
// gap wider than `gap_threshold`, keeping the near (foreground) run.
GapClusterResult gap_cluster(const std::vector<Vec3>& group_points, double gap_threshold,
                             std::uint32_t min_points);

struct FittedPlane {
  Vec3 normal{0.0, 0.0, 0.0};  // unit, oriented so normal . centroid < 0
  double offset = 0.0;         // plane is { x : normal . x = offset }

  Vec3 point() const { return offset * normal; }
};

// RANSAC plane fit with least-squares refinement over the consensus set.
// Returns nothing when no sample reaches the inlier fraction. Deterministic
// for a fixed seed.
std::optional<FittedPlane> fit_plane(const std::vector<Vec3>& points,
                                     const CellGenParams& params, std::uint64_t seed);

// Range at which the ray through unit `direction` crosses the plane given by
// (normal, plane_point). Nothing when near-parallel or behind the origin.
std::optional<double> ray_plane_distance(const Vec3& normal, const Vec3& plane_point,
                                         const Vec3& direction);

// Full cell generation: moves the map into the anchor frame, segments it by
// lattice direction and runs gap clustering + plane fitting per group.
// Group processing is data-parallel. Throws EmptyMapError.
Cell generate_cell(const std::vector<Vec3>& local_map_world, const PoseSE3& anchor_pose,
                   std::uint32_t anchor_frame, const Lattice& lattice,
                   const CellGenParams& params);

// Seed for one group's RANSAC draw; splitmix64-style mix of the global seed,
// the anchor frame and the lattice index.
std::uint64_t group_seed(std::uint64_t global_seed, std::uint32_t anchor_frame,
                         std::uint32_t lattice_index);

}  // namespace cellmap
