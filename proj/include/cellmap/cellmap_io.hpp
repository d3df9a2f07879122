#pragma once

// Binary map serialization and point-cloud reconstruction/export.
//
// File layout, little-endian:
//   "CMAP"  u16 version=1  u32 n_sp  u32 cell_count
//   per cell:
//     u32 anchor_frame
//     f64 qw qx qy qz tx ty tz          (anchor pose, world frame)
//     u32 entry_count
//     u32 lattice_index * entry_count    (strictly ascending)
//     f32 (distance nx ny nz) * entry_count

#include <cstdint>
#include <string>
#include <vector>

#include "cellmap/cell.hpp"
#include "cellmap/lattice.hpp"

namespace cellmap {

inline constexpr std::uint16_t kMapFormatVersion = 1;

// Exact byte count save_cellmap will produce: 14 header bytes plus
// 64 + 20 * entry_count per cell.
std::uint64_t serialized_size(const CellMap& map);

// Throws IoError on filesystem failure, FormatError / IndexMismatchError /
// LatticeMismatchError on inconsistent input.
void save_cellmap(const CellMap& map, const std::string& path);

// Strict parser: validates magic, version, monotone entry indices, index
// bounds, positive finite distances and the absence of trailing bytes.
CellMap load_cellmap(const std::string& path);

struct ReconstructedCloud {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;  // unit, one per point
};

// Anchor-frame points implied by a cell: one point per entry at
// distance * direction. With densify, each entry additionally gets two rings
// of points on a disk of radius mean-angular-spacing * distance lying in the
// stored plane.
ReconstructedCloud reconstruct_cell_points(const Cell& cell, const Lattice& lattice,
                                           bool densify = false);

// Same, transformed to the world frame with each cell's anchor pose.
ReconstructedCloud reconstruct_map_points(const CellMap& map, const Lattice& lattice,
                                          bool densify = false);

// ASCII PLY with per-vertex normals.
void write_ply(const std::string& path, const ReconstructedCloud& cloud);

}  // namespace cellmap
