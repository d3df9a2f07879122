#include "cellmap/cellmap_io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "cellmap/errors.hpp"

namespace cellmap {

namespace {

void put_bytes(std::vector<char>& buf, const void* src, std::size_t n) {
  const char* p = static_cast<const char*>(src);
  buf.insert(buf.end(), p, p + n);
}

void put_u16(std::vector<char>& buf, std::uint16_t v) {
  char b[2] = {static_cast<char>(v & 0xff), static_cast<char>(v >> 8)};
  put_bytes(buf, b, 2);
}

void put_u32(std::vector<char>& buf, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  put_bytes(buf, b, 4);
}

void put_f32(std::vector<char>& buf, float v) { put_u32(buf, std::bit_cast<std::uint32_t>(v)); }

void put_f64(std::vector<char>& buf, double v) {
  const std::uint64_t u = std::bit_cast<std::uint64_t>(v);
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((u >> (8 * i)) & 0xff);
  put_bytes(buf, b, 8);
}

struct Cursor {
  const char* p;
  const char* end;

  void need(std::size_t n) const {
    if (static_cast<std::size_t>(end - p) < n) throw FormatError("map file truncated");
  }
  std::uint16_t u16() {
    need(2);
    std::uint16_t v = static_cast<std::uint8_t>(p[0]) |
                      (static_cast<std::uint16_t>(static_cast<std::uint8_t>(p[1])) << 8);
    p += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(p[i])) << (8 * i);
    p += 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() {
    std::uint64_t v = 0;
    need(8);
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(p[i])) << (8 * i);
    p += 8;
    return std::bit_cast<double>(v);
  }
};

void validate_cell(const Cell& cell, std::uint32_t n_sp, const char* what) {
  if (cell.n_sp != n_sp) throw LatticeMismatchError(std::string(what) + ": cell n_sp mismatch");
  std::int64_t prev = -1;
  for (const auto& [j, entry] : cell.entries) {
    if (static_cast<std::int64_t>(j) <= prev)
      throw FormatError(std::string(what) + ": entry indices not strictly ascending");
    if (j >= n_sp) throw FormatError(std::string(what) + ": entry index out of range");
    if (!(entry.distance > 0.0) || !std::isfinite(entry.distance))
      throw FormatError(std::string(what) + ": non-positive plane distance");
    if (!entry.normal.allFinite())
      throw FormatError(std::string(what) + ": non-finite plane normal");
    prev = j;
  }
}

}  // namespace

std::uint64_t serialized_size(const CellMap& map) {
  std::uint64_t total = 14;
  for (const Cell& cell : map.cells) total += 64 + 20ull * cell.entries.size();
  return total;
}

void save_cellmap(const CellMap& map, const std::string& path) {
  if (map.cells.size() != map.poses.size())
    throw IndexMismatchError("save_cellmap: cell/pose count mismatch");
  for (const Cell& cell : map.cells) validate_cell(cell, map.n_sp, "save_cellmap");

  std::vector<char> buf;
  buf.reserve(serialized_size(map));
  put_bytes(buf, "CMAP", 4);
  put_u16(buf, kMapFormatVersion);
  put_u32(buf, map.n_sp);
  put_u32(buf, static_cast<std::uint32_t>(map.cells.size()));

  for (std::size_t k = 0; k < map.cells.size(); ++k) {
    const Cell& cell = map.cells[k];
    const PoseSE3& pose = map.poses[k];
    put_u32(buf, cell.anchor_frame);
    put_f64(buf, pose.rotation.w());
    put_f64(buf, pose.rotation.x());
    put_f64(buf, pose.rotation.y());
    put_f64(buf, pose.rotation.z());
    put_f64(buf, pose.translation.x());
    put_f64(buf, pose.translation.y());
    put_f64(buf, pose.translation.z());
    put_u32(buf, static_cast<std::uint32_t>(cell.entries.size()));
    for (const auto& [j, entry] : cell.entries) put_u32(buf, j);
    for (const auto& [j, entry] : cell.entries) {
      put_f32(buf, static_cast<float>(entry.distance));
      put_f32(buf, static_cast<float>(entry.normal.x()));
      put_f32(buf, static_cast<float>(entry.normal.y()));
      put_f32(buf, static_cast<float>(entry.normal.z()));
    }
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("save_cellmap: cannot open " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("save_cellmap: write failed for " + path);
}

CellMap load_cellmap(const std::string& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw IoError("load_cellmap: cannot open " + path);
  const std::streamsize size = in.tellg();
  in.seekg(0);
  std::vector<char> buf(static_cast<std::size_t>(size));
  if (size > 0) in.read(buf.data(), size);
  if (!in) throw IoError("load_cellmap: read failed for " + path);

  Cursor cur{buf.data(), buf.data() + buf.size()};
  cur.need(4);
  if (std::memcmp(cur.p, "CMAP", 4) != 0) throw FormatError("load_cellmap: bad magic");
  cur.p += 4;
  const std::uint16_t version = cur.u16();
  if (version != kMapFormatVersion)
    throw FormatError("load_cellmap: unsupported version " + std::to_string(version));

  CellMap map;
  map.n_sp = cur.u32();
  if (map.n_sp == 0) throw FormatError("load_cellmap: n_sp is zero");
  const std::uint32_t cell_count = cur.u32();
  map.cells.reserve(cell_count);
  map.poses.reserve(cell_count);

  for (std::uint32_t k = 0; k < cell_count; ++k) {
    Cell cell;
    cell.n_sp = map.n_sp;
    cell.anchor_frame = cur.u32();
    const double qw = cur.f64(), qx = cur.f64(), qy = cur.f64(), qz = cur.f64();
    const double tx = cur.f64(), ty = cur.f64(), tz = cur.f64();
    const Eigen::Quaterniond q(qw, qx, qy, qz);
    if (std::abs(q.norm() - 1.0) > 1e-6)
      throw FormatError("load_cellmap: pose quaternion not unit");
    // Field assignment keeps the stored bits; the constructor would
    // renormalize and could flip the last ulp, breaking exact round-trips.
    PoseSE3 pose;
    pose.rotation = q;
    pose.translation = Vec3(tx, ty, tz);

    const std::uint32_t entry_count = cur.u32();
    cell.entries.reserve(entry_count);
    std::vector<std::uint32_t> indices(entry_count);
    for (std::uint32_t e = 0; e < entry_count; ++e) indices[e] = cur.u32();
    for (std::uint32_t e = 0; e < entry_count; ++e) {
      PlaneEntry entry;
      entry.distance = cur.f32();
      const float nx = cur.f32(), ny = cur.f32(), nz = cur.f32();
      entry.normal = Vec3(nx, ny, nz);
      cell.entries.emplace_back(indices[e], entry);
    }
    validate_cell(cell, map.n_sp, "load_cellmap");
    map.cells.push_back(std::move(cell));
    map.poses.push_back(pose);
  }
  if (cur.p != cur.end) throw FormatError("load_cellmap: trailing bytes");
  return map;
}

ReconstructedCloud reconstruct_cell_points(const Cell& cell, const Lattice& lattice,
                                           bool densify) {
  if (cell.n_sp != lattice.size())
    throw LatticeMismatchError("reconstruct_cell_points: cell/lattice size mismatch");
  ReconstructedCloud cloud;
  const double spacing = std::sqrt(4.0 * M_PI / lattice.size());
  const std::size_t per_entry = densify ? 17 : 1;
  cloud.points.reserve(cell.entries.size() * per_entry);
  cloud.normals.reserve(cell.entries.size() * per_entry);

  for (const auto& [j, entry] : cell.entries) {
    const Vec3 p0 = entry.distance * lattice.direction(j);
    cloud.points.push_back(p0);
    cloud.normals.push_back(entry.normal);
    if (!densify) continue;

    const Vec3 n = entry.normal;
    const Vec3 a = std::abs(n.x()) < 0.9 ? Vec3(1, 0, 0) : Vec3(0, 1, 0);
    const Vec3 e1 = n.cross(a).normalized();
    const Vec3 e2 = n.cross(e1);
    const double radius = spacing * entry.distance;
    for (double frac : {0.5, 1.0}) {
      for (int k = 0; k < 8; ++k) {
        const double ang = 2.0 * M_PI * k / 8.0 + (frac == 0.5 ? M_PI / 8.0 : 0.0);
        cloud.points.push_back(p0 + frac * radius * (std::cos(ang) * e1 + std::sin(ang) * e2));
        cloud.normals.push_back(n);
      }
    }
  }
  return cloud;
}

ReconstructedCloud reconstruct_map_points(const CellMap& map, const Lattice& lattice,
                                          bool densify) {
  ReconstructedCloud all;
  for (std::size_t k = 0; k < map.cells.size(); ++k) {
    ReconstructedCloud cloud = reconstruct_cell_points(map.cells[k], lattice, densify);
    const PoseSE3& pose = map.poses[k];
    const Mat3 R = pose.rotation_matrix();
    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
      all.points.push_back(pose * cloud.points[i]);
      all.normals.push_back(R * cloud.normals[i]);
    }
  }
  return all;
}

void write_ply(const std::string& path, const ReconstructedCloud& cloud) {
  if (cloud.points.size() != cloud.normals.size())
    throw IndexMismatchError("write_ply: point/normal count mismatch");
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("write_ply: cannot open " + path);
  out << "ply\nformat ascii 1.0\nelement vertex " << cloud.points.size()
      << "\nproperty float x\nproperty float y\nproperty float z\n"
         "property float nx\nproperty float ny\nproperty float nz\nend_header\n";
  char line[256];
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const Vec3& p = cloud.points[i];
    const Vec3& n = cloud.normals[i];
    std::snprintf(line, sizeof(line), "%.8g %.8g %.8g %.8g %.8g %.8g\n", p.x(), p.y(), p.z(),
                  n.x(), n.y(), n.z());
    out << line;
  }
  if (!out) throw IoError("write_ply: write failed for " + path);
}

}  // namespace cellmap
