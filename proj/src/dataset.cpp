#include "cellmap/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "cellmap/errors.hpp"

namespace fs = std::filesystem;

namespace cellmap {

namespace {

std::vector<char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw IoError("cannot open " + path);
  const std::streamsize size = in.tellg();
  in.seekg(0);
  std::vector<char> buf(static_cast<std::size_t>(size));
  if (size > 0) in.read(buf.data(), size);
  if (!in) throw IoError("read failed for " + path);
  return buf;
}

PoseSE3 parse_pose_line(const std::string& line, std::size_t line_no, const std::string& path) {
  std::istringstream ss(line);
  double m[12];
  for (int i = 0; i < 12; ++i)
    if (!(ss >> m[i]))
      throw FormatError(path + ":" + std::to_string(line_no) + ": expected 12 numbers");
  Mat3 R;
  R << m[0], m[1], m[2], m[4], m[5], m[6], m[8], m[9], m[10];
  return PoseSE3(Eigen::Quaterniond(R), Vec3(m[3], m[7], m[11]));
}

std::int64_t numeric_stem(const fs::path& p, std::int64_t fallback) {
  const std::string stem = p.stem().string();
  if (stem.empty() || !std::all_of(stem.begin(), stem.end(),
                                   [](char c) { return c >= '0' && c <= '9'; }))
    return fallback;
  return std::stoll(stem);
}

}  // namespace

std::vector<Vec3> read_kitti_bin(const std::string& path) {
  const std::vector<char> buf = read_file(path);
  if (buf.size() % 16 != 0)
    throw FormatError(path + ": size is not a multiple of 16 bytes");
  const std::size_t n = buf.size() / 16;
  std::vector<Vec3> points;
  points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    float f[4];
    std::memcpy(f, buf.data() + i * 16, 16);
    points.emplace_back(f[0], f[1], f[2]);
  }
  return points;
}

void write_kitti_bin(const std::string& path, const std::vector<Vec3>& points) {
  std::vector<char> buf;
  buf.reserve(points.size() * 16);
  for (const Vec3& p : points) {
    const float f[4] = {static_cast<float>(p.x()), static_cast<float>(p.y()),
                        static_cast<float>(p.z()), 0.0f};
    const char* raw = reinterpret_cast<const char*>(f);
    buf.insert(buf.end(), raw, raw + 16);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("write_kitti_bin: cannot open " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("write_kitti_bin: write failed for " + path);
}

std::vector<PoseSE3> load_kitti_poses(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_kitti_poses: cannot open " + path);
  std::vector<PoseSE3> poses;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    poses.push_back(parse_pose_line(line, line_no, path));
  }
  return poses;
}

void save_kitti_poses(const std::string& path, const std::vector<PoseSE3>& poses) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("save_kitti_poses: cannot open " + path);
  char line[512];
  for (const PoseSE3& pose : poses) {
    const Mat3 R = pose.rotation_matrix();
    const Vec3& t = pose.translation;
    std::snprintf(line, sizeof(line),
                  "%.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g\n",
                  R(0, 0), R(0, 1), R(0, 2), t.x(), R(1, 0), R(1, 1), R(1, 2), t.y(), R(2, 0),
                  R(2, 1), R(2, 2), t.z());
    out << line;
  }
  if (!out) throw IoError("save_kitti_poses: write failed for " + path);
}

Trajectory load_trajectory(const std::string& path) {
  Trajectory traj;
  const auto poses = load_kitti_poses(path);
  for (std::size_t i = 0; i < poses.size(); ++i)
    traj.append(static_cast<std::int64_t>(i), poses[i]);
  return traj;
}

void save_trajectory(const std::string& path, const Trajectory& trajectory) {
  save_kitti_poses(path, trajectory.poses);
}

std::vector<Vec3> rectify_vertical_angle(const std::vector<Vec3>& points, double delta_deg) {
  const double delta = delta_deg * M_PI / 180.0;
  std::vector<Vec3> out;
  out.reserve(points.size());
  for (const Vec3& p : points) {
    const double r = p.norm();
    if (r < 1e-12) {
      out.push_back(p);
      continue;
    }
    const double az = std::atan2(p.y(), p.x());
    const double elev = std::asin(std::clamp(p.z() / r, -1.0, 1.0)) + delta;
    out.emplace_back(r * std::cos(elev) * std::cos(az), r * std::cos(elev) * std::sin(az),
                     r * std::sin(elev));
  }
  return out;
}

std::vector<Vec3> voxel_downsample(const std::vector<Vec3>& points, double voxel) {
  if (voxel <= 0.0) return points;
  struct KeyHash {
    std::size_t operator()(const std::array<std::int64_t, 3>& k) const {
      std::uint64_t h = 0xcbf29ce484222325ull;
      for (std::int64_t v : k) {
        h ^= static_cast<std::uint64_t>(v);
        h *= 0x100000001b3ull;
      }
      return static_cast<std::size_t>(h);
    }
  };
  std::unordered_map<std::array<std::int64_t, 3>, char, KeyHash> seen;
  seen.reserve(points.size());
  std::vector<Vec3> out;
  for (const Vec3& p : points) {
    const std::array<std::int64_t, 3> key = {static_cast<std::int64_t>(std::floor(p.x() / voxel)),
                                             static_cast<std::int64_t>(std::floor(p.y() / voxel)),
                                             static_cast<std::int64_t>(std::floor(p.z() / voxel))};
    if (seen.emplace(key, 1).second) out.push_back(p);
  }
  return out;
}

KittiDirectoryReader::KittiDirectoryReader(const std::string& directory,
                                           KittiReaderOptions options)
    : options_(options) {
  const fs::path root(directory);
  if (!fs::is_directory(root)) throw IoError("dataset directory not found: " + directory);

  fs::path scan_dir = root;
  if (fs::is_directory(root / "velodyne")) scan_dir = root / "velodyne";
  std::vector<fs::path> bins;
  for (const auto& e : fs::directory_iterator(scan_dir))
    if (e.is_regular_file() && e.path().extension() == ".bin") bins.push_back(e.path());
  std::sort(bins.begin(), bins.end());
  if (options_.max_frames > 0 && bins.size() > options_.max_frames)
    bins.resize(options_.max_frames);
  if (bins.empty()) throw EmptyDatasetError("no .bin scans under " + directory);

  const fs::path pose_file = root / "poses.txt";
  if (!fs::is_regular_file(pose_file))
    throw MissingPoseError("poses.txt not found under " + directory);
  poses_ = load_kitti_poses(pose_file.string());
  if (poses_.size() < bins.size())
    throw MissingPoseError("poses.txt has " + std::to_string(poses_.size()) + " poses for " +
                           std::to_string(bins.size()) + " scans");

  files_.reserve(bins.size());
  frame_ids_.reserve(bins.size());
  for (std::size_t i = 0; i < bins.size(); ++i) {
    files_.push_back(bins[i].string());
    frame_ids_.push_back(numeric_stem(bins[i], static_cast<std::int64_t>(i)));
  }
}

std::optional<DatasetFrame> KittiDirectoryReader::next() {
  if (cursor_ >= files_.size()) return std::nullopt;
  const std::size_t i = cursor_++;
  std::vector<Vec3> points = read_kitti_bin(files_[i]);
  if (options_.rectify) points = rectify_vertical_angle(points, options_.rectify_angle_deg);
  if (options_.downsample_voxel > 0.0) points = voxel_downsample(points, options_.downsample_voxel);
  return DatasetFrame{Scan(std::move(points), frame_ids_[i]), poses_[i]};
}

InMemoryReader::InMemoryReader(std::vector<Scan> scans, std::vector<PoseSE3> poses)
    : scans_(std::move(scans)), poses_(std::move(poses)) {
  if (scans_.size() != poses_.size())
    throw IndexMismatchError("InMemoryReader: scan/pose count mismatch");
}

std::optional<DatasetFrame> InMemoryReader::next() {
  if (cursor_ >= scans_.size()) return std::nullopt;
  const std::size_t i = cursor_++;
  return DatasetFrame{scans_[i], poses_[i]};
}

}  // namespace cellmap
