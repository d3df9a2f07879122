#pragma once

// Dataset ingestion. Directory convention: point clouds as float32 x,y,z,
// intensity quadruples in NNNNNN.bin files (either directly in the dataset
// directory or under velodyne/), odometry poses as 3x4 row-major lines in
// poses.txt, optional ground truth in gt.txt.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cellmap/geometry.hpp"
#include "cellmap/trajectory.hpp"

namespace cellmap {

struct DatasetFrame {
  Scan scan;
  PoseSE3 pose;  // odometry prior, world frame
};

class DatasetReader {
 public:
  virtual ~DatasetReader() = default;
  // Frames in id order; nothing when exhausted.
  virtual std::optional<DatasetFrame> next() = 0;
};

struct KittiReaderOptions {
  bool rectify = false;
  double rectify_angle_deg = 0.205;  // sensor vertical-angle offset
  double downsample_voxel = 0.0;     // m, 0 disables
  std::size_t max_frames = 0;        // 0 keeps all
};

class KittiDirectoryReader : public DatasetReader {
 public:
  explicit KittiDirectoryReader(const std::string& directory, KittiReaderOptions options = {});
  std::optional<DatasetFrame> next() override;
  std::size_t frame_count() const { return files_.size(); }

 private:
  std::vector<std::string> files_;
  std::vector<std::int64_t> frame_ids_;
  std::vector<PoseSE3> poses_;
  KittiReaderOptions options_;
  std::size_t cursor_ = 0;
};

class InMemoryReader : public DatasetReader {
 public:
  InMemoryReader(std::vector<Scan> scans, std::vector<PoseSE3> poses);
  std::optional<DatasetFrame> next() override;

 private:
  std::vector<Scan> scans_;
  std::vector<PoseSE3> poses_;
  std::size_t cursor_ = 0;
};

// float32 x,y,z,intensity records; FormatError when the byte count is not a
// multiple of 16.
std::vector<Vec3> read_kitti_bin(const std::string& path);
void write_kitti_bin(const std::string& path, const std::vector<Vec3>& points);

// 3x4 row-major pose lines.
std::vector<PoseSE3> load_kitti_poses(const std::string& path);
void save_kitti_poses(const std::string& path, const std::vector<PoseSE3>& poses);

// Same text format; ids become 0..n-1 on load, and are dropped on save.
Trajectory load_trajectory(const std::string& path);
void save_trajectory(const std::string& path, const Trajectory& trajectory);

// Shifts every point's elevation angle, keeping range and azimuth.
std::vector<Vec3> rectify_vertical_angle(const std::vector<Vec3>& points, double delta_deg);

// Keeps the first point seen in each voxel; order-stable and exact.
std::vector<Vec3> voxel_downsample(const std::vector<Vec3>& points, double voxel);

}  // namespace cellmap
