#pragma once

#include <cstdint>
#include <vector>

#include "cellmap/errors.hpp"
#include "cellmap/geometry.hpp"

namespace cellmap {

// Pose sequence keyed by strictly increasing frame ids.
struct Trajectory {
  std::vector<std::int64_t> frame_ids;
  std::vector<PoseSE3> poses;

  std::size_t size() const { return poses.size(); }
  bool empty() const { return poses.empty(); }

  void append(std::int64_t frame_id, const PoseSE3& pose) {
    if (!frame_ids.empty() && frame_id <= frame_ids.back())
      throw IndexMismatchError("Trajectory::append: frame ids must increase");
    frame_ids.push_back(frame_id);
    poses.push_back(pose);
  }
};

}  // namespace cellmap
