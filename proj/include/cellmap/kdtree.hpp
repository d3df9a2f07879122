#pragma once

// Exact static kd-tree over 3-D points. Written here rather than pulled in as
// a dependency because queries must reproduce the linear-scan result bit for
// bit, including the tie rule (equal squared distance -> lowest point index),
// which off-the-shelf trees do not guarantee.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "cellmap/geometry.hpp"

namespace cellmap {

class KdTree3 {
 public:
  KdTree3() = default;

  // Builds a balanced tree; `points` is copied and kept for leaf scans.
  explicit KdTree3(std::vector<Vec3> points);

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }

  // Index of the point nearest to `query` (ties: lowest index). The tree must
  // be non-empty. Thread-safe for concurrent queries.
  std::uint32_t nearest(const Vec3& query) const;

  // Same result as nearest(), by exhaustive scan. Used as a cross-check.
  std::uint32_t nearest_linear(const Vec3& query) const;

 private:
  struct Node {
    double split = 0.0;
    std::int32_t axis = -1;        // -1 marks a leaf
    std::uint32_t left = 0;        // child node ids, or [begin,end) into order_ at leaves
    std::uint32_t right = 0;
  };

  struct Best {
    double dist2;
    std::uint32_t index;
  };

  std::uint32_t build(std::uint32_t begin, std::uint32_t end);
  void search(std::uint32_t node_id, const Vec3& query, Best& best) const;
  void scan_range(std::uint32_t begin, std::uint32_t end, const Vec3& query, Best& best) const;

  static constexpr std::uint32_t kLeafSize = 16;

  std::vector<Vec3> points_;
  std::vector<std::uint32_t> order_;  // point indices, permuted by build
  std::vector<Node> nodes_;
  std::uint32_t root_ = 0;
};

}  // namespace cellmap
