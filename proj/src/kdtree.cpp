#include "cellmap/kdtree.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace cellmap {

KdTree3::KdTree3(std::vector<Vec3> points) : points_(std::move(points)) {
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0u);
  if (!points_.empty()) {
    nodes_.reserve(2 * points_.size() / kLeafSize + 2);
    root_ = build(0, static_cast<std::uint32_t>(points_.size()));
  }
}

std::uint32_t KdTree3::build(std::uint32_t begin, std::uint32_t end) {
  const std::uint32_t id = static_cast<std::uint32_t>(nodes_.size());
  nodes_.emplace_back();

  if (end - begin <= kLeafSize) {
    nodes_[id].axis = -1;
    nodes_[id].left = begin;
    nodes_[id].right = end;
    return id;
  }

  // Split along the axis with the widest extent over this subrange.
  Vec3 lo = points_[order_[begin]];
  Vec3 hi = lo;
  for (std::uint32_t i = begin + 1; i < end; ++i) {
    lo = lo.cwiseMin(points_[order_[i]]);
    hi = hi.cwiseMax(points_[order_[i]]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);

  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     return points_[a][axis] < points_[b][axis];
                   });

  nodes_[id].axis = axis;
  nodes_[id].split = points_[order_[mid]][axis];
  const std::uint32_t left = build(begin, mid);
  const std::uint32_t right = build(mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void KdTree3::scan_range(std::uint32_t begin, std::uint32_t end, const Vec3& query,
                         Best& best) const {
  for (std::uint32_t i = begin; i < end; ++i) {
    const std::uint32_t idx = order_[i];
    const double d2 = (points_[idx] - query).squaredNorm();
    if (d2 < best.dist2 || (d2 == best.dist2 && idx < best.index)) {
      best.dist2 = d2;
      best.index = idx;
    }
  }
}

void KdTree3::search(std::uint32_t node_id, const Vec3& query, Best& best) const {
  const Node& node = nodes_[node_id];
  if (node.axis < 0) {
    scan_range(node.left, node.right, query, best);
    return;
  }

  const double diff = query[node.axis] - node.split;
  const std::uint32_t near = diff < 0.0 ? node.left : node.right;
  const std::uint32_t far = diff < 0.0 ? node.right : node.left;

  search(near, query, best);
  // Descend on equality too: an equidistant point with a lower index may sit
  // exactly on the slab boundary.
  if (diff * diff <= best.dist2) search(far, query, best);
}

std::uint32_t KdTree3::nearest(const Vec3& query) const {
  Best best{std::numeric_limits<double>::infinity(),
            std::numeric_limits<std::uint32_t>::max()};
  search(root_, query, best);
  return best.index;
}

std::uint32_t KdTree3::nearest_linear(const Vec3& query) const {
  Best best{std::numeric_limits<double>::infinity(),
            std::numeric_limits<std::uint32_t>::max()};
  for (std::uint32_t idx = 0; idx < points_.size(); ++idx) {
    const double d2 = (points_[idx] - query).squaredNorm();
    if (d2 < best.dist2 || (d2 == best.dist2 && idx < best.index)) {
      best.dist2 = d2;
      best.index = idx;
    }
  }
  return best.index;
}

}  // namespace cellmap
