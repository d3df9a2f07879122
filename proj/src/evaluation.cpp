#include "cellmap/evaluation.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

namespace cellmap {

namespace {

// Index pairs (est, gt) of frames present in both trajectories.
std::vector<std::pair<std::size_t, std::size_t>> matched_indices(const Trajectory& est,
                                                                 const Trajectory& gt) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t a = 0, b = 0;
  while (a < est.size() && b < gt.size()) {
    if (est.frame_ids[a] == gt.frame_ids[b]) {
      out.emplace_back(a, b);
      ++a;
      ++b;
    } else if (est.frame_ids[a] < gt.frame_ids[b]) {
      ++a;
    } else {
      ++b;
    }
  }
  return out;
}

// Only coincident point sets are rejected. Collinear trajectories leave the
// rotation underdetermined about the line axis, but every minimizer gives
// the same residuals, so alignment-based metrics stay well defined.
void check_not_coincident(const Eigen::Matrix3Xd& pts, const char* side) {
  const Eigen::Vector3d mean = pts.rowwise().mean();
  const Eigen::Matrix3Xd centered = pts.colwise() - mean;
  if (centered.colwise().norm().maxCoeff() <= 1e-12)
    throw DegenerateTrajectoryError(std::string("umeyama_align: ") + side +
                                    " positions are coincident");
}

}  // namespace

std::pair<Eigen::Matrix3Xd, Eigen::Matrix3Xd> matched_positions(const Trajectory& estimated,
                                                                const Trajectory& ground_truth) {
  const auto idx = matched_indices(estimated, ground_truth);
  Eigen::Matrix3Xd est(3, idx.size()), gt(3, idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    est.col(k) = estimated.poses[idx[k].first].translation;
    gt.col(k) = ground_truth.poses[idx[k].second].translation;
  }
  return {est, gt};
}

PoseSE3 umeyama_align(const Trajectory& estimated, const Trajectory& ground_truth) {
  auto [est, gt] = matched_positions(estimated, ground_truth);
  if (est.cols() < 3)
    throw DegenerateTrajectoryError("umeyama_align: fewer than 3 matched frames");
  check_not_coincident(est, "estimated");
  check_not_coincident(gt, "ground-truth");

  const Eigen::Matrix4d M = Eigen::umeyama(est, gt, false);
  Eigen::Quaterniond q(M.topLeftCorner<3, 3>());
  return PoseSE3(q, M.topRightCorner<3, 1>());
}

double ate_rmse(const Trajectory& estimated, const Trajectory& ground_truth) {
  const PoseSE3 G = umeyama_align(estimated, ground_truth);
  auto [est, gt] = matched_positions(estimated, ground_truth);
  double sq = 0.0;
  for (Eigen::Index k = 0; k < est.cols(); ++k)
    sq += (G * Vec3(est.col(k)) - Vec3(gt.col(k))).squaredNorm();
  return std::sqrt(sq / est.cols());
}

double kitti_relative_error(const Trajectory& estimated, const Trajectory& ground_truth) {
  const auto idx = matched_indices(estimated, ground_truth);
  const std::size_t n = idx.size();

  std::vector<double> dist(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) {
    const Vec3 step = ground_truth.poses[idx[i].second].translation -
                      ground_truth.poses[idx[i - 1].second].translation;
    dist[i] = dist[i - 1] + step.norm();
  }

  const double lengths[] = {100, 200, 300, 400, 500, 600, 700, 800};
  double err_sum = 0.0;
  std::size_t segments = 0;
  for (std::size_t first = 0; first < n; ++first) {
    for (double len : lengths) {
      const auto it = std::upper_bound(dist.begin() + first, dist.end(), dist[first] + len);
      if (it == dist.end()) break;
      const std::size_t last = static_cast<std::size_t>(it - dist.begin());

      const PoseSE3 delta_gt = ground_truth.poses[idx[first].second].inverse() *
                               ground_truth.poses[idx[last].second];
      const PoseSE3 delta_est =
          estimated.poses[idx[first].first].inverse() * estimated.poses[idx[last].first];
      const PoseSE3 error = delta_est.inverse() * delta_gt;
      err_sum += error.translation.norm() / len;
      ++segments;
    }
  }
  if (segments == 0)
    throw TrajectoryTooShortError("kitti_relative_error: no 100 m segment fits");
  return 100.0 * err_sum / segments;
}

}  // namespace cellmap
