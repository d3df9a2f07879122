#pragma once

// Trajectory accuracy metrics: rigid alignment + absolute error, and
// fixed-length relative segment errors over {100..800} m.

#include <vector>

#include "cellmap/geometry.hpp"
#include "cellmap/trajectory.hpp"

namespace cellmap {

// Rigid SE(3) transform G minimizing sum |G p_est - p_gt|^2 over positions
// matched by frame id (closed-form, unit scale). Throws
// DegenerateTrajectoryError when fewer than 3 ids match or the matched
// positions of either side are coincident.
PoseSE3 umeyama_align(const Trajectory& estimated, const Trajectory& ground_truth);

// RMSE of matched positions after umeyama_align.
double ate_rmse(const Trajectory& estimated, const Trajectory& ground_truth);

// Mean relative translation error over all segments of ground-truth length
// {100, 200, ..., 800} m starting at every matched frame, as a percentage.
// Throws TrajectoryTooShortError when no segment fits.
double kitti_relative_error(const Trajectory& estimated, const Trajectory& ground_truth);

// Matched positions as 3xN matrices, est columns aligned with gt columns.
std::pair<Eigen::Matrix3Xd, Eigen::Matrix3Xd> matched_positions(const Trajectory& estimated,
                                                                const Trajectory& ground_truth);

}  // namespace cellmap
