#pragma once

// Pose graph over cell anchors: odometry / bidirectional-registration /
// loop-closure factors on SE(3), optimized by damped Gauss-Newton with a
// robust kernel on loop factors.

#include <cstdint>
#include <optional>
#include <vector>

#include "cellmap/cell.hpp"
#include "cellmap/geometry.hpp"
#include "cellmap/registration.hpp"

namespace cellmap {

enum class FactorKind { kOdometry, kBidirectional, kLoop };

struct PoseFactor {
  std::uint32_t from = 0;
  std::uint32_t to = 0;
  PoseSE3 measured;  // pose of `to` expressed in the `from` frame
  Eigen::Matrix<double, 6, 6> information = Eigen::Matrix<double, 6, 6>::Identity();
  FactorKind kind = FactorKind::kOdometry;
};

struct LoopParams {
  std::uint32_t n_loop = 10;           // candidates per query
  double inlier_ratio_threshold = 0.2; // acceptance gate after verification
  std::uint32_t exclusion_window = 10; // recent anchors skipped in the search
};

// Information matrix for odometry / bidirectional factors:
// diag(1/sigma_t^2, 1/sigma_r^2) with sigma_t = 0.1 m, sigma_r = 0.01 rad.
Eigen::Matrix<double, 6, 6> default_factor_information();

// Nearest anchors to `current` by translation distance, excluding indices in
// [current - exclusion_window, current]. At most n_loop results,
// nearest first; distance ties break toward the lower index.
std::vector<std::uint32_t> find_loop_candidates(const std::vector<PoseSE3>& anchor_poses,
                                                std::uint32_t current, const LoopParams& params);

// Registers the current scan against a candidate cell, seeded by the current
// pose estimates. Accepted when registration converges with inlier ratio at
// or above the threshold; the factor information is scaled by that ratio.
std::optional<PoseFactor> verify_loop(const Scan& current_scan, std::uint32_t current_index,
                                      const PoseSE3& current_pose, const Cell& candidate_cell,
                                      std::uint32_t candidate_index,
                                      const PoseSE3& candidate_pose, const Lattice& lattice,
                                      const RegistrationParams& reg_params,
                                      const LoopParams& loop_params);

struct PoseGraphOptions {
  std::uint32_t max_iterations = 50;
  double update_tolerance = 1e-8;
  double huber_delta_loop = 1.0;  // applied to loop factors only
};

struct PoseGraphResult {
  std::vector<PoseSE3> poses;
  std::vector<double> cost_history;  // accepted costs, non-increasing
  std::uint32_t iterations_run = 0;
};

// Optimizes all poses with node `fixed` held constant. Throws
// DisconnectedGraphError when some node is unreachable from the fixed one,
// SingularSystemError when the damped system cannot be solved.
PoseGraphResult optimize_pose_graph(const std::vector<PoseSE3>& initial_poses,
                                    const std::vector<PoseFactor>& factors, std::uint32_t fixed,
                                    const PoseGraphOptions& options = {});

// 6x6 adjoint of T acting on (rho, phi) twists.
Eigen::Matrix<double, 6, 6> se3_adjoint(const PoseSE3& transform);

// Inverse left Jacobian of SE(3) via the second-order expansion
// I - ad/2 + ad^2/12, accurate for the small residuals seen in a graph.
Eigen::Matrix<double, 6, 6> se3_left_jacobian_inverse_approx(const Twist& xi);

// Replaces the map poses with optimized ones; sizes must match
// (IndexMismatchError).
CellMap apply_optimized_poses(const CellMap& map, const std::vector<PoseSE3>& poses);

}  // namespace cellmap
