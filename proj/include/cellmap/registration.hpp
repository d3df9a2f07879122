#pragma once

// Scan-to-cell registration. Correspondences pair each scan point with the
// plane stored for its lattice direction; the residual is the point-to-plane
// distance and the pose is refined by damped Gauss-Newton on SE(3).

#include <cstdint>
#include <vector>

#include "cellmap/cell.hpp"
#include "cellmap/geometry.hpp"
#include "cellmap/lattice.hpp"

namespace cellmap {

struct Correspondence {
  Vec3 scan_point{0.0, 0.0, 0.0};  // sensor frame
  std::uint32_t lattice_index = 0;
  PlaneEntry plane;                // from the cell, anchor frame
};

struct RegistrationParams {
  std::uint32_t max_iterations = 4;
  double inlier_residual_threshold = 0.5;  // m
  double huber_delta = 0.3;                // m
  double damping = 1e-6;                   // scaled by trace(H)/6
  std::uint32_t min_correspondences = 50;
  double update_tolerance = 1e-6;          // |delta xi| convergence cutoff
};

struct RegistrationResult {
  PoseSE3 pose;               // refined scan-to-anchor transform
  double inlier_ratio = 0.0;  // inliers / scan point count
  double mean_residual = 0.0; // mean |r| over inliers, m
  bool converged = false;
  bool degenerate = false;    // normal equations had unconstrained directions
  std::uint32_t iterations_run = 0;
  std::vector<double> cost_history;  // robust cost per iteration, then final
};

// Pairs each transformed scan point with the cell entry of its lattice
// direction. Order follows the scan. Throws LatticeMismatchError when the
// cell and lattice sizes differ.
std::vector<Correspondence> find_correspondences(const Scan& scan, const PoseSE3& transform,
                                                 const Cell& cell, const Lattice& lattice);

// Signed point-to-plane distance of the transformed scan point against the
// plane reconstructed from the correspondence entry.
double point_to_plane_residual(const Correspondence& c, const PoseSE3& transform,
                               const Lattice& lattice);

// d r / d xi for the forward residual, xi = (rho, phi), left perturbation
// exp(xi) * T.
Eigen::Matrix<double, 1, 6> forward_jacobian_row(const Correspondence& c,
                                                 const PoseSE3& transform);

// Same for the reverse residual, where the point is moved by T^-1 and the
// derivative is still taken w.r.t. T.
Eigen::Matrix<double, 1, 6> reverse_jacobian_row(const Correspondence& c,
                                                 const PoseSE3& transform);

// Forward registration of a scan against one cell. Throws
// InsufficientCorrespondencesError / SingularNormalEquationsError.
RegistrationResult register_scan_to_cell(const Scan& scan, const Cell& cell,
                                         const PoseSE3& initial_guess, const Lattice& lattice,
                                         const RegistrationParams& params);

// Joint forward + reverse refinement of the relative pose of anchor b in
// anchor a: scan_b matches cell_a under T while scan_a matches cell_b under
// T^-1, both residual sets sharing one normal system.
RegistrationResult bidirectional_register(const Cell& cell_a, const Scan& scan_a,
                                          const Cell& cell_b, const Scan& scan_b,
                                          const PoseSE3& initial_guess, const Lattice& lattice,
                                          const RegistrationParams& params);

}  // namespace cellmap
