#include "cellmap/registration.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <string>
#include <tuple>

#include "cellmap/errors.hpp"
#include "cellmap/parallel.hpp"

namespace cellmap {

namespace {

using Mat6 = Eigen::Matrix<double, 6, 6>;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Row6 = Eigen::Matrix<double, 1, 6>;

struct NormalSystem {
  Mat6 H = Mat6::Zero();
  Vec6 g = Vec6::Zero();
  double cost = 0.0;

  void merge(const NormalSystem& other) {
    H += other.H;
    g += other.g;
    cost += other.cost;
  }
};

// Huber-weighted rank-one update for one residual row.
void add_row(NormalSystem& sys, double r, const Row6& J, double delta) {
  const double a = std::abs(r);
  double w = 1.0;
  if (a <= delta) {
    sys.cost += 0.5 * r * r;
  } else {
    w = delta / a;
    sys.cost += delta * (a - 0.5 * delta);
  }
  sys.H.noalias() += w * J.transpose() * J;
  sys.g.noalias() += w * J.transpose() * r;
}

template <typename RowFn>
NormalSystem accumulate_rows(const std::vector<Correspondence>& corr, double huber_delta,
                             RowFn&& row) {
  return parallel_reduce<NormalSystem>(
      corr.size(), NormalSystem{},
      [&](NormalSystem& acc, std::size_t i) {
        auto [r, J] = row(corr[i]);
        add_row(acc, r, J, huber_delta);
      },
      [](NormalSystem& total, const NormalSystem& part) { total.merge(part); });
}

// Unconstrained directions show up as eigenvalues that vanish relative to
// the largest one.
bool is_degenerate(const Mat6& H) {
  Eigen::SelfAdjointEigenSolver<Mat6> eig(H);
  const double max_ev = eig.eigenvalues()(5);
  if (!(max_ev > 0.0)) return true;
  return eig.eigenvalues()(0) < 1e-10 * max_ev;
}

Vec6 solve_damped(const NormalSystem& sys, double damping) {
  const double lambda = damping * sys.H.trace() / 6.0;
  Mat6 A = sys.H;
  A.diagonal().array() += lambda;
  Eigen::LDLT<Mat6> ldlt(A);
  if (ldlt.info() != Eigen::Success)
    throw SingularNormalEquationsError("registration: damped normal equations not solvable");
  Vec6 dx = ldlt.solve(-sys.g);
  if (!dx.allFinite())
    throw SingularNormalEquationsError("registration: non-finite update");
  return dx;
}

struct InlierStats {
  std::size_t inliers = 0;
  double abs_sum = 0.0;
};

template <typename ResidualFn>
InlierStats inlier_stats(const std::vector<Correspondence>& corr, double threshold,
                         ResidualFn&& residual) {
  return parallel_reduce<InlierStats>(
      corr.size(), InlierStats{},
      [&](InlierStats& acc, std::size_t i) {
        const double a = std::abs(residual(corr[i]));
        if (a < threshold) {
          ++acc.inliers;
          acc.abs_sum += a;
        }
      },
      [](InlierStats& total, const InlierStats& part) {
        total.inliers += part.inliers;
        total.abs_sum += part.abs_sum;
      });
}

double reverse_residual(const Correspondence& c, const PoseSE3& inverse_transform,
                        const Lattice& lattice) {
  const Vec3 q = inverse_transform * c.scan_point;
  return (q - c.plane.distance * lattice.direction(c.lattice_index)).dot(c.plane.normal);
}

}  // namespace

std::vector<Correspondence> find_correspondences(const Scan& scan, const PoseSE3& transform,
                                                 const Cell& cell, const Lattice& lattice) {
  if (cell.n_sp != lattice.size())
    throw LatticeMismatchError("find_correspondences: cell/lattice size mismatch");

  const std::size_t n = scan.points.size();
  std::vector<std::optional<Correspondence>> slots(n);
  parallel_for(n, [&](std::size_t i) {
    const Vec3 q = transform * scan.points[i];
    const double norm = q.norm();
    if (norm < 1e-12) return;
    const std::uint32_t j = lattice.nearest_index(q);
    const PlaneEntry* entry = cell.find(j);
    if (!entry) return;
    slots[i] = Correspondence{scan.points[i], j, *entry};
  });

  std::vector<Correspondence> out;
  out.reserve(n);
  for (auto& s : slots)
    if (s) out.push_back(*s);
  return out;
}

double point_to_plane_residual(const Correspondence& c, const PoseSE3& transform,
                               const Lattice& lattice) {
  const Vec3 q = transform * c.scan_point;
  return (q - c.plane.distance * lattice.direction(c.lattice_index)).dot(c.plane.normal);
}

Eigen::Matrix<double, 1, 6> forward_jacobian_row(const Correspondence& c,
                                                 const PoseSE3& transform) {
  const Vec3 q = transform * c.scan_point;
  Row6 J;
  J.leftCols<3>() = c.plane.normal.transpose();
  J.rightCols<3>() = q.cross(c.plane.normal).transpose();
  return J;
}

Eigen::Matrix<double, 1, 6> reverse_jacobian_row(const Correspondence& c,
                                                 const PoseSE3& transform) {
  const Vec3 rn = transform.rotation_matrix() * c.plane.normal;
  Row6 J;
  J.leftCols<3>() = -rn.transpose();
  J.rightCols<3>() = rn.cross(c.scan_point).transpose();
  return J;
}

RegistrationResult register_scan_to_cell(const Scan& scan, const Cell& cell,
                                         const PoseSE3& initial_guess, const Lattice& lattice,
                                         const RegistrationParams& params) {
  PoseSE3 T = initial_guess;
  RegistrationResult result;
  double last_dx_norm = std::numeric_limits<double>::infinity();

  for (std::uint32_t iter = 0; iter < params.max_iterations; ++iter) {
    auto corr = find_correspondences(scan, T, cell, lattice);
    if (corr.size() < params.min_correspondences)
      throw InsufficientCorrespondencesError("register_scan_to_cell: " +
                                             std::to_string(corr.size()) + " correspondences");

    NormalSystem sys = accumulate_rows(corr, params.huber_delta, [&](const Correspondence& c) {
      return std::pair{point_to_plane_residual(c, T, lattice), forward_jacobian_row(c, T)};
    });
    result.cost_history.push_back(sys.cost);
    result.degenerate = is_degenerate(sys.H);

    const Vec6 dx = solve_damped(sys, params.damping);
    T = se3_exp(dx) * T;
    ++result.iterations_run;
    last_dx_norm = dx.norm();
    if (last_dx_norm < params.update_tolerance) break;
  }

  auto corr = find_correspondences(scan, T, cell, lattice);
  NormalSystem final_sys = accumulate_rows(corr, params.huber_delta, [&](const Correspondence& c) {
    return std::pair{point_to_plane_residual(c, T, lattice), forward_jacobian_row(c, T)};
  });
  result.cost_history.push_back(final_sys.cost);

  InlierStats stats = inlier_stats(corr, params.inlier_residual_threshold,
                                   [&](const Correspondence& c) {
                                     return point_to_plane_residual(c, T, lattice);
                                   });
  result.pose = T;
  result.inlier_ratio =
      scan.points.empty() ? 0.0 : static_cast<double>(stats.inliers) / scan.points.size();
  result.mean_residual = stats.inliers == 0 ? 0.0 : stats.abs_sum / stats.inliers;
  result.converged = last_dx_norm < params.update_tolerance && !result.degenerate;
  return result;
}

RegistrationResult bidirectional_register(const Cell& cell_a, const Scan& scan_a,
                                          const Cell& cell_b, const Scan& scan_b,
                                          const PoseSE3& initial_guess, const Lattice& lattice,
                                          const RegistrationParams& params) {
  PoseSE3 T = initial_guess;
  RegistrationResult result;
  double last_dx_norm = std::numeric_limits<double>::infinity();

  auto build = [&](const PoseSE3& pose) {
    const PoseSE3 inv = pose.inverse();
    auto corr_f = find_correspondences(scan_b, pose, cell_a, lattice);
    auto corr_r = find_correspondences(scan_a, inv, cell_b, lattice);
    return std::tuple{std::move(corr_f), std::move(corr_r), inv};
  };

  for (std::uint32_t iter = 0; iter < params.max_iterations; ++iter) {
    auto [corr_f, corr_r, inv] = build(T);
    if (corr_f.size() + corr_r.size() < params.min_correspondences)
      throw InsufficientCorrespondencesError(
          "bidirectional_register: " + std::to_string(corr_f.size() + corr_r.size()) +
          " correspondences");

    NormalSystem sys = accumulate_rows(corr_f, params.huber_delta, [&](const Correspondence& c) {
      return std::pair{point_to_plane_residual(c, T, lattice), forward_jacobian_row(c, T)};
    });
    sys.merge(accumulate_rows(corr_r, params.huber_delta, [&](const Correspondence& c) {
      return std::pair{reverse_residual(c, inv, lattice), reverse_jacobian_row(c, T)};
    }));
    result.cost_history.push_back(sys.cost);
    result.degenerate = is_degenerate(sys.H);

    const Vec6 dx = solve_damped(sys, params.damping);
    T = se3_exp(dx) * T;
    ++result.iterations_run;
    last_dx_norm = dx.norm();
    if (last_dx_norm < params.update_tolerance) break;
  }

  auto [corr_f, corr_r, inv] = build(T);
  NormalSystem final_sys =
      accumulate_rows(corr_f, params.huber_delta, [&](const Correspondence& c) {
        return std::pair{point_to_plane_residual(c, T, lattice), forward_jacobian_row(c, T)};
      });
  final_sys.merge(accumulate_rows(corr_r, params.huber_delta, [&](const Correspondence& c) {
    return std::pair{reverse_residual(c, inv, lattice), reverse_jacobian_row(c, T)};
  }));
  result.cost_history.push_back(final_sys.cost);

  InlierStats sf = inlier_stats(corr_f, params.inlier_residual_threshold,
                                [&](const Correspondence& c) {
                                  return point_to_plane_residual(c, T, lattice);
                                });
  InlierStats sr = inlier_stats(corr_r, params.inlier_residual_threshold,
                                [&](const Correspondence& c) {
                                  return reverse_residual(c, inv, lattice);
                                });
  const std::size_t denom = scan_a.points.size() + scan_b.points.size();
  const std::size_t inliers = sf.inliers + sr.inliers;
  result.pose = T;
  result.inlier_ratio = denom == 0 ? 0.0 : static_cast<double>(inliers) / denom;
  result.mean_residual = inliers == 0 ? 0.0 : (sf.abs_sum + sr.abs_sum) / inliers;
  result.converged = last_dx_norm < params.update_tolerance && !result.degenerate;
  return result;
}

}  // namespace cellmap
