#include "cellmap/pose_graph.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <queue>
#include <string>

#include "cellmap/errors.hpp"

namespace cellmap {

namespace {

using Mat6 = Eigen::Matrix<double, 6, 6>;
using Vec6 = Eigen::Matrix<double, 6, 1>;

struct FactorTerm {
  Twist r;
  Mat6 J_to;  // J_from is its negation
  double weight = 1.0;
  double cost = 0.0;
};

FactorTerm evaluate_factor(const PoseFactor& f, const std::vector<PoseSE3>& poses,
                           double huber_delta_loop) {
  FactorTerm term;
  const PoseSE3 rel = poses[f.from].inverse() * poses[f.to];
  term.r = se3_log(f.measured.inverse() * rel);
  term.J_to = se3_left_jacobian_inverse_approx(term.r) *
              se3_adjoint((poses[f.from] * f.measured).inverse());

  const double e2 = term.r.dot(f.information * term.r);
  const double e = std::sqrt(std::max(e2, 0.0));
  if (f.kind == FactorKind::kLoop && e > huber_delta_loop) {
    term.weight = huber_delta_loop / e;
    term.cost = huber_delta_loop * (e - 0.5 * huber_delta_loop);
  } else {
    term.cost = 0.5 * e2;
  }
  return term;
}

double total_cost(const std::vector<PoseFactor>& factors, const std::vector<PoseSE3>& poses,
                  double huber_delta_loop) {
  double cost = 0.0;
  for (const auto& f : factors) cost += evaluate_factor(f, poses, huber_delta_loop).cost;
  return cost;
}

void check_connected(std::size_t n, const std::vector<PoseFactor>& factors, std::uint32_t fixed) {
  std::vector<std::vector<std::uint32_t>> adj(n);
  for (const auto& f : factors) {
    adj[f.from].push_back(f.to);
    adj[f.to].push_back(f.from);
  }
  std::vector<char> seen(n, 0);
  std::queue<std::uint32_t> q;
  q.push(fixed);
  seen[fixed] = 1;
  while (!q.empty()) {
    std::uint32_t u = q.front();
    q.pop();
    for (std::uint32_t v : adj[u])
      if (!seen[v]) {
        seen[v] = 1;
        q.push(v);
      }
  }
  for (std::size_t i = 0; i < n; ++i)
    if (!seen[i])
      throw DisconnectedGraphError("optimize_pose_graph: node " + std::to_string(i) +
                                   " unreachable from fixed node");
}

}  // namespace

Eigen::Matrix<double, 6, 6> default_factor_information() {
  Mat6 info = Mat6::Zero();
  const double sigma_t = 0.1, sigma_r = 0.01;
  info.diagonal().head<3>().setConstant(1.0 / (sigma_t * sigma_t));
  info.diagonal().tail<3>().setConstant(1.0 / (sigma_r * sigma_r));
  return info;
}

Eigen::Matrix<double, 6, 6> se3_adjoint(const PoseSE3& transform) {
  const Mat3 R = transform.rotation_matrix();
  Mat6 adj = Mat6::Zero();
  adj.topLeftCorner<3, 3>() = R;
  adj.topRightCorner<3, 3>() = skew(transform.translation) * R;
  adj.bottomRightCorner<3, 3>() = R;
  return adj;
}

Eigen::Matrix<double, 6, 6> se3_left_jacobian_inverse_approx(const Twist& xi) {
  const Vec3 rho = xi.head<3>();
  const Vec3 phi = xi.tail<3>();
  Mat6 ad = Mat6::Zero();
  ad.topLeftCorner<3, 3>() = skew(phi);
  ad.topRightCorner<3, 3>() = skew(rho);
  ad.bottomRightCorner<3, 3>() = skew(phi);
  return Mat6::Identity() - 0.5 * ad + (1.0 / 12.0) * ad * ad;
}

std::vector<std::uint32_t> find_loop_candidates(const std::vector<PoseSE3>& anchor_poses,
                                                std::uint32_t current, const LoopParams& params) {
  if (current >= anchor_poses.size())
    throw IndexMismatchError("find_loop_candidates: current index out of range");

  const std::int64_t lo =
      static_cast<std::int64_t>(current) - static_cast<std::int64_t>(params.exclusion_window);
  const Vec3& c = anchor_poses[current].translation;

  std::vector<std::pair<double, std::uint32_t>> ranked;
  for (std::uint32_t i = 0; i < anchor_poses.size(); ++i) {
    if (static_cast<std::int64_t>(i) >= lo && i <= current) continue;
    ranked.emplace_back((anchor_poses[i].translation - c).norm(), i);
  }
  std::sort(ranked.begin(), ranked.end());
  if (ranked.size() > params.n_loop) ranked.resize(params.n_loop);

  std::vector<std::uint32_t> out;
  out.reserve(ranked.size());
  for (const auto& [d, i] : ranked) out.push_back(i);
  return out;
}

std::optional<PoseFactor> verify_loop(const Scan& current_scan, std::uint32_t current_index,
                                      const PoseSE3& current_pose, const Cell& candidate_cell,
                                      std::uint32_t candidate_index,
                                      const PoseSE3& candidate_pose, const Lattice& lattice,
                                      const RegistrationParams& reg_params,
                                      const LoopParams& loop_params) {
  const PoseSE3 initial = candidate_pose.inverse() * current_pose;
  RegistrationResult result;
  try {
    result = register_scan_to_cell(current_scan, candidate_cell, initial, lattice, reg_params);
  } catch (const Error&) {
    return std::nullopt;
  }
  if (!result.converged || result.inlier_ratio < loop_params.inlier_ratio_threshold)
    return std::nullopt;

  PoseFactor factor;
  factor.from = candidate_index;
  factor.to = current_index;
  factor.measured = result.pose;
  factor.information = default_factor_information() * result.inlier_ratio;
  factor.kind = FactorKind::kLoop;
  return factor;
}

PoseGraphResult optimize_pose_graph(const std::vector<PoseSE3>& initial_poses,
                                    const std::vector<PoseFactor>& factors, std::uint32_t fixed,
                                    const PoseGraphOptions& options) {
  const std::size_t n = initial_poses.size();
  if (fixed >= n) throw IndexMismatchError("optimize_pose_graph: fixed node out of range");
  for (const auto& f : factors)
    if (f.from >= n || f.to >= n)
      throw IndexMismatchError("optimize_pose_graph: factor endpoint out of range");
  check_connected(n, factors, fixed);

  PoseGraphResult result;
  result.poses = initial_poses;
  double cost = total_cost(factors, result.poses, options.huber_delta_loop);
  result.cost_history.push_back(cost);
  if (n <= 1) return result;

  // Slot layout of the reduced system: every node but the fixed one.
  auto slot = [&](std::uint32_t node) -> std::int64_t {
    if (node == fixed) return -1;
    return (node < fixed ? node : node - 1) * 6;
  };
  const std::size_t dim = (n - 1) * 6;
  double lambda = 1e-6;

  for (std::uint32_t iter = 0; iter < options.max_iterations; ++iter) {
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(factors.size() * 144);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(dim);

    for (const auto& f : factors) {
      const FactorTerm term = evaluate_factor(f, result.poses, options.huber_delta_loop);
      const Mat6 JtO = term.weight * term.J_to.transpose() * f.information;
      const Mat6 block = JtO * term.J_to;  // = H_tt = H_ff = -H_ft
      const Vec6 grad = JtO * term.r;      // = g_to = -g_from
      const std::int64_t sf = slot(f.from), st = slot(f.to);

      auto add_block = [&](std::int64_t row, std::int64_t col, const Mat6& m) {
        if (row < 0 || col < 0) return;
        for (int a = 0; a < 6; ++a)
          for (int b = 0; b < 6; ++b) triplets.emplace_back(row + a, col + b, m(a, b));
      };
      add_block(st, st, block);
      add_block(sf, sf, block);
      add_block(sf, st, -block);
      add_block(st, sf, -block);
      if (st >= 0) g.segment<6>(st) += grad;
      if (sf >= 0) g.segment<6>(sf) -= grad;
    }

    if (!g.allFinite()) throw SingularSystemError("optimize_pose_graph: non-finite gradient");

    bool accepted = false;
    Eigen::VectorXd dx;
    for (int attempt = 0; attempt < 12 && !accepted; ++attempt) {
      Eigen::SparseMatrix<double> H(dim, dim);
      H.setFromTriplets(triplets.begin(), triplets.end());
      for (std::size_t k = 0; k < dim; ++k) H.coeffRef(k, k) += lambda;

      Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(H);
      if (solver.info() != Eigen::Success) {
        lambda *= 10.0;
        if (attempt == 11)
          throw SingularSystemError("optimize_pose_graph: factorization failed");
        continue;
      }
      dx = solver.solve(-g);
      if (!dx.allFinite()) {
        lambda *= 10.0;
        if (attempt == 11) throw SingularSystemError("optimize_pose_graph: non-finite update");
        continue;
      }

      std::vector<PoseSE3> candidate = result.poses;
      for (std::uint32_t node = 0; node < n; ++node) {
        const std::int64_t s = slot(node);
        if (s < 0) continue;
        candidate[node] = se3_exp(dx.segment<6>(s)) * candidate[node];
      }
      const double new_cost = total_cost(factors, candidate, options.huber_delta_loop);
      if (new_cost <= cost * (1.0 + 1e-12) + 1e-15) {
        result.poses = std::move(candidate);
        cost = std::min(new_cost, cost);
        result.cost_history.push_back(cost);
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
      } else {
        lambda *= 10.0;
      }
    }

    if (!accepted) break;  // no descent direction left at any damping
    ++result.iterations_run;
    if (dx.norm() < options.update_tolerance) break;
  }
  return result;
}

CellMap apply_optimized_poses(const CellMap& map, const std::vector<PoseSE3>& poses) {
  if (poses.size() != map.poses.size())
    throw IndexMismatchError("apply_optimized_poses: pose count mismatch");
  CellMap out = map;
  out.poses = poses;
  return out;
}

}  // namespace cellmap
