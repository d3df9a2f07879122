#include "cellmap/cell.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "cellmap/errors.hpp"
#include "cellmap/parallel.hpp"
#include "cellmap/random.hpp"

namespace cellmap {

namespace {

// splitmix64 finalizer; seed mixing stays reproducible across standard
// libraries.
std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// cos(15 deg); competing consensus normals further apart mark an ambiguous
// group.
constexpr double kAmbiguityCosine = 0.9659258262890683;

}  // namespace

const PlaneEntry* Cell::find(std::uint32_t j) const {
  auto it = std::lower_bound(entries.begin(), entries.end(), j,
                             [](const auto& e, std::uint32_t key) { return e.first < key; });
  if (it == entries.end() || it->first != j) return nullptr;
  return &it->second;
}

std::uint64_t group_seed(std::uint64_t global_seed, std::uint32_t anchor_frame,
                         std::uint32_t lattice_index) {
  std::uint64_t h = mix64(global_seed ^ 0x8f3c0a5d2e9b71c3ull);
  h = mix64(h ^ anchor_frame);
  h = mix64(h ^ lattice_index);
  return h;
}

std::map<std::uint32_t, std::vector<std::uint32_t>> segment_map(const std::vector<Vec3>& points,
                                                                const Lattice& lattice) {
  if (points.empty()) throw EmptyMapError("segment_map: no points");
  std::vector<std::uint32_t> assign(points.size());
  parallel_for(points.size(), [&](std::size_t i) { assign[i] = lattice.nearest_index(points[i]); });
  std::map<std::uint32_t, std::vector<std::uint32_t>> groups;
  for (std::size_t i = 0; i < points.size(); ++i)
    groups[assign[i]].push_back(static_cast<std::uint32_t>(i));
  return groups;
}

GapClusterResult gap_cluster(const std::vector<Vec3>& group_points, double gap_threshold,
                             std::uint32_t min_points) {
  GapClusterResult result;
  if (group_points.empty()) return result;

  std::vector<std::pair<double, std::uint32_t>> by_range(group_points.size());
  for (std::size_t i = 0; i < group_points.size(); ++i)
    by_range[i] = {group_points[i].norm(), static_cast<std::uint32_t>(i)};
  std::sort(by_range.begin(), by_range.end());

  std::size_t keep = by_range.size();
  for (std::size_t i = 1; i < by_range.size(); ++i) {
    if (by_range[i].first - by_range[i - 1].first > gap_threshold) {
      keep = i;
      break;
    }
  }

  result.kept.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) result.kept.push_back(group_points[by_range[i].second]);
  result.valid = result.kept.size() >= min_points;
  return result;
}

std::optional<FittedPlane> fit_plane(const std::vector<Vec3>& points, const CellGenParams& params,
                                     std::uint64_t seed) {
  const std::uint32_t n = static_cast<std::uint32_t>(points.size());
  if (n < 3 || n < params.min_points_per_group) return std::nullopt;

  SplitMix64 rng(seed);
  std::uint32_t best_count = 0;
  Vec3 best_normal = Vec3::Zero();
  Vec3 best_point = Vec3::Zero();
  std::vector<std::pair<std::uint32_t, Vec3>> contenders;

  for (std::uint32_t iter = 0; iter < params.ransac_max_iters; ++iter) {
    std::uint32_t ia = rng.below(n), ib = rng.below(n), ic = rng.below(n);
    if (ia == ib || ib == ic || ia == ic) continue;
    const Vec3& a = points[ia];
    Vec3 nrm = (points[ib] - a).cross(points[ic] - a);
    double len = nrm.norm();
    if (len < 1e-12) continue;
    nrm /= len;

    std::uint32_t count = 0;
    for (const Vec3& p : points)
      if (std::abs(nrm.dot(p - a)) <= params.ransac_inlier_dist) ++count;
    if (count >= params.ransac_min_inlier_fraction * n) contenders.emplace_back(count, nrm);
    if (count > best_count) {
      best_count = count;
      best_normal = nrm;
      best_point = a;
    }
  }

  if (best_count < params.ransac_min_inlier_fraction * n) return std::nullopt;

  // Two near-winning samples with clearly different orientations mean the
  // group straddles an edge or corner; no single plane describes it.
  for (const auto& [count, nrm] : contenders)
    if (count >= 0.95 * best_count && std::abs(nrm.dot(best_normal)) < kAmbiguityCosine)
      return std::nullopt;

  // Least-squares refinement over the consensus set: smallest covariance
  // eigenvector.
  Vec3 centroid = Vec3::Zero();
  std::vector<const Vec3*> inliers;
  inliers.reserve(best_count);
  for (const Vec3& p : points) {
    if (std::abs(best_normal.dot(p - best_point)) <= params.ransac_inlier_dist) {
      inliers.push_back(&p);
      centroid += p;
    }
  }
  centroid /= static_cast<double>(inliers.size());

  Mat3 cov = Mat3::Zero();
  for (const Vec3* p : inliers) {
    Vec3 d = *p - centroid;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  // Near-equal two smallest eigenvalues means the consensus set is close to
  // collinear and the normal is not identifiable.
  if (eig.eigenvalues()(1) <= 1e-9 * std::max(eig.eigenvalues()(2), 1e-300))
    return std::nullopt;
  Vec3 normal = eig.eigenvectors().col(0).normalized();

  if (normal.dot(centroid) > 0.0) normal = -normal;
  FittedPlane plane;
  plane.normal = normal;
  plane.offset = normal.dot(centroid);
  return plane;
}

std::optional<double> ray_plane_distance(const Vec3& normal, const Vec3& plane_point,
                                         const Vec3& direction) {
  double denom = normal.dot(direction);
  if (std::abs(denom) < 1e-6) return std::nullopt;
  double d = normal.dot(plane_point) / denom;
  if (d <= 0.0) return std::nullopt;
  return d;
}

Cell generate_cell(const std::vector<Vec3>& local_map_world, const PoseSE3& anchor_pose,
                   std::uint32_t anchor_frame, const Lattice& lattice,
                   const CellGenParams& params) {
  if (local_map_world.empty()) throw EmptyMapError("generate_cell: empty local map");

  const PoseSE3 world_to_anchor = anchor_pose.inverse();
  std::vector<Vec3> local(local_map_world.size());
  parallel_for(local_map_world.size(),
               [&](std::size_t i) { local[i] = world_to_anchor * local_map_world[i]; });

  // Points too close to the anchor origin have no usable direction.
  std::vector<Vec3> filtered;
  filtered.reserve(local.size());
  for (const Vec3& p : local) {
    if (!p.allFinite()) continue;
    if (p.squaredNorm() < kMinPointRange * kMinPointRange) continue;
    filtered.push_back(p);
  }
  if (filtered.empty()) throw EmptyMapError("generate_cell: no usable points");

  auto groups = segment_map(filtered, lattice);

  std::vector<std::pair<std::uint32_t, const std::vector<std::uint32_t>*>> group_list;
  group_list.reserve(groups.size());
  for (const auto& [j, idx] : groups) group_list.emplace_back(j, &idx);

  std::vector<std::optional<PlaneEntry>> slots(group_list.size());
  parallel_for(group_list.size(), [&](std::size_t g) {
    const auto [j, idx] = group_list[g];
    if (idx->size() < params.min_points_per_group) return;
    std::vector<Vec3> pts;
    pts.reserve(idx->size());
    for (std::uint32_t i : *idx) pts.push_back(filtered[i]);

    GapClusterResult fg = gap_cluster(pts, params.gap_threshold, params.min_points_per_group);
    if (!fg.valid) return;

    auto plane = fit_plane(fg.kept, params, group_seed(params.seed, anchor_frame, j));
    if (!plane) return;

    const Vec3 dir = lattice.direction(j);
    auto dist = ray_plane_distance(plane->normal, plane->point(), dir);
    if (!dist) return;

    // The plane must describe the surface where the direction ray actually
    // crosses it: the kept point closest in angle to the ray has to lie on
    // the plane, or the entry would extrapolate past the real surface.
    double best_dot = -2.0;
    const Vec3* support = nullptr;
    for (const Vec3& p : fg.kept) {
      const double c = p.dot(dir) / p.norm();
      if (c > best_dot) {
        best_dot = c;
        support = &p;
      }
    }
    if (std::abs(plane->normal.dot(*support) - plane->offset) > params.ransac_inlier_dist)
      return;

    slots[g] = PlaneEntry{*dist, plane->normal};
  });

  Cell cell;
  cell.n_sp = lattice.size();
  cell.anchor_frame = anchor_frame;
  for (std::size_t g = 0; g < group_list.size(); ++g)
    if (slots[g]) cell.entries.emplace_back(group_list[g].first, *slots[g]);
  return cell;
}

}  // namespace cellmap
