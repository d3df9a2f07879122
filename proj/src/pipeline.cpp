#include "cellmap/pipeline.hpp"

#include <algorithm>

#include "cellmap/errors.hpp"
#include "cellmap/lattice.hpp"

namespace cellmap {

LocalMapAccumulator::LocalMapAccumulator(double cell_spacing) : spacing_(cell_spacing) {}

void LocalMapAccumulator::start(const DatasetFrame& frame) {
  current_ = LocalMapBatch{};
  current_.anchor_frame = frame.scan.frame_id;
  current_.anchor_pose = frame.pose;
  current_.anchor_scan = frame.scan;
  active_ = true;
  current_.points_world.reserve(frame.scan.points.size());
  for (const Vec3& p : frame.scan.points) current_.points_world.push_back(frame.pose * p);
}

std::optional<LocalMapBatch> LocalMapAccumulator::feed(const DatasetFrame& frame) {
  if (!active_) {
    start(frame);
    return std::nullopt;
  }
  const double travelled = (frame.pose.translation - current_.anchor_pose.translation).norm();
  if (travelled >= spacing_) {
    LocalMapBatch closed = std::move(current_);
    start(frame);
    return closed;
  }
  for (const Vec3& p : frame.scan.points) current_.points_world.push_back(frame.pose * p);
  return std::nullopt;
}

std::optional<LocalMapBatch> LocalMapAccumulator::flush() {
  if (!active_) return std::nullopt;
  active_ = false;
  return std::move(current_);
}

Trajectory correct_trajectory(const Trajectory& input,
                              const std::vector<std::int64_t>& anchor_frames,
                              const std::vector<PoseSE3>& anchor_input_poses,
                              const std::vector<PoseSE3>& anchor_optimized_poses) {
  if (anchor_frames.size() != anchor_input_poses.size() ||
      anchor_frames.size() != anchor_optimized_poses.size())
    throw IndexMismatchError("correct_trajectory: anchor array sizes differ");
  if (anchor_frames.empty()) throw EmptyMapError("correct_trajectory: no anchors");

  Trajectory out;
  std::size_t k = 0;
  for (std::size_t i = 0; i < input.size(); ++i) {
    while (k + 1 < anchor_frames.size() && anchor_frames[k + 1] <= input.frame_ids[i]) ++k;
    if (input.frame_ids[i] == anchor_frames[k]) {
      out.append(input.frame_ids[i], anchor_optimized_poses[k]);
      continue;
    }
    const PoseSE3 rel = anchor_input_poses[k].inverse() * input.poses[i];
    out.append(input.frame_ids[i], anchor_optimized_poses[k] * rel);
  }
  return out;
}

namespace {

struct PipelineState {
  const PipelineConfig& config;
  const Lattice lattice;
  std::vector<Cell> cells;
  std::vector<PoseSE3> node_poses;      // running optimized estimates
  std::vector<PoseSE3> odo_poses;       // odometry at anchors
  std::vector<std::int64_t> anchor_frames;
  std::vector<PoseFactor> factors;
  Scan prev_scan;
  PipelineStats stats;

  explicit PipelineState(const PipelineConfig& cfg)
      : config(cfg), lattice(generate_lattice(cfg.n_sp)) {}

  void process(const LocalMapBatch& batch) {
    const std::uint32_t k = static_cast<std::uint32_t>(cells.size());

    Cell cell;
    try {
      cell = generate_cell(batch.points_world, batch.anchor_pose,
                           static_cast<std::uint32_t>(batch.anchor_frame), lattice,
                           config.cell_gen);
    } catch (const Error&) {
      cell.n_sp = config.n_sp;
      cell.anchor_frame = static_cast<std::uint32_t>(batch.anchor_frame);
      ++stats.empty_cells;
    }

    odo_poses.push_back(batch.anchor_pose);
    anchor_frames.push_back(batch.anchor_frame);

    if (k == 0) {
      node_poses.push_back(batch.anchor_pose);
    } else {
      const PoseSE3 odo_rel = odo_poses[k - 1].inverse() * odo_poses[k];
      PoseFactor factor;
      factor.from = k - 1;
      factor.to = k;
      factor.measured = odo_rel;
      factor.information = default_factor_information();
      factor.kind = FactorKind::kOdometry;

      if (config.enable_bidirectional && !cells[k - 1].empty() && !cell.empty()) {
        try {
          const RegistrationResult reg =
              bidirectional_register(cells[k - 1], prev_scan, cell, batch.anchor_scan, odo_rel,
                                     lattice, config.registration);
          if (reg.converged) {
            factor.measured = reg.pose;
            factor.kind = FactorKind::kBidirectional;
          }
        } catch (const Error&) {
        }
      }
      if (factor.kind == FactorKind::kBidirectional)
        ++stats.bidirectional_factors;
      else
        ++stats.odometry_factors;
      // With both refinements off the output must reproduce the odometry
      // poses exactly, so skip the chained composition.
      if (!config.enable_bidirectional && !config.enable_loop)
        node_poses.push_back(batch.anchor_pose);
      else
        node_poses.push_back(node_poses[k - 1] * factor.measured);
      factors.push_back(factor);

      if (config.enable_loop) {
        bool added = false;
        for (std::uint32_t cand : find_loop_candidates(node_poses, k, config.loop)) {
          auto loop_factor =
              verify_loop(batch.anchor_scan, k, node_poses[k], cells[cand], cand,
                          node_poses[cand], lattice, config.registration, config.loop);
          if (loop_factor) {
            factors.push_back(*loop_factor);
            ++stats.loop_factors;
            added = true;
          }
        }
        if (added) {
          node_poses = optimize_pose_graph(node_poses, factors, 0).poses;
          ++stats.optimization_runs;
        }
      }
    }

    cells.push_back(std::move(cell));
    prev_scan = batch.anchor_scan;
    ++stats.cells;
  }
};

}  // namespace

PipelineResult run_pipeline(DatasetReader& reader, const PipelineConfig& config) {
  PipelineState state(config);
  LocalMapAccumulator accumulator(config.cell_spacing);
  PipelineResult result;

  while (auto frame = reader.next()) {
    ++state.stats.frames;
    result.input_trajectory.append(frame->scan.frame_id, frame->pose);
    if (auto batch = accumulator.feed(*frame)) state.process(*batch);
  }
  if (auto batch = accumulator.flush()) state.process(*batch);
  if (state.cells.empty()) throw EmptyDatasetError("run_pipeline: no frames");

  result.map.n_sp = config.n_sp;
  result.map.cells = std::move(state.cells);
  result.map.poses = state.node_poses;
  for (std::size_t k = 0; k < state.node_poses.size(); ++k) {
    result.anchor_input.append(state.anchor_frames[k], state.odo_poses[k]);
    result.anchor_optimized.append(state.anchor_frames[k], state.node_poses[k]);
  }
  result.corrected_trajectory = correct_trajectory(result.input_trajectory, state.anchor_frames,
                                                   state.odo_poses, state.node_poses);
  result.factors = std::move(state.factors);
  result.stats = state.stats;
  return result;
}

}  // namespace cellmap
