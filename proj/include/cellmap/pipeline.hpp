#pragma once

// End-to-end mapping pipeline: local map accumulation, cell generation,
// anchor-to-anchor registration factors, loop closure and pose graph
// optimization, plus full-trajectory correction.

#include <cstdint>
#include <optional>
#include <vector>

#include "cellmap/cell.hpp"
#include "cellmap/dataset.hpp"
#include "cellmap/pose_graph.hpp"
#include "cellmap/registration.hpp"
#include "cellmap/trajectory.hpp"

namespace cellmap {

struct PipelineConfig {
  double cell_spacing = 6.0;  // m travelled before a local map closes
  std::uint32_t n_sp = 50000;
  CellGenParams cell_gen;
  RegistrationParams registration;
  LoopParams loop;
  bool enable_bidirectional = true;
  bool enable_loop = true;
};

struct LocalMapBatch {
  std::vector<Vec3> points_world;
  std::int64_t anchor_frame = 0;
  PoseSE3 anchor_pose;
  Scan anchor_scan;  // sensor frame
};

// Groups the frame stream into local maps. A batch starts at its anchor
// frame and closes at the first frame whose translation distance from the
// anchor reaches the spacing; that frame anchors the next batch.
class LocalMapAccumulator {
 public:
  explicit LocalMapAccumulator(double cell_spacing);

  // Returns the closed batch when `frame` opens a new one.
  std::optional<LocalMapBatch> feed(const DatasetFrame& frame);

  // Hands out the trailing partial batch, if any.
  std::optional<LocalMapBatch> flush();

 private:
  void start(const DatasetFrame& frame);

  double spacing_;
  bool active_ = false;
  LocalMapBatch current_;
};

struct PipelineStats {
  std::size_t frames = 0;
  std::size_t cells = 0;
  std::size_t empty_cells = 0;           // generation failed, kept as placeholder
  std::size_t odometry_factors = 0;
  std::size_t bidirectional_factors = 0;
  std::size_t loop_factors = 0;
  std::size_t optimization_runs = 0;
};

struct PipelineResult {
  CellMap map;                    // cells with optimized anchor poses
  Trajectory input_trajectory;    // odometry, every frame
  Trajectory corrected_trajectory;
  Trajectory anchor_input;        // odometry at anchor frames
  Trajectory anchor_optimized;
  std::vector<PoseFactor> factors;
  PipelineStats stats;
};

// Consumes the reader to completion. Throws EmptyDatasetError when no frame
// arrives.
PipelineResult run_pipeline(DatasetReader& reader, const PipelineConfig& config);

// Moves every input frame rigidly with its containing anchor:
// out_i = opt_k * in_k^-1 * in_i for the last anchor k at or before frame i.
Trajectory correct_trajectory(const Trajectory& input,
                              const std::vector<std::int64_t>& anchor_frames,
                              const std::vector<PoseSE3>& anchor_input_poses,
                              const std::vector<PoseSE3>& anchor_optimized_poses);

}  // namespace cellmap
