/**
 * Copyright 2026 The EDGC Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef EDGC_PIPELINE_SIM_HPP_
#define EDGC_PIPELINE_SIM_HPP_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "edgc/dac.hpp"

namespace edgc {

struct StageSpec {
  double t_forward = 0.0;   // seconds per micro-batch
  double t_backward = 0.0;  // seconds per micro-batch
  std::vector<MatrixShape> matrices;  // 2-D gradients synchronized by DP
  std::uint64_t extra_elements = 0;   // 1-D parameters, always sent dense
  double compressible_fraction = 1.0; // share of matrix traffic that is compressed

  double matrix_elements() const;
  double rank_elements() const;  // sum of (m + n) over matrices
  std::int64_t max_rank() const; // smallest matrix dimension
};

/// One DP x PP iteration: S stages under a one-forward-one-backward schedule.
struct PipelineConfig {
  int micro_batches = 8;
  int dp_degree = 1;
  std::vector<StageSpec> stages;
  CommModel comm_model;  // bandwidth, element size and codec costs

  int num_stages() const { return static_cast<int>(stages.size()); }
  double stage_bytes(int stage) const;  // uncompressed DP payload
  double mean_backward() const;

  /// Throws RangeError on negative times or an empty pipeline.
  void validate() const;
};

struct ComputeEvent {
  int stage = 0;
  int micro_batch = 0;
  bool backward = false;
  double start = 0.0;
  double finish = 0.0;
};

/// Event-level 1F1B compute timeline of one iteration, in execution order
/// per stage. Stage k waits for stage k-1's forward and stage k+1's backward
/// of the same micro-batch.
std::vector<ComputeEvent> simulate_compute(const PipelineConfig& cfg);

struct StageTiming {
  double backprop_finish = 0.0;
  double comm_start = 0.0;
  double comm_duration = 0.0;
  double comm_finish = 0.0;
  std::int64_t rank_used = 0;  // 0: sent uncompressed
  double comm_bytes = 0.0;
};

using StageTimings = std::vector<StageTiming>;

/// DP communication time of one stage; rank 0 means uncompressed.
double stage_comm_duration(const PipelineConfig& cfg, int stage, std::int64_t rank);
double stage_comm_bytes(const PipelineConfig& cfg, int stage, std::int64_t rank);

/// Simulates one iteration. Each stage starts DP communication as soon as
/// its last backward finishes. Throws RangeError for a rank outside
/// [1, smallest matrix dim] or a rank vector of the wrong length.
StageTimings simulate_iteration(const PipelineConfig& cfg,
                                std::optional<std::span<const std::int64_t>> ranks = std::nullopt);

double iteration_time(const StageTimings& t);

/// Rank bounds satisfied by every stage; throws InfeasibleCompressionError.
RankBounds pipeline_rank_bounds(const PipelineConfig& cfg);

/// Calibrates eta against the simulator's own stage communication times.
CommModel calibrate_from_simulator(const PipelineConfig& cfg, int stage,
                                   std::span<const std::int64_t> ranks);

struct WindowRecord {
  std::uint64_t window_index = 0;
  std::uint64_t first_iteration = 0;
  std::uint64_t iterations = 0;
  double mean_entropy = 0.0;
  Phase phase = Phase::kWarmup;
  std::vector<std::int64_t> stage_ranks;  // empty while uncompressed
  StageTimings timings;
  double iteration_time = 0.0;
};

struct TimelineReport {
  std::vector<WindowRecord> windows;
  std::vector<ControllerLogEntry> decisions;
  double total_comm_seconds = 0.0;
  double total_comm_bytes = 0.0;
  double total_iteration_seconds = 0.0;
  double baseline_comm_seconds = 0.0;  // same run, never compressed
  double baseline_comm_bytes = 0.0;
  double baseline_iteration_seconds = 0.0;
  RankBounds bounds;
  double eta = 0.0;
  bool compression_disabled = false;
  std::string disabled_reason;

  /// 1 - total / baseline for communication seconds.
  double comm_reduction() const;
};

struct TrainingSimOptions {
  ControllerConfig controller;
  int g_trials = GTable::kDefaultTrials;
  std::uint64_t seed = 0;
  std::optional<CommModel> calibrated;  // eta source; defaults to the simulator
};

/// Runs one window per entropy value: warm-up windows uncompressed, then a
/// window-based rank decision followed by stage alignment at each boundary.
/// If no rank satisfies the benefit inequality the whole run is simulated
/// uncompressed and the report says so. Deterministic.
TimelineReport simulate_training(const PipelineConfig& cfg, const TrainingSimOptions& options,
                                 std::span<const double> entropy_stream);

/// CSV rows: iteration,stage,comm_start,comm_finish,rank
void write_timeline_csv(std::ostream& out, const TimelineReport& report);

}  // namespace edgc

#endif  // EDGC_PIPELINE_SIM_HPP_
