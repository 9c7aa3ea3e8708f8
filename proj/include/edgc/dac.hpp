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

#ifndef EDGC_DAC_HPP_
#define EDGC_DAC_HPP_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "edgc/cqm.hpp"

namespace edgc {

/// T(r) = fixed + per_rank * r, in seconds.
struct LinearCost {
  double fixed = 0.0;
  double per_rank = 0.0;

  double at(std::int64_t r) const { return fixed + per_rank * static_cast<double>(r); }
};

/// Linear rank -> communication-time model, T_com(r) = eta * r, plus the
/// raw ingredients (bandwidth, element size, codec costs) of the
/// compression-benefit inequality.
struct CommModel {
  double eta = 0.0;           // seconds per rank unit
  double bandwidth = 1.0e9;   // bytes per second
  double element_size = 4.0;  // bytes per real
  LinearCost compress_cost;
  LinearCost decompress_cost;
  double mape = 0.0;          // fit quality of eta, as a fraction

  double predict(std::int64_t r) const { return eta * static_cast<double>(r); }

  /// T_compress(r) + bytes(r) / B + T_decompress(r), where the stage sends
  /// r * elements_per_rank reals.
  double compressed_time(std::int64_t r, double elements_per_rank) const;
  double uncompressed_time(double bytes) const { return bytes / bandwidth; }
};

struct Measurement {
  std::int64_t rank = 0;
  double seconds = 0.0;
};

/// Least-squares fit of T = eta * r through the origin. Every other field is
/// copied from `base`. Throws CalibrationError unless at least two distinct
/// positive ranks are present, or if any time is non-positive.
CommModel calibrate_comm_model(std::span<const Measurement> measurements, CommModel base = {});

/// Ordinary least squares T = fixed + per_rank * r (for codec timings).
LinearCost fit_linear_cost(std::span<const Measurement> measurements);

/// Mean absolute percentage error of eta * r against the measurements.
double mean_absolute_percentage_error(double eta, std::span<const Measurement> measurements);

/// (rank, seconds) rows, with or without a header line.
std::vector<Measurement> read_measurements_csv(const std::string& path);

struct MatrixShape {
  std::int64_t rows = 0;
  std::int64_t cols = 0;

  std::int64_t min_dim() const { return rows < cols ? rows : cols; }
  std::int64_t elements() const { return rows * cols; }
};

struct RankBounds {
  std::int64_t r_min = 1;
  std::int64_t r_max = 1;
};

/// True iff compressing every matrix in `shapes` at rank r is no slower than
/// sending `original_bytes` uncompressed.
bool compression_pays_off(const CommModel& model, double original_bytes,
                          std::span<const MatrixShape> shapes, std::int64_t r);

/// r_max is the largest rank satisfying the compression-benefit inequality,
/// capped at the smallest matrix dimension; r_min = round(r_max / 5).
/// Throws InfeasibleCompressionError when rank 1 already fails.
RankBounds compute_rank_bounds(const CommModel& model, double original_bytes,
                               std::span<const MatrixShape> shapes);

enum class Phase { kWarmup, kActive };

struct ControllerConfig {
  std::int64_t step_limit = 8;      // max per-window rank change
  std::uint64_t window = 1000;      // iterations per decision
  double warmup_floor = 0.10;       // minimum warm-up as a fraction of the run
  std::uint64_t total_iterations = 0;
};

/// Rank controller memory. Single-owner per training run.
struct RankControllerState {
  Phase phase = Phase::kWarmup;
  double eps_ini = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> h_ref;  // first recorded window entropy
  double h_prev = std::numeric_limits<double>::quiet_NaN();
  std::int64_t r_prev = 0;
  std::int64_t step_limit = 8;
  std::uint64_t window = 1000;
  RankBounds bounds;
  std::uint64_t total_iterations = 0;
  double warmup_floor = 0.10;

  static RankControllerState make(const ControllerConfig& config, RankBounds bounds);
};

/// One warm-up decision at a window boundary.
///
/// The rank implied by the entropy drop since the first window is
/// rank_from_entropy(r_max, H_ref, H_window). The phase turns active iff that
/// rank is below r_max and `iteration` has reached warmup_floor of the run.
/// On transition r_prev = r_max and eps_ini is taken from
/// `measure_error_at_rmax` when given, otherwise from the Gaussian
/// estimate sigma_hat * g(r_max) with sigma_hat recovered from H_window.
Phase warmup_step(RankControllerState& ctl, double h_window, std::uint64_t iteration,
                  const GTable& table, const std::function<double()>& measure_error_at_rmax = {});

struct RankDecision {
  std::int64_t rank = 0;
  double predicted_comm_seconds = 0.0;
};

/// Limits a proposed rank to r_prev +/- s.
std::int64_t clamp_step(std::int64_t r_prev, std::int64_t r_proposed, std::int64_t step_limit);

/// Window-based rank adjustment for the first pipeline stage: entropy rank
/// law from (r_prev, H_prev), step clamp, bound clamp, T_com prediction.
/// Updates h_prev and r_prev.
RankDecision adjust_rank_window(RankControllerState& ctl, double h_curr, const GTable& table,
                                const CommModel& model);

/// Stage i (1-indexed) gets round((eta * r_s1 + (i - 1) * t_micro_back) / eta),
/// clamped to bounds, so later stages that start communicating earlier carry
/// proportionally more rank.
std::vector<std::int64_t> align_stage_ranks(std::int64_t r_s1, const CommModel& model,
                                            double t_micro_back, int num_stages,
                                            RankBounds bounds);

struct ControllerLogEntry {
  std::uint64_t window_index = 0;
  double mean_entropy = 0.0;
  std::vector<std::int64_t> stage_ranks;  // empty while warming up
  double predicted_comm_seconds = 0.0;
};

/// CSV rows: window_index,mean_entropy,r_stage1..r_stageS,t_pred
void write_controller_log_csv(std::ostream& out, std::span<const ControllerLogEntry> log,
                              int num_stages);

}  // namespace edgc

#endif  // EDGC_DAC_HPP_
