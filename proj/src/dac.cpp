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

#include "edgc/dac.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <set>

#include "edgc/errors.hpp"
#include "edgc/text_io.hpp"

namespace edgc {

double CommModel::compressed_time(std::int64_t r, double elements_per_rank) const {
  const double bytes = element_size * static_cast<double>(r) * elements_per_rank;
  return compress_cost.at(r) + bytes / bandwidth + decompress_cost.at(r);
}

double mean_absolute_percentage_error(double eta, std::span<const Measurement> measurements) {
  if (measurements.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& m : measurements) {
    acc += std::abs(eta * static_cast<double>(m.rank) - m.seconds) / m.seconds;
  }
  return acc / static_cast<double>(measurements.size());
}

CommModel calibrate_comm_model(std::span<const Measurement> measurements, CommModel base) {
  std::set<std::int64_t> distinct;
  double srt = 0.0;
  double srr = 0.0;
  for (const auto& m : measurements) {
    if (m.rank < 0) throw CalibrationError("negative rank in calibration data");
    if (!(m.seconds > 0.0) || !std::isfinite(m.seconds)) {
      throw CalibrationError("calibration times must be positive and finite");
    }
    if (m.rank > 0) distinct.insert(m.rank);
    const auto r = static_cast<double>(m.rank);
    srt += r * m.seconds;
    srr += r * r;
  }
  if (distinct.size() < 2) {
    throw CalibrationError("calibration needs at least two distinct positive ranks, got " +
                           std::to_string(distinct.size()));
  }
  CommModel out = base;
  out.eta = srt / srr;
  out.mape = mean_absolute_percentage_error(out.eta, measurements);
  return out;
}

LinearCost fit_linear_cost(std::span<const Measurement> measurements) {
  std::set<std::int64_t> distinct;
  for (const auto& m : measurements) distinct.insert(m.rank);
  if (distinct.size() < 2) throw CalibrationError("cost fit needs at least two distinct ranks");
  const double n = static_cast<double>(measurements.size());
  double sr = 0.0, st = 0.0;
  for (const auto& m : measurements) {
    sr += static_cast<double>(m.rank);
    st += m.seconds;
  }
  const double mr = sr / n;
  const double mt = st / n;
  double sxy = 0.0, sxx = 0.0;
  for (const auto& m : measurements) {
    const double dr = static_cast<double>(m.rank) - mr;
    sxy += dr * (m.seconds - mt);
    sxx += dr * dr;
  }
  LinearCost c;
  c.per_rank = sxy / sxx;
  c.fixed = mt - c.per_rank * mr;
  return c;
}

std::vector<Measurement> read_measurements_csv(const std::string& path) {
  const auto rows = read_numeric_csv(path);
  std::vector<Measurement> out;
  out.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() < 2) {
      throw FormatError(path + ": row " + std::to_string(i + 1) + " needs rank,seconds");
    }
    const double r = rows[i][0];
    if (r != std::floor(r)) throw FormatError(path + ": rank must be an integer");
    out.push_back({static_cast<std::int64_t>(r), rows[i][1]});
  }
  return out;
}

namespace {

double rank_elements(std::span<const MatrixShape> shapes) {
  double e = 0.0;
  for (const auto& s : shapes) e += static_cast<double>(s.rows + s.cols);
  return e;
}

}  // namespace

bool compression_pays_off(const CommModel& model, double original_bytes,
                          std::span<const MatrixShape> shapes, std::int64_t r) {
  const double lhs = model.compressed_time(r, rank_elements(shapes));
  const double rhs = model.uncompressed_time(original_bytes);
  return lhs <= rhs * (1.0 + 1e-12);
}

RankBounds compute_rank_bounds(const CommModel& model, double original_bytes,
                               std::span<const MatrixShape> shapes) {
  if (shapes.empty()) throw DimensionError("rank bounds need at least one matrix shape");
  if (!(original_bytes > 0.0)) throw RangeError("original byte count must be positive");
  std::int64_t cap = shapes.front().min_dim();
  for (const auto& s : shapes) cap = std::min(cap, s.min_dim());
  if (cap < 1) throw DimensionError("matrix shapes must be positive");

  if (!compression_pays_off(model, original_bytes, shapes, 1)) {
    throw InfeasibleCompressionError("no rank >= 1 makes compression cheaper than sending " +
                                     format_double(original_bytes) + " bytes");
  }
  // Solve the linear inequality directly, then settle floating-point edges.
  const double slope = model.compress_cost.per_rank + model.decompress_cost.per_rank +
                       model.element_size * rank_elements(shapes) / model.bandwidth;
  const double budget = model.uncompressed_time(original_bytes) - model.compress_cost.fixed -
                        model.decompress_cost.fixed;
  std::int64_t r_max = cap;
  if (slope > 0.0) {
    const double r_star = std::floor(budget / slope);
    r_max = r_star >= static_cast<double>(cap) ? cap : std::max<std::int64_t>(1, static_cast<std::int64_t>(r_star));
  }
  while (r_max > 1 && !compression_pays_off(model, original_bytes, shapes, r_max)) --r_max;
  while (r_max < cap && compression_pays_off(model, original_bytes, shapes, r_max + 1)) ++r_max;

  RankBounds b;
  b.r_max = r_max;
  b.r_min = std::clamp<std::int64_t>(std::llround(static_cast<double>(r_max) / 5.0), 1, r_max);
  return b;
}

RankControllerState RankControllerState::make(const ControllerConfig& config, RankBounds bounds) {
  if (config.step_limit < 1) throw RangeError("step limit must be positive");
  if (config.window < 1) throw RangeError("window size must be positive");
  if (bounds.r_min < 1 || bounds.r_min > bounds.r_max) throw RangeError("invalid rank bounds");
  RankControllerState s;
  s.step_limit = config.step_limit;
  s.window = config.window;
  s.warmup_floor = config.warmup_floor;
  s.total_iterations = config.total_iterations;
  s.bounds = bounds;
  s.r_prev = bounds.r_max;
  return s;
}

Phase warmup_step(RankControllerState& ctl, double h_window, std::uint64_t iteration,
                  const GTable& table, const std::function<double()>& measure_error_at_rmax) {
  if (ctl.phase != Phase::kWarmup) return ctl.phase;
  const std::int64_t r_max = std::min(ctl.bounds.r_max, table.m());
  if (!ctl.h_ref) {
    ctl.h_ref = h_window;
    return ctl.phase;
  }
  const std::int64_t r_new = rank_from_entropy(r_max, *ctl.h_ref, h_window, table);
  const double floor_iter = ctl.warmup_floor * static_cast<double>(ctl.total_iterations);
  if (r_new < r_max && static_cast<double>(iteration) >= floor_iter) {
    ctl.phase = Phase::kActive;
    ctl.r_prev = ctl.bounds.r_max;
    ctl.h_prev = h_window;
    if (measure_error_at_rmax) {
      ctl.eps_ini = measure_error_at_rmax();
    } else {
      const double sigma = std::exp(h_window - 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e));
      ctl.eps_ini = sigma * table.g(r_max);
    }
  }
  return ctl.phase;
}

std::int64_t clamp_step(std::int64_t r_prev, std::int64_t r_proposed, std::int64_t step_limit) {
  if (r_proposed - r_prev > step_limit) return r_prev + step_limit;
  if (r_prev - r_proposed > step_limit) return r_prev - step_limit;
  return r_proposed;
}

RankDecision adjust_rank_window(RankControllerState& ctl, double h_curr, const GTable& table,
                                const CommModel& model) {
  const std::int64_t base = std::min(ctl.r_prev, table.m());
  const std::int64_t r_raw = rank_from_entropy(base, ctl.h_prev, h_curr, table);
  std::int64_t r = clamp_step(ctl.r_prev, r_raw, ctl.step_limit);
  r = std::clamp(r, ctl.bounds.r_min, ctl.bounds.r_max);
  ctl.h_prev = h_curr;
  ctl.r_prev = r;
  return {r, model.predict(r)};
}

std::vector<std::int64_t> align_stage_ranks(std::int64_t r_s1, const CommModel& model,
                                            double t_micro_back, int num_stages,
                                            RankBounds bounds) {
  if (num_stages < 1) throw RangeError("need at least one pipeline stage");
  if (!(model.eta > 0.0)) throw RangeError("comm model eta must be positive");
  std::vector<std::int64_t> ranks(static_cast<std::size_t>(num_stages), r_s1);
  const double t_s1 = model.predict(r_s1);
  for (int i = 2; i <= num_stages; ++i) {
    const double t_si = t_s1 + (i - 1) * t_micro_back;
    const auto r = static_cast<std::int64_t>(std::llround(t_si / model.eta));
    ranks[static_cast<std::size_t>(i - 1)] = std::clamp(r, bounds.r_min, bounds.r_max);
  }
  return ranks;
}

void write_controller_log_csv(std::ostream& out, std::span<const ControllerLogEntry> log,
                              int num_stages) {
  out << "window_index,mean_entropy";
  for (int i = 1; i <= num_stages; ++i) out << ",r_stage" << i;
  out << ",t_pred\n";
  for (const auto& e : log) {
    out << e.window_index << ',' << format_double(e.mean_entropy);
    for (int i = 0; i < num_stages; ++i) {
      out << ',';
      // 0 marks an uncompressed (warm-up) window.
      out << (static_cast<std::size_t>(i) < e.stage_ranks.size() ? e.stage_ranks[static_cast<std::size_t>(i)] : 0);
    }
    out << ',' << format_double(e.predicted_comm_seconds) << '\n';
  }
}

}  // namespace edgc
