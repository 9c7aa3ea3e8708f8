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

#include "edgc/pipeline_sim.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "edgc/errors.hpp"
#include "edgc/text_io.hpp"

namespace edgc {

double StageSpec::matrix_elements() const {
  double e = 0.0;
  for (const auto& m : matrices) e += static_cast<double>(m.elements());
  return e;
}

double StageSpec::rank_elements() const {
  double e = 0.0;
  for (const auto& m : matrices) e += static_cast<double>(m.rows + m.cols);
  return e;
}

std::int64_t StageSpec::max_rank() const {
  if (matrices.empty()) return 0;
  std::int64_t k = matrices.front().min_dim();
  for (const auto& m : matrices) k = std::min(k, m.min_dim());
  return k;
}

double PipelineConfig::stage_bytes(int stage) const {
  const auto& s = stages.at(static_cast<std::size_t>(stage));
  return comm_model.element_size * (s.matrix_elements() + static_cast<double>(s.extra_elements));
}

double PipelineConfig::mean_backward() const {
  double acc = 0.0;
  for (const auto& s : stages) acc += s.t_backward;
  return stages.empty() ? 0.0 : acc / static_cast<double>(stages.size());
}

void PipelineConfig::validate() const {
  if (stages.empty()) throw RangeError("pipeline needs at least one stage");
  if (micro_batches < 1) throw RangeError("micro_batches must be positive");
  if (dp_degree < 1) throw RangeError("dp_degree must be positive");
  if (!(comm_model.bandwidth > 0.0)) throw RangeError("bandwidth must be positive");
  if (!(comm_model.element_size > 0.0)) throw RangeError("element_size must be positive");
  for (const auto& s : stages) {
    if (s.t_forward < 0.0 || s.t_backward < 0.0) throw RangeError("stage times must be non-negative");
    if (s.compressible_fraction < 0.0 || s.compressible_fraction > 1.0) {
      throw RangeError("compressible_fraction must lie in [0, 1]");
    }
    for (const auto& m : s.matrices) {
      if (m.rows < 1 || m.cols < 1) throw RangeError("matrix shapes must be positive");
    }
  }
}

std::vector<ComputeEvent> simulate_compute(const PipelineConfig& cfg) {
  cfg.validate();
  const int S = cfg.num_stages();
  const int M = cfg.micro_batches;

  // Per-stage 1F1B order: warm-up forwards, steady F/B pairs, cool-down backwards.
  std::vector<std::vector<ComputeEvent>> order(static_cast<std::size_t>(S));
  for (int s = 0; s < S; ++s) {
    auto& ops = order[static_cast<std::size_t>(s)];
    const int warm = std::min(S - s - 1, M);
    int next_f = 0;
    int next_b = 0;
    for (; next_f < warm; ++next_f) ops.push_back({s, next_f, false, 0.0, 0.0});
    while (next_f < M) {
      ops.push_back({s, next_f++, false, 0.0, 0.0});
      ops.push_back({s, next_b++, true, 0.0, 0.0});
    }
    while (next_b < M) ops.push_back({s, next_b++, true, 0.0, 0.0});
  }

  const double nan = std::nan("");
  std::vector<std::vector<double>> f_done(static_cast<std::size_t>(S), std::vector<double>(static_cast<std::size_t>(M), nan));
  std::vector<std::vector<double>> b_done = f_done;
  std::vector<std::size_t> cursor(static_cast<std::size_t>(S), 0);
  std::vector<double> free_at(static_cast<std::size_t>(S), 0.0);

  std::vector<ComputeEvent> out;
  out.reserve(static_cast<std::size_t>(2 * S * M));
  bool progress = true;
  while (progress) {
    progress = false;
    for (int s = 0; s < S; ++s) {
      const auto su = static_cast<std::size_t>(s);
      while (cursor[su] < order[su].size()) {
        ComputeEvent ev = order[su][cursor[su]];
        const auto j = static_cast<std::size_t>(ev.micro_batch);
        double ready = 0.0;
        if (!ev.backward) {
          if (s > 0) ready = f_done[su - 1][j];
        } else {
          ready = s + 1 < S ? b_done[su + 1][j] : f_done[su][j];
        }
        if (std::isnan(ready)) break;
        const auto& spec = cfg.stages[su];
        ev.start = std::max(free_at[su], ready);
        ev.finish = ev.start + (ev.backward ? spec.t_backward : spec.t_forward);
        free_at[su] = ev.finish;
        (ev.backward ? b_done : f_done)[su][j] = ev.finish;
        out.push_back(ev);
        ++cursor[su];
        progress = true;
      }
    }
  }
  for (int s = 0; s < S; ++s) {
    if (cursor[static_cast<std::size_t>(s)] != order[static_cast<std::size_t>(s)].size()) {
      throw std::logic_error("1F1B schedule deadlocked");
    }
  }
  return out;
}

namespace {

void check_stage_rank(const PipelineConfig& cfg, int stage, std::int64_t rank) {
  const auto& s = cfg.stages.at(static_cast<std::size_t>(stage));
  const std::int64_t cap = s.max_rank();
  if (rank < 1 || rank > cap) {
    throw RangeError("stage " + std::to_string(stage + 1) + " rank " + std::to_string(rank) +
                     " outside [1, " + std::to_string(cap) + "]");
  }
}

}  // namespace

double stage_comm_bytes(const PipelineConfig& cfg, int stage, std::int64_t rank) {
  const auto& s = cfg.stages.at(static_cast<std::size_t>(stage));
  if (rank == 0) return cfg.stage_bytes(stage);
  const double f = s.compressible_fraction;
  const double elements = f * static_cast<double>(rank) * s.rank_elements() +
                          (1.0 - f) * s.matrix_elements() + static_cast<double>(s.extra_elements);
  return cfg.comm_model.element_size * elements;
}

double stage_comm_duration(const PipelineConfig& cfg, int stage, std::int64_t rank) {
  const double bytes = stage_comm_bytes(cfg, stage, rank);
  double t = bytes / cfg.comm_model.bandwidth;
  if (rank > 0) t += cfg.comm_model.compress_cost.at(rank) + cfg.comm_model.decompress_cost.at(rank);
  return t;
}

StageTimings simulate_iteration(const PipelineConfig& cfg,
                                std::optional<std::span<const std::int64_t>> ranks) {
  const int S = cfg.num_stages();
  if (ranks && static_cast<int>(ranks->size()) != S) {
    throw RangeError("rank vector has " + std::to_string(ranks->size()) + " entries for " +
                     std::to_string(S) + " stages");
  }
  const auto events = simulate_compute(cfg);
  StageTimings out(static_cast<std::size_t>(S));
  for (const auto& ev : events) {
    auto& t = out[static_cast<std::size_t>(ev.stage)];
    if (ev.backward) t.backprop_finish = std::max(t.backprop_finish, ev.finish);
  }
  for (int s = 0; s < S; ++s) {
    auto& t = out[static_cast<std::size_t>(s)];
    std::int64_t r = 0;
    if (ranks) {
      r = (*ranks)[static_cast<std::size_t>(s)];
      check_stage_rank(cfg, s, r);
    }
    t.rank_used = r;
    t.comm_start = t.backprop_finish;
    t.comm_duration = stage_comm_duration(cfg, s, r);
    t.comm_finish = t.comm_start + t.comm_duration;
    t.comm_bytes = stage_comm_bytes(cfg, s, r);
  }
  return out;
}

double iteration_time(const StageTimings& t) {
  double m = 0.0;
  for (const auto& s : t) m = std::max(m, s.comm_finish);
  return m;
}

RankBounds pipeline_rank_bounds(const PipelineConfig& cfg) {
  cfg.validate();
  std::int64_t r_max = -1;
  for (int s = 0; s < cfg.num_stages(); ++s) {
    const auto& spec = cfg.stages[static_cast<std::size_t>(s)];
    if (spec.matrices.empty() || spec.compressible_fraction == 0.0) {
      throw InfeasibleCompressionError("stage " + std::to_string(s + 1) + " has nothing to compress");
    }
    // Only the compressible share enters the inequality; the rest is sent
    // dense either way and cancels on both sides.
    CommModel m = cfg.comm_model;
    m.element_size *= spec.compressible_fraction;
    const double original = m.element_size * spec.matrix_elements();
    const RankBounds b = compute_rank_bounds(m, original, spec.matrices);
    r_max = r_max < 0 ? b.r_max : std::min(r_max, b.r_max);
  }
  RankBounds out;
  out.r_max = r_max;
  out.r_min = std::clamp<std::int64_t>(std::llround(static_cast<double>(r_max) / 5.0), 1, r_max);
  return out;
}

CommModel calibrate_from_simulator(const PipelineConfig& cfg, int stage,
                                   std::span<const std::int64_t> ranks) {
  std::vector<Measurement> pts;
  pts.reserve(ranks.size());
  for (auto r : ranks) {
    check_stage_rank(cfg, stage, r);
    pts.push_back({r, stage_comm_duration(cfg, stage, r)});
  }
  return calibrate_comm_model(pts, cfg.comm_model);
}

double TimelineReport::comm_reduction() const {
  return baseline_comm_seconds > 0.0 ? 1.0 - total_comm_seconds / baseline_comm_seconds : 0.0;
}

namespace {

double comm_seconds(const StageTimings& t) {
  double acc = 0.0;
  for (const auto& s : t) acc += s.comm_duration;
  return acc;
}

double comm_bytes(const StageTimings& t) {
  double acc = 0.0;
  for (const auto& s : t) acc += s.comm_bytes;
  return acc;
}

const MatrixShape& reference_shape(const StageSpec& s) {
  return *std::max_element(s.matrices.begin(), s.matrices.end(),
                           [](const MatrixShape& a, const MatrixShape& b) { return a.elements() < b.elements(); });
}

}  // namespace

TimelineReport simulate_training(const PipelineConfig& cfg, const TrainingSimOptions& options,
                                 std::span<const double> entropy_stream) {
  cfg.validate();
  const int S = cfg.num_stages();
  const std::uint64_t w = options.controller.window;
  if (w == 0) throw RangeError("window size must be positive");

  TimelineReport report;
  const StageTimings baseline = simulate_iteration(cfg);

  std::optional<GTable> table;
  CommModel model = cfg.comm_model;
  RankControllerState ctl;
  try {
    report.bounds = pipeline_rank_bounds(cfg);
    if (options.calibrated) {
      model = *options.calibrated;
    } else {
      const std::int64_t lo = report.bounds.r_min;
      const std::int64_t hi = report.bounds.r_max;
      const std::vector<std::int64_t> sweep = {lo, (lo + hi) / 2, hi};
      std::vector<std::int64_t> distinct(sweep.begin(), sweep.end());
      distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
      if (distinct.size() < 2) distinct = {1, std::max<std::int64_t>(2, hi)};
      model = calibrate_from_simulator(cfg, 0, distinct);
    }
    const auto& ref = reference_shape(cfg.stages.front());
    table.emplace(GTable::for_shape(ref.rows, ref.cols, options.g_trials, options.seed));
    ControllerConfig cc = options.controller;
    if (cc.total_iterations == 0) cc.total_iterations = w * entropy_stream.size();
    ctl = RankControllerState::make(cc, report.bounds);
  } catch (const InfeasibleCompressionError& e) {
    report.compression_disabled = true;
    report.disabled_reason = e.what();
  }
  report.eta = model.eta;

  const double t_micro_back = cfg.mean_backward();
  std::vector<std::int64_t> ranks;  // empty: uncompressed
  for (std::size_t k = 0; k < entropy_stream.size(); ++k) {
    WindowRecord rec;
    rec.window_index = k;
    rec.first_iteration = k * w;
    rec.iterations = w;
    rec.mean_entropy = entropy_stream[k];
    rec.phase = ranks.empty() ? Phase::kWarmup : Phase::kActive;
    rec.stage_ranks = ranks;
    if (ranks.empty()) {
      rec.timings = baseline;
    } else {
      rec.timings = simulate_iteration(cfg, std::span<const std::int64_t>(ranks));
      for (int s = 0; s < S; ++s) {
        const auto su = static_cast<std::size_t>(s);
        if (rec.timings[su].comm_duration > baseline[su].comm_duration * (1.0 + 1e-9)) {
          throw std::logic_error("compressed communication slower than uncompressed on stage " +
                                 std::to_string(s + 1));
        }
      }
    }
    rec.iteration_time = iteration_time(rec.timings);

    const auto dw = static_cast<double>(w);
    report.total_comm_seconds += dw * comm_seconds(rec.timings);
    report.total_comm_bytes += dw * comm_bytes(rec.timings);
    report.total_iteration_seconds += dw * rec.iteration_time;
    report.baseline_comm_seconds += dw * comm_seconds(baseline);
    report.baseline_comm_bytes += dw * comm_bytes(baseline);
    report.baseline_iteration_seconds += dw * iteration_time(baseline);

    ControllerLogEntry entry;
    entry.window_index = k;
    entry.mean_entropy = entropy_stream[k];
    if (!report.compression_disabled) {
      const double h = entropy_stream[k];
      if (ctl.phase == Phase::kWarmup) {
        if (warmup_step(ctl, h, (k + 1) * w, *table) == Phase::kActive) {
          ranks = align_stage_ranks(ctl.r_prev, model, t_micro_back, S, ctl.bounds);
          entry.predicted_comm_seconds = model.predict(ctl.r_prev);
        }
      } else {
        const RankDecision d = adjust_rank_window(ctl, h, *table, model);
        ranks = align_stage_ranks(d.rank, model, t_micro_back, S, ctl.bounds);
        entry.predicted_comm_seconds = d.predicted_comm_seconds;
      }
      entry.stage_ranks = ranks;
    }
    report.decisions.push_back(std::move(entry));
    report.windows.push_back(std::move(rec));
  }
  return report;
}

void write_timeline_csv(std::ostream& out, const TimelineReport& report) {
  out << "iteration,stage,comm_start,comm_finish,rank\n";
  for (const auto& w : report.windows) {
    for (std::size_t s = 0; s < w.timings.size(); ++s) {
      const auto& t = w.timings[s];
      out << w.first_iteration << ',' << (s + 1) << ',' << format_double(t.comm_start) << ','
          << format_double(t.comm_finish) << ',' << t.rank_used << '\n';
    }
  }
}

}  // namespace edgc
