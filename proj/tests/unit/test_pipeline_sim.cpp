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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "edgc/errors.hpp"
#include "edgc/pipeline_sim.hpp"

namespace edgc {
namespace {

PipelineConfig uniform_pipeline(int stages, int micro, double tf, double tb) {
  PipelineConfig cfg;
  cfg.micro_batches = micro;
  cfg.comm_model.bandwidth = 1.0e9;
  cfg.comm_model.element_size = 4.0;
  StageSpec s;
  s.t_forward = tf;
  s.t_backward = tb;
  s.matrices = {{512, 512}, {512, 1024}};
  cfg.stages.assign(static_cast<std::size_t>(stages), s);
  return cfg;
}

// Independent 1F1B timeline: per-stage op lists relaxed to a fixed point.
std::vector<double> enumerate_backprop_finish(const PipelineConfig& cfg) {
  const int S = cfg.num_stages();
  const int M = cfg.micro_batches;
  struct Op {
    bool backward;
    int mb;
  };
  std::vector<std::vector<Op>> ops(static_cast<std::size_t>(S));
  for (int s = 0; s < S; ++s) {
    const int warm = std::min(S - 1 - s, M);
    std::vector<Op> seq;
    for (int i = 0; i < warm; ++i) seq.push_back({false, i});
    for (int i = warm; i < M; ++i) {
      seq.push_back({false, i});
      seq.push_back({true, i - warm});
    }
    for (int i = M - warm; i < M; ++i) seq.push_back({true, i});
    ops[static_cast<std::size_t>(s)] = seq;
  }
  std::map<std::tuple<int, bool, int>, double> finish;
  for (int s = 0; s < S; ++s) {
    for (const auto& op : ops[static_cast<std::size_t>(s)]) finish[{s, op.backward, op.mb}] = 0.0;
  }
  bool changed = true;
  while (changed) {
    changed = false;
    for (int s = 0; s < S; ++s) {
      double prev = 0.0;
      const auto& spec = cfg.stages[static_cast<std::size_t>(s)];
      for (const auto& op : ops[static_cast<std::size_t>(s)]) {
        double dep = 0.0;
        if (!op.backward && s > 0) dep = finish[{s - 1, false, op.mb}];
        if (op.backward) dep = s + 1 < S ? finish[{s + 1, true, op.mb}] : finish[{s, false, op.mb}];
        const double f = std::max(prev, dep) + (op.backward ? spec.t_backward : spec.t_forward);
        double& slot = finish[{s, op.backward, op.mb}];
        if (f != slot) {
          slot = f;
          changed = true;
        }
        prev = f;
      }
    }
  }
  std::vector<double> out(static_cast<std::size_t>(S), 0.0);
  for (const auto& [key, f] : finish) {
    if (std::get<1>(key)) out[static_cast<std::size_t>(std::get<0>(key))] = std::max(out[static_cast<std::size_t>(std::get<0>(key))], f);
  }
  return out;
}

double finish_spread(const StageTimings& t) {
  double lo = t.front().comm_finish;
  double hi = lo;
  for (const auto& s : t) {
    lo = std::min(lo, s.comm_finish);
    hi = std::max(hi, s.comm_finish);
  }
  return hi - lo;
}

TEST(SimulateIterationTest, SingleStageBackwardOnly) {
  const auto cfg = uniform_pipeline(1, 6, 0.0, 0.25);
  const StageTimings t = simulate_iteration(cfg);
  ASSERT_EQ(t.size(), 1u);
  EXPECT_DOUBLE_EQ(t[0].backprop_finish, 6 * 0.25);
  EXPECT_DOUBLE_EQ(t[0].comm_start, t[0].backprop_finish);
  EXPECT_DOUBLE_EQ(t[0].comm_duration, cfg.stage_bytes(0) / 1.0e9);
}

TEST(SimulateIterationTest, SingleStageIncludesForwardTime) {
  const auto cfg = uniform_pipeline(1, 6, 0.1, 0.25);
  EXPECT_NEAR(simulate_iteration(cfg)[0].backprop_finish, 6 * 0.35, 1e-12);
}

TEST(SimulateIterationTest, MatchesEventEnumeration) {
  for (int S : {1, 2, 3, 4, 6}) {
    for (int M : {1, 3, 4, 8, 12}) {
      auto cfg = uniform_pipeline(S, M, 0.011, 0.023);
      // Heterogeneous stages too.
      if (S > 2) cfg.stages[1].t_backward = 0.031;
      const auto got = simulate_iteration(cfg);
      const auto want = enumerate_backprop_finish(cfg);
      for (int s = 0; s < S; ++s) {
        EXPECT_NEAR(got[static_cast<std::size_t>(s)].backprop_finish, want[static_cast<std::size_t>(s)], 1e-12)
            << "S=" << S << " M=" << M << " stage " << s;
      }
    }
  }
}

TEST(SimulateIterationTest, UniformRanksSpreadIsThreeMicroBackwards) {
  const auto cfg = uniform_pipeline(4, 8, 0.002, 0.005);
  const std::vector<std::int64_t> ranks(4, 32);
  const StageTimings t = simulate_iteration(cfg, ranks);
  EXPECT_NEAR(finish_spread(t), 3 * 0.005, 1e-12);
  for (std::size_t s = 1; s < 4; ++s) EXPECT_NEAR(t[s - 1].backprop_finish - t[s].backprop_finish, 0.005, 1e-12);
  for (const auto& st : t) {
    EXPECT_GE(st.comm_start, st.backprop_finish);
    EXPECT_DOUBLE_EQ(st.comm_finish, st.comm_start + st.comm_duration);
    EXPECT_EQ(st.rank_used, 32);
  }
}

TEST(SimulateIterationTest, AlignedRanksEqualiseFinishTimes) {
  auto cfg = uniform_pipeline(4, 8, 0.0002, 0.0005);
  cfg.comm_model.compress_cost = {0.0, 2.0e-6};
  const std::vector<std::int64_t> sweep{8, 64, 128};
  const CommModel model = calibrate_from_simulator(cfg, 0, sweep);
  const auto ranks = align_stage_ranks(24, model, cfg.mean_backward(), 4, {1, 512});
  const StageTimings t = simulate_iteration(cfg, ranks);
  EXPECT_LE(finish_spread(t), model.eta);
  EXPECT_GT(ranks.back(), ranks.front());
}

TEST(SimulateIterationTest, IterationTimeMonotoneInRank) {
  const auto cfg = uniform_pipeline(3, 4, 0.001, 0.002);
  std::vector<std::int64_t> r{64, 64, 64};
  double prev = iteration_time(simulate_iteration(cfg, r));
  for (std::size_t s : {2u, 0u, 1u, 0u}) {
    r[s] -= 16;
    const double now = iteration_time(simulate_iteration(cfg, r));
    EXPECT_LE(now, prev);
    prev = now;
  }
}

TEST(SimulateIterationTest, RankValidation) {
  const auto cfg = uniform_pipeline(2, 4, 0.001, 0.002);
  EXPECT_THROW(simulate_iteration(cfg, std::vector<std::int64_t>{0, 4}), RangeError);
  EXPECT_THROW(simulate_iteration(cfg, std::vector<std::int64_t>{4, 513}), RangeError);
  EXPECT_THROW(simulate_iteration(cfg, std::vector<std::int64_t>{4}), RangeError);
  PipelineConfig bad = cfg;
  bad.stages[0].t_forward = -1.0;
  EXPECT_THROW(simulate_iteration(bad), RangeError);
}

TEST(StageCommTest, CompressibleFraction) {
  auto cfg = uniform_pipeline(1, 1, 0.0, 1.0);
  cfg.stages[0].extra_elements = 100;
  cfg.stages[0].compressible_fraction = 0.25;
  const double mat = 512.0 * 512 + 512.0 * 1024;
  const double per_rank = 1024.0 + 1536.0;
  EXPECT_DOUBLE_EQ(stage_comm_bytes(cfg, 0, 0), 4.0 * (mat + 100));
  EXPECT_DOUBLE_EQ(stage_comm_bytes(cfg, 0, 10), 4.0 * (0.25 * 10 * per_rank + 0.75 * mat + 100));
}

TEST(RankBoundsPipelineTest, RMaxSatisfiesInequalityOnEveryStage) {
  auto cfg = uniform_pipeline(3, 4, 0.001, 0.002);
  cfg.stages[1].matrices = {{256, 2048}};
  cfg.comm_model.compress_cost = {1e-4, 1e-6};
  const RankBounds b = pipeline_rank_bounds(cfg);
  const std::vector<std::int64_t> ranks(3, b.r_max);
  const auto t = simulate_iteration(cfg, ranks);
  const auto base = simulate_iteration(cfg);
  for (std::size_t s = 0; s < 3; ++s) EXPECT_LE(t[s].comm_duration, base[s].comm_duration);
}

std::vector<double> decaying(std::size_t windows, double start, double step) {
  std::vector<double> h(windows);
  for (std::size_t k = 0; k < windows; ++k) h[k] = start - step * static_cast<double>(k);
  return h;
}

TrainingSimOptions options(std::uint64_t window) {
  TrainingSimOptions o;
  o.controller.window = window;
  o.g_trials = 16;
  return o;
}

TEST(SimulateTrainingTest, WarmupOnlyMatchesBaseline) {
  const auto cfg = uniform_pipeline(4, 8, 0.0002, 0.0005);
  const std::vector<double> flat(12, 1.3);
  const TimelineReport r = simulate_training(cfg, options(100), flat);
  EXPECT_EQ(r.total_comm_bytes, r.baseline_comm_bytes);
  EXPECT_EQ(r.total_comm_seconds, r.baseline_comm_seconds);
  EXPECT_EQ(r.comm_reduction(), 0.0);
  for (const auto& w : r.windows) EXPECT_EQ(w.phase, Phase::kWarmup);
}

TEST(SimulateTrainingTest, DecreasingEntropyGivesNonIncreasingRanks) {
  const auto cfg = uniform_pipeline(4, 8, 0.0002, 0.0005);
  const auto h = decaying(40, 2.0, 0.1);
  const TimelineReport r = simulate_training(cfg, options(100), h);
  std::int64_t prev = std::numeric_limits<std::int64_t>::max();
  bool reached_floor = false;
  for (const auto& d : r.decisions) {
    if (d.stage_ranks.empty()) continue;
    const std::int64_t r1 = d.stage_ranks.front();
    EXPECT_LE(r1, prev);
    if (reached_floor) EXPECT_EQ(r1, r.bounds.r_min);
    if (r1 == r.bounds.r_min) reached_floor = true;
    prev = r1;
  }
  EXPECT_TRUE(reached_floor);
}

TEST(SimulateTrainingTest, CalibratedConfigCutsCommByFortyPercent) {
  auto cfg = uniform_pipeline(4, 8, 0.0001, 0.0002);
  cfg.comm_model.compress_cost = {2e-5, 1e-7};
  cfg.comm_model.decompress_cost = {1e-5, 5e-8};
  const auto h = decaying(80, 1.5, 0.08);
  const TimelineReport r = simulate_training(cfg, options(1000), h);
  EXPECT_FALSE(r.compression_disabled);
  EXPECT_GE(r.comm_reduction(), 0.40);
  EXPECT_NEAR(r.comm_reduction(), 1.0 - r.total_comm_seconds / r.baseline_comm_seconds, 1e-15);
}

TEST(SimulateTrainingTest, ByteAccountingIdentity) {
  auto cfg = uniform_pipeline(3, 4, 0.0002, 0.0005);
  cfg.stages[2].extra_elements = 4096;
  const auto h = decaying(20, 1.0, 0.1);
  const TimelineReport r = simulate_training(cfg, options(50), h);
  double expect = 0.0;
  for (const auto& w : r.windows) {
    for (std::size_t s = 0; s < cfg.stages.size(); ++s) {
      const auto& spec = cfg.stages[s];
      double elements = static_cast<double>(spec.extra_elements);
      if (w.stage_ranks.empty()) {
        for (const auto& m : spec.matrices) elements += static_cast<double>(m.rows * m.cols);
      } else {
        for (const auto& m : spec.matrices) elements += static_cast<double>(w.stage_ranks[s] * (m.rows + m.cols));
      }
      expect += static_cast<double>(w.iterations) * 4.0 * elements;
    }
  }
  EXPECT_NEAR(r.total_comm_bytes, expect, 1e-9 * expect);
}

TEST(SimulateTrainingTest, InfeasibleCompressionRunsUncompressed) {
  auto cfg = uniform_pipeline(2, 4, 0.001, 0.002);
  cfg.comm_model.compress_cost = {10.0, 0.0};
  const TimelineReport r = simulate_training(cfg, options(10), decaying(10, 1.0, 0.3));
  EXPECT_TRUE(r.compression_disabled);
  EXPECT_FALSE(r.disabled_reason.empty());
  EXPECT_EQ(r.total_comm_bytes, r.baseline_comm_bytes);
}

TEST(SimulateTrainingTest, Deterministic) {
  const auto cfg = uniform_pipeline(4, 8, 0.0002, 0.0005);
  const auto h = decaying(15, 1.0, 0.2);
  std::ostringstream a, b;
  write_timeline_csv(a, simulate_training(cfg, options(100), h));
  write_timeline_csv(b, simulate_training(cfg, options(100), h));
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(a.str().substr(0, a.str().find('\n')), "iteration,stage,comm_start,comm_finish,rank");
}

}  // namespace
}  // namespace edgc
