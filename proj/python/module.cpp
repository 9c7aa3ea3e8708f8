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

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "edgc/cli.hpp"
#include "edgc/compressor.hpp"
#include "edgc/cqm.hpp"
#include "edgc/dac.hpp"
#include "edgc/entropy.hpp"
#include "edgc/errors.hpp"
#include "edgc/matrix_core.hpp"
#include "edgc/pipeline_sim.hpp"
#include "edgc/toy_trainer.hpp"

namespace py = pybind11;
using namespace edgc;

namespace {

std::vector<double> as_vector(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  return {a.data(), a.data() + a.size()};
}

BinRule parse_rule(const std::string& rule) {
  if (rule == "fd" || rule == "freedman-diaconis") return BinRule::kFreedmanDiaconis;
  if (rule == "scott") return BinRule::kScott;
  if (rule == "sturges") return BinRule::kSturges;
  throw RangeError("unknown bin rule '" + rule + "' (fd, scott, sturges)");
}

PolicyKind parse_policy(const std::string& kind) {
  if (kind == "none") return PolicyKind::kNone;
  if (kind == "fixed") return PolicyKind::kFixedRank;
  if (kind == "edgc") return PolicyKind::kEdgc;
  throw RangeError("unknown policy '" + kind + "' (none, fixed, edgc)");
}

}  // namespace

PYBIND11_MODULE(_edgc, m) {
  m.doc() = "Entropy-driven low-rank gradient compression: numeric core";

  auto base = py::register_exception<Error>(m, "EdgcError", PyExc_RuntimeError);
  py::register_exception<RangeError>(m, "RangeError", base);
  py::register_exception<DimensionError>(m, "DimensionError", base);
  py::register_exception<DegenerateInputError>(m, "DegenerateInputError", base);
  py::register_exception<NumericError>(m, "NumericError", base);
  py::register_exception<FormatError>(m, "FormatError", base);
  py::register_exception<CalibrationError>(m, "CalibrationError", base);
  py::register_exception<InfeasibleCompressionError>(m, "InfeasibleCompressionError", base);
  py::register_exception<DivergenceError>(m, "DivergenceError", base);

  // Matrices and compression.
  m.def("optimal_rank_r_error", py::overload_cast<const Matrix&, Eigen::Index>(&optimal_rank_r_error),
        py::arg("a"), py::arg("r"));
  m.def("singular_values", &singular_values, py::arg("a"));

  py::class_<CompressorState>(m, "Compressor")
      .def(py::init<Eigen::Index, Eigen::Index, Eigen::Index, std::uint64_t>(), py::arg("rows"), py::arg("cols"),
           py::arg("rank"), py::arg("seed") = 0)
      .def_property_readonly("rank", &CompressorState::rank)
      .def_property_readonly("shape", [](const CompressorState& s) { return py::make_tuple(s.rows(), s.cols()); })
      .def_property_readonly("residual", &CompressorState::residual)
      .def("set_rank", &CompressorState::set_rank, py::arg("rank"))
      .def("reset_residual", &CompressorState::reset_residual)
      .def(
          "compress",
          [](CompressorState& s, const Matrix& g) {
            const LowRankFactors f = compress(g, s);
            return py::make_tuple(f.p, f.q);
          },
          py::arg("gradient"), "One error-feedback power-iteration round; returns (P, Q).");
  m.def(
      "decompress", [](const Matrix& p, const Matrix& q) { return decompress(LowRankFactors{p, q}); },
      py::arg("p"), py::arg("q"));
  m.def("compressed_element_count", &compressed_element_count, py::arg("m"), py::arg("n"), py::arg("r"));

  // Marchenko-Pastur error model and rank laws.
  m.def(
      "mp_support",
      [](std::int64_t rows, std::int64_t cols) {
        const MpSupport s = mp_support(rows, cols);
        return py::make_tuple(s.a, s.b);
      },
      py::arg("m"), py::arg("n"));
  m.def("mp_cdf", py::vectorize([](double lam, std::int64_t rows, std::int64_t cols) { return mp_cdf(lam, rows, cols); }),
        py::arg("lam"), py::arg("m"), py::arg("n"));
  m.def("sample_eigenvalues", &sample_eigenvalues, py::arg("m"), py::arg("n"), py::arg("seed") = 0);

  py::class_<GTable>(m, "GTable")
      .def(py::init<std::int64_t, std::int64_t, int, std::uint64_t>(), py::arg("m"), py::arg("n"),
           py::arg("trials") = GTable::kDefaultTrials, py::arg("seed") = 0)
      .def_static("for_shape", &GTable::for_shape, py::arg("rows"), py::arg("cols"),
                  py::arg("trials") = GTable::kDefaultTrials, py::arg("seed") = 0)
      .def_property_readonly("m", &GTable::m)
      .def_property_readonly("n", &GTable::n)
      .def_property_readonly("g_sq", &GTable::g_sq)
      .def("g", &GTable::g, py::arg("r"))
      .def("invert", [](const GTable& t, double target) { return invert_g(target, t); }, py::arg("target_error"));
  m.def("estimate_g", &estimate_g, py::arg("r"), py::arg("m"), py::arg("n"),
        py::arg("trials") = GTable::kDefaultTrials, py::arg("seed") = 0);
  m.def("rank_from_sigma", &rank_from_sigma, py::arg("r0"), py::arg("sigma0"), py::arg("sigma1"), py::arg("table"));
  m.def("rank_from_entropy", &rank_from_entropy, py::arg("r0"), py::arg("h0"), py::arg("h1"), py::arg("table"));

  // Entropy.
  m.def(
      "entropy_gaussian",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& x) {
        return entropy_gaussian_plugin(as_vector(x));
      },
      py::arg("samples"));
  m.def(
      "entropy_histogram",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& x, const std::string& rule) {
        return entropy_histogram(as_vector(x), parse_rule(rule));
      },
      py::arg("samples"), py::arg("rule") = "fd");
  m.def(
      "subsample_entries",
      [](const Matrix& a, double beta, std::uint64_t seed) { return subsample_entries(GradientMatrix(a), beta, seed); },
      py::arg("a"), py::arg("beta"), py::arg("seed") = 0);

  // Communication model and controller pieces.
  py::class_<LinearCost>(m, "LinearCost")
      .def(py::init([](double fixed, double per_rank) { return LinearCost{fixed, per_rank}; }), py::arg("fixed") = 0.0,
           py::arg("per_rank") = 0.0)
      .def_readwrite("fixed", &LinearCost::fixed)
      .def_readwrite("per_rank", &LinearCost::per_rank);
  py::class_<CommModel>(m, "CommModel")
      .def(py::init<>())
      .def_readwrite("eta", &CommModel::eta)
      .def_readwrite("bandwidth", &CommModel::bandwidth)
      .def_readwrite("element_size", &CommModel::element_size)
      .def_readwrite("compress_cost", &CommModel::compress_cost)
      .def_readwrite("decompress_cost", &CommModel::decompress_cost)
      .def_readwrite("mape", &CommModel::mape)
      .def("predict", &CommModel::predict, py::arg("r"));
  m.def(
      "calibrate_comm_model",
      [](const std::vector<std::int64_t>& ranks, const std::vector<double>& seconds, const CommModel& base) {
        if (ranks.size() != seconds.size()) throw DimensionError("ranks and seconds differ in length");
        std::vector<Measurement> ms;
        for (std::size_t i = 0; i < ranks.size(); ++i) ms.push_back({ranks[i], seconds[i]});
        return calibrate_comm_model(ms, base);
      },
      py::arg("ranks"), py::arg("seconds"), py::arg("base") = CommModel{});
  m.def(
      "compute_rank_bounds",
      [](const CommModel& model, double original_bytes, const std::vector<std::pair<std::int64_t, std::int64_t>>& shapes) {
        std::vector<MatrixShape> s;
        for (auto [r, c] : shapes) s.push_back({r, c});
        const RankBounds b = compute_rank_bounds(model, original_bytes, s);
        return py::make_tuple(b.r_min, b.r_max);
      },
      py::arg("model"), py::arg("original_bytes"), py::arg("shapes"));
  m.def("clamp_step", &clamp_step, py::arg("r_prev"), py::arg("r_proposed"), py::arg("step_limit"));
  m.def(
      "align_stage_ranks",
      [](std::int64_t r1, const CommModel& model, double t_micro_back, int stages, std::int64_t r_min,
         std::int64_t r_max) { return align_stage_ranks(r1, model, t_micro_back, stages, {r_min, r_max}); },
      py::arg("r_s1"), py::arg("model"), py::arg("t_micro_back"), py::arg("num_stages"), py::arg("r_min"),
      py::arg("r_max"));

  // Pipeline simulator.
  py::class_<StageSpec>(m, "StageSpec")
      .def(py::init<>())
      .def_readwrite("t_forward", &StageSpec::t_forward)
      .def_readwrite("t_backward", &StageSpec::t_backward)
      .def_readwrite("extra_elements", &StageSpec::extra_elements)
      .def_readwrite("compressible_fraction", &StageSpec::compressible_fraction)
      .def_property(
          "matrices",
          [](const StageSpec& s) {
            std::vector<std::pair<std::int64_t, std::int64_t>> out;
            for (const auto& x : s.matrices) out.emplace_back(x.rows, x.cols);
            return out;
          },
          [](StageSpec& s, const std::vector<std::pair<std::int64_t, std::int64_t>>& v) {
            s.matrices.clear();
            for (auto [r, c] : v) s.matrices.push_back({r, c});
          });
  py::class_<PipelineConfig>(m, "PipelineConfig")
      .def(py::init<>())
      .def_readwrite("micro_batches", &PipelineConfig::micro_batches)
      .def_readwrite("dp_degree", &PipelineConfig::dp_degree)
      .def_readwrite("stages", &PipelineConfig::stages)
      .def_readwrite("comm_model", &PipelineConfig::comm_model)
      .def("mean_backward", &PipelineConfig::mean_backward);
  py::class_<StageTiming>(m, "StageTiming")
      .def_readonly("backprop_finish", &StageTiming::backprop_finish)
      .def_readonly("comm_start", &StageTiming::comm_start)
      .def_readonly("comm_duration", &StageTiming::comm_duration)
      .def_readonly("comm_finish", &StageTiming::comm_finish)
      .def_readonly("rank_used", &StageTiming::rank_used)
      .def_readonly("comm_bytes", &StageTiming::comm_bytes);
  m.def(
      "simulate_iteration",
      [](const PipelineConfig& cfg, std::optional<std::vector<std::int64_t>> ranks) {
        if (!ranks) return simulate_iteration(cfg);
        return simulate_iteration(cfg, std::span<const std::int64_t>(*ranks));
      },
      py::arg("config"), py::arg("ranks") = py::none());
  m.def(
      "simulate_training",
      [](const PipelineConfig& cfg, const std::vector<double>& entropy, std::uint64_t window, std::int64_t step_limit,
         double warmup_floor, std::uint64_t seed) {
        TrainingSimOptions o;
        o.controller.window = window;
        o.controller.step_limit = step_limit;
        o.controller.warmup_floor = warmup_floor;
        o.seed = seed;
        const TimelineReport r = simulate_training(cfg, o, entropy);
        py::list ranks;
        for (const auto& w : r.windows) ranks.append(w.stage_ranks);
        py::dict d;
        d["total_comm_seconds"] = r.total_comm_seconds;
        d["baseline_comm_seconds"] = r.baseline_comm_seconds;
        d["total_comm_bytes"] = r.total_comm_bytes;
        d["baseline_comm_bytes"] = r.baseline_comm_bytes;
        d["comm_reduction"] = r.comm_reduction();
        d["r_min"] = r.bounds.r_min;
        d["r_max"] = r.bounds.r_max;
        d["eta"] = r.eta;
        d["window_ranks"] = ranks;
        d["compression_disabled"] = r.compression_disabled;
        return d;
      },
      py::arg("config"), py::arg("entropy_per_window"), py::arg("window") = 1000, py::arg("step_limit") = 8,
      py::arg("warmup_floor") = 0.10, py::arg("seed") = 0);

  // Toy trainer.
  m.def(
      "train_toy",
      [](int steps, int dp_workers, double learning_rate, const std::string& policy, std::int64_t rank,
         int samples, std::uint64_t seed) {
        ToyTrainConfig cfg;
        cfg.steps = steps;
        cfg.dp_workers = dp_workers;
        cfg.learning_rate = learning_rate;
        cfg.data.samples = samples;
        cfg.policy.kind = parse_policy(policy);
        cfg.policy.rank = rank;
        cfg.seed = seed;
        ToyTrainResult r;
        {
          py::gil_scoped_release release;
          r = train_toy(cfg);
        }
        std::vector<double> bytes;
        std::vector<std::int64_t> ranks;
        for (const auto& e : r.ledger) {
          bytes.push_back(e.bytes);
          ranks.push_back(e.rank);
        }
        py::dict d;
        d["loss"] = r.loss;
        d["bytes"] = bytes;
        d["rank"] = ranks;
        d["total_bytes"] = r.total_bytes;
        d["uncompressed_bytes"] = r.uncompressed_bytes;
        d["warmup_end_step"] = r.warmup_end_step;
        return d;
      },
      py::arg("steps") = 2000, py::arg("dp_workers") = 4, py::arg("learning_rate") = 0.2, py::arg("policy") = "none",
      py::arg("rank") = 0, py::arg("samples") = 1024, py::arg("seed") = 0);

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = run_cli(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs an edgc subcommand in-process; returns (exit_code, stdout, stderr).");
}
