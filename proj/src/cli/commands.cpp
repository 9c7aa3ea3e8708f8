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

#include "edgc/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "config.hpp"

#include "edgc/compressor.hpp"
#include "edgc/cqm.hpp"
#include "edgc/errors.hpp"
#include "edgc/rng.hpp"
#include "edgc/text_io.hpp"
#include "edgc/trace.hpp"

namespace edgc {
namespace {

using cli::json;
namespace fs = std::filesystem;

// Options shared by every subcommand.
struct CommonFlags {
  std::string config;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
};

void add_common(CLI::App* sub, CommonFlags& f, bool with_output_dir = true) {
  sub->add_option("-c,--config", f.config, "JSON run configuration");
  sub->add_option("--set", f.overrides, "Override a config key, e.g. --set controller.window=500");
  sub->add_option("--seed", f.seed, "Top-level seed (beats EDGC_SEED and the config)");
  if (with_output_dir) sub->add_option("-o,--output-dir", f.output_dir, "Directory for output files");
}

// Config file, then --set overrides, then named flags, with the seed taken
// from --seed, else EDGC_SEED, else the document.
json assemble(const CommonFlags& f, const std::vector<std::pair<std::string, json>>& named) {
  json doc = f.config.empty() ? json::object() : cli::read_json_file(f.config);
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& o : f.overrides) cli::apply_override(doc, o);
  for (const auto& [key, value] : named) doc[key] = value;
  if (f.output_dir) doc["output_dir"] = *f.output_dir;
  if (f.seed) {
    doc["seed"] = *f.seed;
  } else if (const char* env = std::getenv("EDGC_SEED"); env != nullptr && *env != '\0') {
    try {
      std::size_t used = 0;
      const unsigned long long v = std::stoull(env, &used);
      if (used != std::string(env).size()) throw std::invalid_argument(env);
      doc["seed"] = static_cast<std::uint64_t>(v);
    } catch (const std::exception&) {
      throw ConfigError(std::string("EDGC_SEED is not an unsigned integer: '") + env + "'");
    }
  }
  return doc;
}

fs::path prepare_dir(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw ConfigError("cannot create output directory '" + dir + "': " + ec.message());
  return p;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write '" + path.string() + "'");
  return f;
}

void write_json(const fs::path& path, const json& j) {
  auto f = open_out(path);
  f << j.dump(2) << '\n';
}

std::string percent(double fraction) { return format_double(100.0 * fraction) + "%"; }

// ---- calibrate ----

std::vector<Measurement> measure_compressor(const cli::CalibrateRun& run, CommModel& model) {
  const auto& sw = run.sweep;
  if (sw.ranks.size() < 2) throw CalibrationError("measure mode needs at least two ranks");
  Rng rng = make_rng(run.seed, seed_stream::kCalibrationNoise);
  const Matrix g = gaussian_matrix(sw.rows, sw.cols, rng);

  std::vector<Measurement> total, comp, decomp;
  for (std::int64_t r : sw.ranks) {
    CompressorState state(sw.rows, sw.cols, r, run.seed);
    Matrix sink = decompress(compress(g, state));  // warm caches and allocations
    std::vector<double> tc, td;
    for (int k = 0; k < sw.repeats; ++k) {
      const auto t0 = std::chrono::steady_clock::now();
      const LowRankFactors f = compress(g, state);
      const auto t1 = std::chrono::steady_clock::now();
      sink = decompress(f);
      const auto t2 = std::chrono::steady_clock::now();
      tc.push_back(std::chrono::duration<double>(t1 - t0).count());
      td.push_back(std::chrono::duration<double>(t2 - t1).count());
    }
    if (!all_finite(sink)) throw CalibrationError("compressor produced non-finite output");
    auto median = [](std::vector<double>& v) {
      std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2), v.end());
      return v[v.size() / 2];
    };
    const double c = median(tc);
    const double d = median(td);
    // No network here: the transfer leg is modelled from the link bandwidth.
    const double wire = static_cast<double>(compressed_element_count(sw.rows, sw.cols, r)) *
                        model.element_size / model.bandwidth;
    comp.push_back({r, c});
    decomp.push_back({r, d});
    total.push_back({r, c + wire + d});
  }
  model.compress_cost = fit_linear_cost(comp);
  model.decompress_cost = fit_linear_cost(decomp);
  return total;
}

int cmd_calibrate(const cli::CalibrateRun& run, std::ostream& out) {
  CommModel base;
  base.bandwidth = run.bandwidth;
  base.element_size = run.element_size;
  std::vector<Measurement> meas;
  CommModel model;
  if (run.mode == "csv") {
    meas = read_measurements_csv(run.measurements);
    model = calibrate_comm_model(meas, base);
  } else if (run.mode == "measure") {
    meas = measure_compressor(run, base);
    model = calibrate_comm_model(meas, base);
  } else {
    const int stage = run.stage;
    model = calibrate_from_simulator(run.pipeline, stage, run.sweep.ranks);
    for (std::int64_t r : run.sweep.ranks) meas.push_back({r, stage_comm_duration(run.pipeline, stage, r)});
  }

  json j = cli::comm_model_to_json(model);
  j["mode"] = run.mode;
  json rows = json::array();
  for (const auto& m : meas) rows.push_back({{"rank", m.rank}, {"seconds", m.seconds}});
  j["measurements"] = rows;
  const fs::path dir = prepare_dir(run.output_dir);
  write_json(dir / "comm_model.json", j);
  out << "eta " << format_double(model.eta) << " s/rank, MAPE " << percent(model.mape) << '\n';
  return kExitOk;
}

// ---- simulate ----

std::vector<double> window_entropies(const cli::SimulateRun& run) {
  if (run.entropy.kind == "values") return run.entropy.values;
  const std::uint64_t w = run.controller.window;
  const std::uint64_t windows = run.controller.total_iterations / w;
  SynthSchedule schedule = run.entropy.schedule;
  schedule.seed = run.seed;
  const SynthStream stream(schedule);
  SamplerConfig sc = run.sampler;
  sc.rng_seed = run.seed;
  GradientDataSampler sampler(sc, w);
  std::vector<double> out;
  out.reserve(windows);
  for (std::uint64_t it = 0; it < windows * w; ++it) {
    std::optional<EntropyWindow> closed;
    if (should_sample_iteration(it, sc.isr)) {
      const auto layers = stream.at(it);
      closed = sampler.observe(it, layers);
    } else {
      closed = sampler.observe(it, {});
    }
    if (closed) out.push_back(closed->mean_entropy);
  }
  return out;
}

json report_json(const TimelineReport& r) {
  json j;
  j["baseline_comm_seconds"] = r.baseline_comm_seconds;
  j["edgc_comm_seconds"] = r.total_comm_seconds;
  j["comm_reduction"] = r.comm_reduction();
  j["baseline_comm_bytes"] = r.baseline_comm_bytes;
  j["edgc_comm_bytes"] = r.total_comm_bytes;
  j["baseline_iteration_seconds"] = r.baseline_iteration_seconds;
  j["edgc_iteration_seconds"] = r.total_iteration_seconds;
  j["rank_bounds"] = {{"r_min", r.bounds.r_min}, {"r_max", r.bounds.r_max}};
  j["eta"] = r.eta;
  j["compression_disabled"] = r.compression_disabled;
  if (r.compression_disabled) j["disabled_reason"] = r.disabled_reason;
  json windows = json::array();
  for (const auto& w : r.windows) {
    json s = json::array();
    for (const auto& t : w.timings) {
      s.push_back({{"backprop_finish", t.backprop_finish},
                   {"comm_start", t.comm_start},
                   {"comm_finish", t.comm_finish},
                   {"rank", t.rank_used},
                   {"bytes", t.comm_bytes}});
    }
    windows.push_back({{"window_index", w.window_index},
                       {"first_iteration", w.first_iteration},
                       {"iterations", w.iterations},
                       {"mean_entropy", w.mean_entropy},
                       {"phase", w.phase == Phase::kWarmup ? "warmup" : "active"},
                       {"iteration_time", w.iteration_time},
                       {"stages", s}});
  }
  j["windows"] = windows;
  return j;
}

int cmd_simulate(const cli::SimulateRun& run, std::ostream& out) {
  const std::vector<double> entropies = window_entropies(run);
  TrainingSimOptions opt;
  opt.controller = run.controller;
  if (run.entropy.kind == "values" && opt.controller.total_iterations == 0) {
    opt.controller.total_iterations = opt.controller.window * entropies.size();
  }
  opt.g_trials = run.g_trials;
  opt.seed = run.seed;
  if (!run.comm_model.empty()) opt.calibrated = cli::comm_model_from_json(cli::read_json_file(run.comm_model));

  const TimelineReport report = simulate_training(run.pipeline, opt, entropies);

  const fs::path dir = prepare_dir(run.output_dir);
  write_json(dir / "report.json", report_json(report));
  {
    auto f = open_out(dir / "timeline.csv");
    write_timeline_csv(f, report);
  }
  {
    auto f = open_out(dir / "decisions.csv");
    write_controller_log_csv(f, report.decisions, run.pipeline.num_stages());
  }
  {
    auto f = open_out(dir / "summary.csv");
    f << "baseline_comm_seconds,edgc_comm_seconds,reduction\n"
      << format_double(report.baseline_comm_seconds) << ',' << format_double(report.total_comm_seconds) << ','
      << format_double(report.comm_reduction()) << '\n';
  }
  out << "comm seconds: uncompressed " << format_double(report.baseline_comm_seconds) << ", EDGC "
      << format_double(report.total_comm_seconds) << ", reduction " << percent(report.comm_reduction()) << '\n';
  if (report.compression_disabled) out << "compression disabled: " << report.disabled_reason << '\n';
  return kExitOk;
}

// ---- train-toy ----

int cmd_train_toy(const cli::ToyRun& run, std::ostream& out) {
  ToyTrainConfig cfg = run.train;
  cfg.seed = run.seed;
  const ToyTrainResult res = train_toy(cfg);

  const fs::path dir = prepare_dir(run.output_dir);
  {
    auto f = open_out(dir / "loss.csv");
    f << "step,loss\n";
    for (std::size_t i = 0; i < res.loss.size(); ++i) f << i << ',' << format_double(res.loss[i]) << '\n';
  }
  {
    auto f = open_out(dir / "ledger.csv");
    f << "step,bytes,rank\n";
    for (const auto& e : res.ledger) f << e.step << ',' << format_double(e.bytes) << ',' << e.rank << '\n';
  }
  if (cfg.policy.kind == PolicyKind::kEdgc) {
    auto f = open_out(dir / "ranks.csv");
    write_controller_log_csv(f, res.rank_history, 1);
    auto g = open_out(dir / "entropy.csv");
    write_entropy_csv(g, res.windows);
  }
  const double saved = res.uncompressed_bytes > 0.0 ? 1.0 - res.total_bytes / res.uncompressed_bytes : 0.0;
  out << "final loss " << format_double(res.final_loss()) << ", bytes " << format_double(res.total_bytes)
      << " of " << format_double(res.uncompressed_bytes) << " (" << percent(saved) << " saved)\n";
  return kExitOk;
}

// ---- analyze-trace ----

void write_histograms(std::ostream& f, std::uint64_t it, std::span<const GradientMatrix> layers, int bins) {
  std::vector<double> pooled;
  for (const auto& m : layers) {
    const auto v = m.row_major();
    pooled.insert(pooled.end(), v.begin(), v.end());
  }
  if (pooled.empty()) return;
  auto [lo_it, hi_it] = std::minmax_element(pooled.begin(), pooled.end());
  double lo = *lo_it;
  double hi = *hi_it;
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  const Histogram h = make_histogram(pooled, lo, hi, static_cast<std::size_t>(bins));
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    const double left = h.lo + h.width * static_cast<double>(b);
    f << it << ',' << b << ',' << format_double(left) << ',' << format_double(left + h.width) << ','
      << h.counts[b] << '\n';
  }
}

void write_pearson(std::ostream& f, std::uint64_t it, std::span<const GradientMatrix> layers) {
  for (std::size_t a = 0; a < layers.size(); ++a) {
    for (std::size_t b = 0; b < layers.size(); ++b) {
      if (layers[a].size() != layers[b].size()) continue;
      std::string rho;
      try {
        rho = format_double(pearson_correlation(layers[a], layers[b]));
      } catch (const DegenerateInputError&) {
        rho = "nan";
      }
      f << it << ',' << a << ',' << b << ',' << rho << '\n';
    }
  }
}

int cmd_analyze_trace(const cli::AnalyzeRun& run, std::ostream& out) {
  std::optional<TraceReader> reader;
  std::optional<SynthStream> synth;
  std::uint64_t iterations = run.iterations;
  if (!run.trace.empty()) {
    reader.emplace(run.trace);
    iterations = reader->header().iteration_count;
  } else {
    SynthSchedule s = run.synth;
    s.seed = run.seed;
    synth.emplace(s);
  }
  SamplerConfig sc = run.sampler;
  sc.rng_seed = run.seed;
  const EntropyEstimator est =
      run.estimator == "histogram" ? EntropyEstimator::kHistogram : EntropyEstimator::kGaussianPlugin;
  GradientDataSampler sampler(sc, run.window, est);

  const fs::path dir = prepare_dir(run.output_dir);
  auto hist = open_out(dir / "histograms.csv");
  auto pear = open_out(dir / "pearson.csv");
  hist << "iteration,bin,lo,hi,count\n";
  pear << "iteration,layer_a,layer_b,rho\n";

  std::vector<EntropyWindow> windows;
  for (std::uint64_t it = 0; it < iterations; ++it) {
    const std::vector<GradientMatrix> layers = reader ? *reader->next() : synth->at(it);
    std::optional<EntropyWindow> closed;
    if (should_sample_iteration(it, sc.isr)) {
      closed = sampler.observe(it, layers);
      write_histograms(hist, it, layers, run.histogram_bins);
      write_pearson(pear, it, layers);
    } else {
      closed = sampler.observe(it, {});
    }
    if (closed) windows.push_back(std::move(*closed));
  }
  if (auto tail = sampler.flush()) windows.push_back(std::move(*tail));

  auto ent = open_out(dir / "entropy.csv");
  write_entropy_csv(ent, windows);
  out << "analyzed " << iterations << " iterations into " << windows.size() << " windows\n";
  return kExitOk;
}

// ---- mp-table ----

int cmd_mp_table(const cli::MpTableRun& run, std::ostream& out) {
  const GTable table(run.m, run.n, run.trials, run.seed);
  if (run.output.empty()) {
    write_g_table_csv(out, table);
  } else {
    const fs::path p(run.output);
    if (p.has_parent_path()) prepare_dir(p.parent_path().string());
    auto f = open_out(p);
    write_g_table_csv(f, table);
  }
  return kExitOk;
}

std::string defaults_footer(const json& defaults) {
  return "\nConfig keys and defaults:\n" + defaults.dump(2) + "\n";
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Entropy-driven dynamic gradient compression toolkit", "edgc"};
  app.require_subcommand(1, 1);
  app.footer("Exit codes: 0 success, 2 config or format error, 3 training divergence.\n"
             "EDGC_SEED overrides the config seed; --seed overrides both.");

  CommonFlags cal_f, sim_f, toy_f, ana_f, mp_f;
  std::optional<std::string> cal_mode, cal_csv;
  std::optional<int> toy_steps;
  std::optional<double> toy_lr;
  std::optional<std::string> toy_policy, ana_trace, mp_out;
  std::optional<std::int64_t> mp_m, mp_n;
  std::optional<int> mp_trials;

  auto* cal = app.add_subcommand("calibrate", "Fit the linear comm-time model and write comm_model.json");
  add_common(cal, cal_f);
  cal->add_option("--mode", cal_mode, "csv | measure | simulated");
  cal->add_option("--measurements", cal_csv, "Timing CSV with rank,seconds columns (csv mode)");
  cal->footer(defaults_footer(cli::calibrate_defaults()));

  auto* sim = app.add_subcommand("simulate", "Run the pipeline simulator under the rank controller");
  add_common(sim, sim_f);
  sim->footer(defaults_footer(cli::simulate_defaults()));

  auto* toy = app.add_subcommand("train-toy", "Train the toy MLP with simulated data parallelism");
  add_common(toy, toy_f);
  toy->add_option("--steps", toy_steps, "Training steps");
  toy->add_option("--lr", toy_lr, "Learning rate");
  toy->add_option("--policy", toy_policy, "none | fixed | edgc");
  toy->footer(defaults_footer(cli::toy_defaults()));

  auto* ana = app.add_subcommand("analyze-trace", "Entropy, histogram and correlation CSVs for a trace");
  add_common(ana, ana_f);
  ana->add_option("--trace", ana_trace, "EDGT trace file (default: synthetic stream)");
  ana->footer(defaults_footer(cli::analyze_defaults()));

  auto* mp = app.add_subcommand("mp-table", "Print the g(r) table for an m x n random matrix");
  add_common(mp, mp_f, false);
  mp->add_option("-m,--m", mp_m, "Smaller dimension");
  mp->add_option("-n,--n", mp_n, "Larger dimension");
  mp->add_option("--trials", mp_trials, "Monte-Carlo trials");
  mp->add_option("--output", mp_out, "Output CSV (default: standard output)");
  mp->footer(defaults_footer(cli::mp_table_defaults()));

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  auto opt = [](std::vector<std::pair<std::string, json>>& v, const char* key, const auto& o) {
    if (o) v.emplace_back(key, *o);
  };

  try {
    std::vector<std::pair<std::string, json>> named;
    if (cal->parsed()) {
      opt(named, "mode", cal_mode);
      opt(named, "measurements", cal_csv);
      return cmd_calibrate(cli::parse_calibrate(assemble(cal_f, named)), out);
    }
    if (sim->parsed()) return cmd_simulate(cli::parse_simulate(assemble(sim_f, named)), out);
    if (toy->parsed()) {
      json doc = assemble(toy_f, named);
      if (toy_steps) doc["steps"] = *toy_steps;
      if (toy_lr) doc["learning_rate"] = *toy_lr;
      if (toy_policy) doc["policy"]["kind"] = *toy_policy;
      return cmd_train_toy(cli::parse_toy(doc), out);
    }
    if (ana->parsed()) {
      opt(named, "trace", ana_trace);
      return cmd_analyze_trace(cli::parse_analyze(assemble(ana_f, named)), out);
    }
    opt(named, "m", mp_m);
    opt(named, "n", mp_n);
    opt(named, "trials", mp_trials);
    opt(named, "output", mp_out);
    return cmd_mp_table(cli::parse_mp_table(assemble(mp_f, named)), out);
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const NumericError& e) {
    err << "error: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfigError;
  }
}

}  // namespace edgc
