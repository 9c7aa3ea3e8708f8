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

#include "config.hpp"

#include <fstream>
#include <sstream>

namespace edgc {

void to_json(nlohmann::json& j, const MatrixShape& s) { j = nlohmann::json::array({s.rows, s.cols}); }

void from_json(const nlohmann::json& j, MatrixShape& s) {
  if (!j.is_array() || j.size() != 2) throw ConfigError("matrix shape must be [rows, cols]");
  s.rows = j[0].get<std::int64_t>();
  s.cols = j[1].get<std::int64_t>();
}

namespace cli {
namespace {

std::string policy_name(PolicyKind k) {
  switch (k) {
    case PolicyKind::kNone:
      return "none";
    case PolicyKind::kFixedRank:
      return "fixed";
    case PolicyKind::kEdgc:
      return "edgc";
  }
  return "none";
}

PolicyKind parse_policy(const std::string& s) {
  if (s == "none") return PolicyKind::kNone;
  if (s == "fixed") return PolicyKind::kFixedRank;
  if (s == "edgc") return PolicyKind::kEdgc;
  throw ConfigError("policy.kind must be none, fixed or edgc, got '" + s + "'");
}

std::string form_name(SynthSchedule::Form f) {
  return f == SynthSchedule::Form::kExponential ? "exponential" : "piecewise";
}

SynthSchedule::Form parse_form(const std::string& s) {
  if (s == "exponential") return SynthSchedule::Form::kExponential;
  if (s == "piecewise") return SynthSchedule::Form::kPiecewise;
  throw ConfigError("form must be exponential or piecewise, got '" + s + "'");
}

void require_one_of(const std::string& key, const std::string& value,
                    std::initializer_list<const char*> allowed) {
  std::string list;
  for (const char* a : allowed) {
    if (value == a) return;
    if (!list.empty()) list += ", ";
    list += a;
  }
  throw ConfigError(key + " must be one of " + list + ", got '" + value + "'");
}

template <class V>
void visit_cost(V& v, LinearCost& c) {
  v.field("fixed", c.fixed);
  v.field("per_rank", c.per_rank);
}

template <class V>
void visit_stage(V& v, StageSpec& s) {
  v.field("t_forward", s.t_forward);
  v.field("t_backward", s.t_backward);
  v.field("matrices", s.matrices);
  v.field("extra_elements", s.extra_elements);
  v.field("compressible_fraction", s.compressible_fraction);
}

template <class V>
void visit_pipeline(V& v, PipelineConfig& p) {
  v.field("micro_batches", p.micro_batches);
  v.field("dp_degree", p.dp_degree);
  v.field("bandwidth", p.comm_model.bandwidth);
  v.field("element_size", p.comm_model.element_size);
  v.section("compress_cost", [&](auto& s) { visit_cost(s, p.comm_model.compress_cost); });
  v.section("decompress_cost", [&](auto& s) { visit_cost(s, p.comm_model.decompress_cost); });
  const StageSpec proto = p.stages.empty() ? StageSpec{} : p.stages.front();
  v.array("stages", p.stages, proto, [](auto& s, StageSpec& st) { visit_stage(s, st); });
}

template <class V>
void visit_controller(V& v, ControllerConfig& c, bool with_total) {
  v.field("window", c.window);
  v.field("step_limit", c.step_limit);
  v.field("warmup_floor", c.warmup_floor);
  if (with_total) v.field("total_iterations", c.total_iterations);
}

template <class V>
void visit_sampler(V& v, SamplerConfig& s) {
  v.field("isr", s.isr);
  v.field("gsr", s.gsr);
}

template <class V>
void visit_schedule(V& v, SynthSchedule& s) {
  std::string form = form_name(s.form);
  v.field("form", form);
  s.form = parse_form(form);
  v.field("sigma0", s.sigma0);
  v.field("tau", s.tau);
  v.field("knots", s.knots);
  v.field("shapes", s.shapes);
}

template <class V>
void visit(V& v, CalibrateRun& r) {
  v.field("seed", r.seed);
  v.field("output_dir", r.output_dir);
  v.field("mode", r.mode);
  v.field("measurements", r.measurements);
  v.section("measure", [&](auto& s) {
    s.field("rows", r.sweep.rows);
    s.field("cols", r.sweep.cols);
    s.field("ranks", r.sweep.ranks);
    s.field("repeats", r.sweep.repeats);
  });
  v.field("bandwidth", r.bandwidth);
  v.field("element_size", r.element_size);
  v.section("pipeline", [&](auto& s) { visit_pipeline(s, r.pipeline); });
  v.field("stage", r.stage);
}

template <class V>
void visit(V& v, SimulateRun& r) {
  v.field("seed", r.seed);
  v.field("output_dir", r.output_dir);
  v.section("pipeline", [&](auto& s) { visit_pipeline(s, r.pipeline); });
  v.section("controller", [&](auto& s) { visit_controller(s, r.controller, true); });
  v.section("sampler", [&](auto& s) { visit_sampler(s, r.sampler); });
  v.section("entropy", [&](auto& s) {
    s.field("kind", r.entropy.kind);
    s.section("synth", [&](auto& t) { visit_schedule(t, r.entropy.schedule); });
    s.field("values", r.entropy.values);
  });
  v.field("g_trials", r.g_trials);
  v.field("comm_model", r.comm_model);
}

template <class V>
void visit(V& v, ToyRun& r) {
  ToyTrainConfig& c = r.train;
  v.field("seed", r.seed);
  v.field("output_dir", r.output_dir);
  v.field("steps", c.steps);
  v.field("dp_workers", c.dp_workers);
  v.field("learning_rate", c.learning_rate);
  v.field("cosine_decay", c.cosine_decay);
  v.section("model", [&](auto& s) {
    s.field("input_dim", c.model.input_dim);
    s.field("hidden_dim", c.model.hidden_dim);
    s.field("num_classes", c.model.num_classes);
  });
  v.section("data", [&](auto& s) {
    s.field("samples", c.data.samples);
    s.field("teacher_hidden", c.data.teacher_hidden);
    s.field("label_noise", c.data.label_noise);
    s.field("batch_size", c.data.batch_size);
  });
  v.section("policy", [&](auto& s) {
    CompressionPolicy& p = c.policy;
    std::string kind = policy_name(p.kind);
    s.field("kind", kind);
    p.kind = parse_policy(kind);
    s.field("rank", p.rank);
    s.field("min_compress_dim", p.min_compress_dim);
    s.section("controller", [&](auto& t) { visit_controller(t, p.controller, false); });
    s.section("sampler", [&](auto& t) { visit_sampler(t, p.sampler); });
    s.field("g_trials", p.g_trials);
    s.field("bandwidth", p.comm_model.bandwidth);
    s.field("element_size", p.comm_model.element_size);
  });
}

template <class V>
void visit(V& v, AnalyzeRun& r) {
  v.field("seed", r.seed);
  v.field("output_dir", r.output_dir);
  v.field("trace", r.trace);
  v.section("synth", [&](auto& s) { visit_schedule(s, r.synth); });
  v.field("iterations", r.iterations);
  v.section("sampler", [&](auto& s) { visit_sampler(s, r.sampler); });
  v.field("window", r.window);
  v.field("estimator", r.estimator);
  v.field("histogram_bins", r.histogram_bins);
}

template <class V>
void visit(V& v, MpTableRun& r) {
  v.field("seed", r.seed);
  v.field("m", r.m);
  v.field("n", r.n);
  v.field("trials", r.trials);
  v.field("output", r.output);
}

template <class Run>
Run parse_run(const json& doc, Run run) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  JsonReader reader(doc, "");
  visit(reader, run);
  reader.finish();
  return run;
}

template <class Run>
json defaults_of(Run run) {
  JsonWriter w;
  visit(w, run);
  return w.node();
}

void check_positive(const std::string& key, double v) {
  if (!(v > 0.0)) throw ConfigError(key + " must be positive");
}

}  // namespace

JsonReader::JsonReader(const json& node, std::string path) : node_(node), path_(std::move(path)) {}

const json* JsonReader::take(const char* key) {
  seen_.insert(key);
  auto it = node_.find(key);
  return it == node_.end() ? nullptr : &*it;
}

void JsonReader::finish() const {
  for (auto it = node_.begin(); it != node_.end(); ++it) {
    if (seen_.find(it.key()) == seen_.end()) throw ConfigError("unknown config key '" + path_ + it.key() + "'");
  }
}

PipelineConfig demo_pipeline() {
  PipelineConfig p;
  p.micro_batches = 8;
  p.dp_degree = 4;
  p.comm_model.bandwidth = 2.5e9;
  p.comm_model.element_size = 2.0;
  p.comm_model.compress_cost = {1.0e-4, 1.0e-6};
  p.comm_model.decompress_cost = {5.0e-5, 5.0e-7};
  StageSpec s;
  s.t_forward = 5.0e-5;
  s.t_backward = 1.0e-4;
  s.matrices = {{256, 768}, {256, 256}, {256, 1024}, {1024, 256}};
  s.extra_elements = 2048;
  p.stages.assign(4, s);
  return p;
}

CalibrateRun default_calibrate_run() {
  CalibrateRun r;
  r.pipeline = demo_pipeline();
  return r;
}

SimulateRun default_simulate_run() {
  SimulateRun r;
  r.pipeline = demo_pipeline();
  r.controller.total_iterations = 20000;
  r.entropy.schedule.form = SynthSchedule::Form::kExponential;
  r.entropy.schedule.sigma0 = 1.0;
  r.entropy.schedule.tau = 5000.0;
  r.entropy.schedule.shapes = {{64, 256}};
  return r;
}

ToyRun default_toy_run() { return {}; }

AnalyzeRun default_analyze_run() {
  AnalyzeRun r;
  r.synth.tau = 500.0;
  r.synth.shapes = {{64, 128}, {64, 128}};
  return r;
}

MpTableRun default_mp_table_run() { return {}; }

CalibrateRun parse_calibrate(const json& doc) {
  CalibrateRun r = parse_run(doc, default_calibrate_run());
  require_one_of("mode", r.mode, {"csv", "measure", "simulated"});
  if (r.mode == "csv" && r.measurements.empty()) throw ConfigError("csv mode needs 'measurements'");
  if (r.sweep.repeats < 1) throw ConfigError("measure.repeats must be at least 1");
  check_positive("bandwidth", r.bandwidth);
  check_positive("element_size", r.element_size);
  if (r.mode == "simulated") {
    r.pipeline.validate();
    if (r.stage < 0 || r.stage >= r.pipeline.num_stages()) throw ConfigError("stage out of range");
  }
  return r;
}

SimulateRun parse_simulate(const json& doc) {
  SimulateRun r = parse_run(doc, default_simulate_run());
  r.pipeline.validate();
  r.sampler.validate();
  require_one_of("entropy.kind", r.entropy.kind, {"synth", "values"});
  if (r.controller.window == 0) throw ConfigError("controller.window must be positive");
  if (r.entropy.kind == "synth") {
    r.entropy.schedule.validate();
    if (r.controller.total_iterations < r.controller.window) {
      throw ConfigError("controller.total_iterations must cover at least one window");
    }
  } else if (r.entropy.values.empty()) {
    throw ConfigError("entropy.values must not be empty");
  }
  if (r.g_trials < 1) throw ConfigError("g_trials must be at least 1");
  return r;
}

ToyRun parse_toy(const json& doc) {
  ToyRun r = parse_run(doc, default_toy_run());
  if (r.train.steps < 1) throw ConfigError("steps must be at least 1");
  if (r.train.dp_workers < 1) throw ConfigError("dp_workers must be at least 1");
  check_positive("learning_rate", r.train.learning_rate);
  r.train.policy.sampler.validate();
  if (r.train.policy.kind == PolicyKind::kFixedRank && r.train.policy.rank < 1) {
    throw ConfigError("policy.rank must be at least 1 for the fixed policy");
  }
  return r;
}

AnalyzeRun parse_analyze(const json& doc) {
  AnalyzeRun r = parse_run(doc, default_analyze_run());
  r.sampler.validate();
  require_one_of("estimator", r.estimator, {"gaussian", "histogram"});
  if (r.window == 0) throw ConfigError("window must be positive");
  if (r.histogram_bins < 1) throw ConfigError("histogram_bins must be at least 1");
  if (r.trace.empty()) {
    r.synth.validate();
    if (r.iterations == 0) throw ConfigError("iterations must be positive");
  }
  return r;
}

MpTableRun parse_mp_table(const json& doc) {
  MpTableRun r = parse_run(doc, default_mp_table_run());
  if (r.trials < 1) throw ConfigError("trials must be at least 1");
  return r;
}

json calibrate_defaults() { return defaults_of(default_calibrate_run()); }
json simulate_defaults() { return defaults_of(default_simulate_run()); }
json toy_defaults() { return defaults_of(default_toy_run()); }
json analyze_defaults() { return defaults_of(default_analyze_run()); }
json mp_table_defaults() { return defaults_of(default_mp_table_run()); }

void apply_override(json& doc, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("override must look like key.path=value, got '" + std::string(assignment) + "'");
  }
  const std::string path(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string part = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("empty component in override key '" + path + "'");
    json* next = nullptr;
    if (node->is_array()) {
      std::size_t idx = 0;
      try {
        idx = std::stoul(part);
      } catch (const std::exception&) {
        throw ConfigError("'" + part + "' is not an array index in '" + path + "'");
      }
      if (idx >= node->size()) throw ConfigError("index " + part + " out of range in '" + path + "'");
      next = &(*node)[idx];
    } else {
      if (node->is_null()) *node = json::object();
      if (!node->is_object()) throw ConfigError("'" + path + "' descends into a non-object value");
      next = &(*node)[part];
    }
    if (dot == std::string::npos) {
      *next = std::move(value);
      return;
    }
    node = next;
    start = dot + 1;
  }
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw FormatError("'" + path + "' is not valid JSON: " + e.what());
  }
}

json comm_model_to_json(const CommModel& m) {
  json j;
  j["eta"] = m.eta;
  j["bandwidth"] = m.bandwidth;
  j["element_size"] = m.element_size;
  j["compress_cost"] = {{"fixed", m.compress_cost.fixed}, {"per_rank", m.compress_cost.per_rank}};
  j["decompress_cost"] = {{"fixed", m.decompress_cost.fixed}, {"per_rank", m.decompress_cost.per_rank}};
  j["mape"] = m.mape;
  return j;
}

CommModel comm_model_from_json(const json& j) {
  CommModel m;
  try {
    m.eta = j.at("eta").get<double>();
    m.bandwidth = j.value("bandwidth", m.bandwidth);
    m.element_size = j.value("element_size", m.element_size);
    if (j.contains("compress_cost")) {
      m.compress_cost = {j["compress_cost"].at("fixed").get<double>(),
                         j["compress_cost"].at("per_rank").get<double>()};
    }
    if (j.contains("decompress_cost")) {
      m.decompress_cost = {j["decompress_cost"].at("fixed").get<double>(),
                           j["decompress_cost"].at("per_rank").get<double>()};
    }
    m.mape = j.value("mape", 0.0);
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed comm model: ") + e.what());
  }
  if (!(m.eta > 0.0)) throw FormatError("comm model eta must be positive");
  return m;
}

}  // namespace cli
}  // namespace edgc
