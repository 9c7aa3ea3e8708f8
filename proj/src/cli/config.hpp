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

#ifndef EDGC_SRC_CLI_CONFIG_HPP_
#define EDGC_SRC_CLI_CONFIG_HPP_

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "edgc/dac.hpp"
#include "edgc/entropy.hpp"
#include "edgc/errors.hpp"
#include "edgc/pipeline_sim.hpp"
#include "edgc/synth.hpp"
#include "edgc/toy_trainer.hpp"

namespace edgc {

void to_json(nlohmann::json& j, const MatrixShape& s);
void from_json(const nlohmann::json& j, MatrixShape& s);

namespace cli {

using nlohmann::json;

// Reads keys from one JSON object, remembering which ones were consumed so
// leftovers can be reported as unknown.
class JsonReader {
 public:
  JsonReader(const json& node, std::string path);

  template <class T>
  void field(const char* key, T& dst) {
    const json* v = take(key);
    if (v == nullptr) return;
    try {
      dst = v->get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(path_ + key + ": " + e.what());
    }
  }

  template <class F>
  void section(const char* key, F&& body) {
    const json* v = take(key);
    if (v == nullptr) return;
    if (!v->is_object()) throw ConfigError(path_ + key + ": expected an object");
    JsonReader sub(*v, path_ + key + ".");
    body(sub);
    sub.finish();
  }

  // Replaces `items` when the key is present; each element starts from
  // `prototype` and is then overlaid with the object's keys.
  template <class T, class F>
  void array(const char* key, std::vector<T>& items, const T& prototype, F&& body) {
    const json* v = take(key);
    if (v == nullptr) return;
    if (!v->is_array()) throw ConfigError(path_ + key + ": expected an array");
    items.assign(v->size(), prototype);
    for (std::size_t i = 0; i < v->size(); ++i) {
      const json& e = (*v)[i];
      const std::string p = path_ + key + "[" + std::to_string(i) + "].";
      if (!e.is_object()) throw ConfigError(p + ": expected an object");
      JsonReader sub(e, p);
      body(sub, items[i]);
      sub.finish();
    }
  }

  // Throws ConfigError naming the first key that no field consumed.
  void finish() const;

 private:
  const json* take(const char* key);

  const json& node_;
  std::string path_;
  std::set<std::string, std::less<>> seen_;
};

// Mirror of JsonReader used to print the documented defaults.
class JsonWriter {
 public:
  template <class T>
  void field(const char* key, const T& v) {
    node_[key] = v;
  }

  template <class F>
  void section(const char* key, F&& body) {
    JsonWriter sub;
    body(sub);
    node_[key] = sub.node_;
  }

  template <class T, class F>
  void array(const char* key, std::vector<T>& items, const T& /*prototype*/, F&& body) {
    json out = json::array();
    for (T& item : items) {
      JsonWriter sub;
      body(sub, item);
      out.push_back(sub.node_);
    }
    node_[key] = out;
  }

  const json& node() const { return node_; }

 private:
  json node_ = json::object();
};

struct MeasureSweep {
  std::int64_t rows = 64;
  std::int64_t cols = 64;
  std::vector<std::int64_t> ranks{8, 16, 32};
  int repeats = 25;
};

struct CalibrateRun {
  std::uint64_t seed = 0;
  std::string output_dir = ".";
  std::string mode = "measure";  // csv | measure | simulated
  std::string measurements;      // csv mode input
  MeasureSweep sweep;
  double bandwidth = 1.0e9;
  double element_size = 4.0;
  PipelineConfig pipeline;  // simulated mode
  int stage = 0;
};

struct EntropySource {
  std::string kind = "synth";  // synth | values
  SynthSchedule schedule;      // entropies measured on this stream
  std::vector<double> values;  // one mean entropy per window
};

struct SimulateRun {
  std::uint64_t seed = 0;
  std::string output_dir = ".";
  PipelineConfig pipeline;
  ControllerConfig controller;
  SamplerConfig sampler;
  EntropySource entropy;
  int g_trials = GTable::kDefaultTrials;
  std::string comm_model;  // optional comm_model.json supplying eta
};

struct ToyRun {
  std::uint64_t seed = 0;
  std::string output_dir = ".";
  ToyTrainConfig train;
};

struct AnalyzeRun {
  std::uint64_t seed = 0;
  std::string output_dir = ".";
  std::string trace;         // EDGT file; empty means use `synth`
  SynthSchedule synth;
  std::uint64_t iterations = 1000;  // synth source length
  SamplerConfig sampler;
  std::uint64_t window = 100;
  std::string estimator = "gaussian";  // gaussian | histogram
  int histogram_bins = 64;
};

struct MpTableRun {
  std::uint64_t seed = 0;
  std::int64_t m = 64;
  std::int64_t n = 128;
  int trials = GTable::kDefaultTrials;
  std::string output;  // empty: standard output
};

// Demo pipeline used by `simulate` and `calibrate` when no pipeline is given.
PipelineConfig demo_pipeline();

CalibrateRun default_calibrate_run();
SimulateRun default_simulate_run();
ToyRun default_toy_run();
AnalyzeRun default_analyze_run();
MpTableRun default_mp_table_run();

// Overlays `doc` on the defaults; throws ConfigError on unknown keys or bad
// values.
CalibrateRun parse_calibrate(const json& doc);
SimulateRun parse_simulate(const json& doc);
ToyRun parse_toy(const json& doc);
AnalyzeRun parse_analyze(const json& doc);
MpTableRun parse_mp_table(const json& doc);

// Default documents, printed by --help.
json calibrate_defaults();
json simulate_defaults();
json toy_defaults();
json analyze_defaults();
json mp_table_defaults();

// Sets a dotted key path ("controller.window", "pipeline.stages.0.t_forward")
// to a JSON-parsed value, or to the raw string when it does not parse.
void apply_override(json& doc, std::string_view assignment);

json read_json_file(const std::string& path);

json comm_model_to_json(const CommModel& model);
CommModel comm_model_from_json(const json& j);

}  // namespace cli
}  // namespace edgc

#endif  // EDGC_SRC_CLI_CONFIG_HPP_
