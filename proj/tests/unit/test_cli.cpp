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

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "edgc/cli.hpp"
#include "edgc/trace.hpp"

namespace edgc {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  Result r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("edgc_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    unsetenv("EDGC_SEED");
  }
  void TearDown() override {
    fs::remove_all(dir_);
    unsetenv("EDGC_SEED");
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name)) << text;
    return path(name);
  }

  fs::path dir_;
};

std::string slurp(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Data rows of a headed CSV, split on commas.
std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

std::string read_key(const std::string& json_text, const std::string& key) {
  const auto at = json_text.find("\"" + key + "\"");
  if (at == std::string::npos) return {};
  const auto colon = json_text.find(':', at);
  const auto end = json_text.find_first_of(",}\n", colon);
  return json_text.substr(colon + 1, end - colon - 1);
}

TEST_F(CliTest, CalibrateExactLineCsv) {
  const auto csv = write("t.csv", "rank,seconds\n4,0.02\n8,0.04\n16,0.08\n32,0.16\n");
  const Result r = run({"calibrate", "--mode", "csv", "--measurements", csv, "-o", path("out")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const std::string model = slurp(path("out/comm_model.json"));
  EXPECT_NEAR(std::stod(read_key(model, "eta")), 0.005, 1e-15);
  EXPECT_NEAR(std::stod(read_key(model, "mape")), 0.0, 1e-12);
}

TEST_F(CliTest, CalibrateMeasureIsMonotone) {
  const Result r = run({"calibrate", "--mode", "measure", "-o", path("out")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const std::string model = slurp(path("out/comm_model.json"));
  const auto at = model.find("\"measurements\"");
  ASSERT_NE(at, std::string::npos);
  std::vector<double> secs;
  for (auto p = model.find("\"seconds\"", at); p != std::string::npos; p = model.find("\"seconds\"", p + 1)) {
    const auto colon = model.find(':', p);
    secs.push_back(std::stod(model.substr(colon + 1)));
  }
  ASSERT_EQ(secs.size(), 3u);
  EXPECT_LT(secs[0], secs[1]);
  EXPECT_LT(secs[1], secs[2]);
}

TEST_F(CliTest, CalibrateMissingFileExitsTwo) {
  const Result r = run({"calibrate", "--mode", "csv", "--measurements", path("nope.csv"), "-o", path("out")});
  EXPECT_EQ(r.code, kExitConfigError);
  EXPECT_FALSE(r.err.empty());
}

TEST_F(CliTest, SimulateWarmupOnlyReportsZero) {
  const Result r = run({"simulate", "--set", "entropy.kind=values", "--set", "entropy.values=[1,1,1,1,1,1]", "-o",
                        path("out")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto rows = csv_rows(slurp(path("out/summary.csv")));
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(std::stod(rows[0][2]), 0.0);
  EXPECT_NE(r.out.find("reduction 0"), std::string::npos) << r.out;
}

TEST_F(CliTest, SimulateDemoReductionMatchesCsv) {
  const Result r = run({"simulate", "-o", path("out")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto rows = csv_rows(slurp(path("out/summary.csv")));
  ASSERT_EQ(rows.size(), 1u);
  const double base = std::stod(rows[0][0]);
  const double edgc = std::stod(rows[0][1]);
  const double red = std::stod(rows[0][2]);
  EXPECT_GT(red, 0.0);
  EXPECT_NEAR(red, 1.0 - edgc / base, 1e-12);
  EXPECT_TRUE(fs::exists(path("out/timeline.csv")));
  EXPECT_TRUE(fs::exists(path("out/report.json")));
}

TEST_F(CliTest, SimulateSameSeedIdenticalFiles) {
  ASSERT_EQ(run({"simulate", "--seed", "7", "-o", path("a")}).code, kExitOk);
  ASSERT_EQ(run({"simulate", "--seed", "7", "-o", path("b")}).code, kExitOk);
  for (const char* f : {"report.json", "timeline.csv", "decisions.csv", "summary.csv"}) {
    EXPECT_EQ(slurp(path(std::string("a/") + f)), slurp(path(std::string("b/") + f))) << f;
  }
}

TEST_F(CliTest, SimulateRejectsUnknownKey) {
  const auto cfg = write("c.json", R"({"controller": {"windw": 10}})");
  const Result r = run({"simulate", "-c", cfg, "-o", path("out")});
  EXPECT_EQ(r.code, kExitConfigError);
  EXPECT_NE(r.err.find("windw"), std::string::npos) << r.err;
  EXPECT_EQ(run({"simulate", "--set", "bogus=1"}).code, kExitConfigError);
}

TEST_F(CliTest, TrainToyTenSteps) {
  const Result r = run({"train-toy", "--steps", "10", "-o", path("out")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(csv_rows(slurp(path("out/loss.csv"))).size(), 10u);
  EXPECT_EQ(csv_rows(slurp(path("out/ledger.csv"))).size(), 10u);
  EXPECT_FALSE(fs::exists(path("out/ranks.csv")));
}

TEST_F(CliTest, TrainToyEdgcWritesRankHistory) {
  const Result r = run({"train-toy", "--steps", "300", "--policy", "edgc", "--set", "data.samples=128", "-o",
                        path("out")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_TRUE(fs::exists(path("out/ranks.csv")));
  EXPECT_FALSE(csv_rows(slurp(path("out/ranks.csv"))).empty());
}

TEST_F(CliTest, TrainToyDivergenceExitsThree) {
  const Result r = run({"train-toy", "--steps", "200", "--lr", "100", "-o", path("out")});
  EXPECT_EQ(r.code, kExitDivergence);
  EXPECT_NE(r.err.find("diverged"), std::string::npos) << r.err;
}

TEST_F(CliTest, AnalyzeSynthEntropyStrictlyDecreasing) {
  const Result r = run({"analyze-trace", "-o", path("out")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto rows = csv_rows(slurp(path("out/entropy.csv")));
  ASSERT_EQ(rows.size(), 10u);
  for (std::size_t k = 1; k < rows.size(); ++k) EXPECT_LT(std::stod(rows[k][1]), std::stod(rows[k - 1][1]));
  EXPECT_FALSE(csv_rows(slurp(path("out/histograms.csv"))).empty());
}

std::vector<std::vector<GradientMatrix>> random_iterations(int count, bool identical, Eigen::Index r, Eigen::Index c) {
  std::mt19937 gen(99);
  std::normal_distribution<float> d;
  std::vector<std::vector<GradientMatrix>> its;
  for (int t = 0; t < count; ++t) {
    std::vector<GradientMatrix> layers;
    for (int l = 0; l < 3; ++l) {
      if (identical && l > 0) {
        layers.push_back(GradientMatrix(layers.front().values(), l));
        continue;
      }
      Matrix m(r, c);
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = d(gen);
      layers.push_back(GradientMatrix(m, l));
    }
    its.push_back(layers);
  }
  return its;
}

TEST_F(CliTest, AnalyzeIdenticalLayersPearsonOne) {
  write_trace(path("t.bin"), random_iterations(20, true, 16, 24));
  const Result r = run({"analyze-trace", "--trace", path("t.bin"), "--set", "window=10", "-o", path("out")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto rows = csv_rows(slurp(path("out/pearson.csv")));
  ASSERT_FALSE(rows.empty());
  for (const auto& row : rows) EXPECT_NEAR(std::stod(row[3]), 1.0, 1e-12);
}

TEST_F(CliTest, AnalyzeRandomLayersPearsonSmall) {
  const Eigen::Index rows_n = 32, cols_n = 64;
  write_trace(path("t.bin"), random_iterations(30, false, rows_n, cols_n));
  const Result r = run({"analyze-trace", "--trace", path("t.bin"), "--set", "window=10", "-o", path("out")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const double bound = 4.0 / std::sqrt(static_cast<double>(rows_n * cols_n));
  int off = 0;
  for (const auto& row : csv_rows(slurp(path("out/pearson.csv")))) {
    if (row[1] == row[2]) continue;
    ++off;
    EXPECT_LE(std::abs(std::stod(row[3])), bound);
  }
  EXPECT_GT(off, 0);
}

TEST_F(CliTest, AnalyzeBadTraceExitsTwo) {
  write("bad.bin", "not a trace at all, definitely");
  EXPECT_EQ(run({"analyze-trace", "--trace", path("bad.bin"), "-o", path("out")}).code, kExitConfigError);
}

TEST_F(CliTest, MpTableRows) {
  const Result r = run({"mp-table", "-m", "32", "-n", "96", "--trials", "32"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto rows = csv_rows(r.out);
  ASSERT_EQ(rows.size(), 33u);
  EXPECT_EQ(rows.back()[0], "32");
  EXPECT_EQ(std::stod(rows.back()[1]), 0.0);
  EXPECT_NEAR(std::stod(rows.front()[1]), std::sqrt(32.0 * 96.0), 0.03 * std::sqrt(32.0 * 96.0));
  EXPECT_EQ(run({"mp-table", "-m", "32", "-n", "96", "--trials", "32"}).out, r.out);
  ASSERT_EQ(run({"mp-table", "-m", "32", "-n", "96", "--trials", "32", "--output", path("g.csv")}).code, kExitOk);
  EXPECT_EQ(slurp(path("g.csv")), r.out);
}

TEST_F(CliTest, MpTableRejectsTallShape) {
  const Result r = run({"mp-table", "-m", "96", "-n", "32"});
  EXPECT_EQ(r.code, kExitConfigError);
  EXPECT_NE(r.err.find("transpose"), std::string::npos) << r.err;
}

TEST_F(CliTest, SeedPrecedence) {
  const std::vector<std::string> base{"mp-table", "-m", "8", "-n", "16", "--trials", "4"};
  auto with = [&](std::vector<std::string> extra) {
    auto a = base;
    a.insert(a.end(), extra.begin(), extra.end());
    return run(a).out;
  };
  const std::string cfg1 = write("s1.json", R"({"seed": 1})");
  const std::string s1 = with({"--seed", "1"});
  const std::string s2 = with({"--seed", "2"});
  ASSERT_NE(s1, s2);
  EXPECT_EQ(with({"-c", cfg1}), s1);
  setenv("EDGC_SEED", "2", 1);
  EXPECT_EQ(with({"-c", cfg1}), s2);
  EXPECT_EQ(with({"-c", cfg1, "--seed", "1"}), s1);
  setenv("EDGC_SEED", "banana", 1);
  EXPECT_EQ(run(base).code, kExitConfigError);
}

TEST_F(CliTest, HelpAndUnknownCommand) {
  const Result h = run({"simulate", "--help"});
  EXPECT_EQ(h.code, kExitOk);
  EXPECT_NE(h.out.find("\"window\""), std::string::npos);
  EXPECT_EQ(run({"frobnicate"}).code, kExitConfigError);
}

}  // namespace
}  // namespace edgc
