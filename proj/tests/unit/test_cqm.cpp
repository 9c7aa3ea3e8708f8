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
#include <sstream>
#include <thread>

#include "edgc/cqm.hpp"
#include "edgc/errors.hpp"
#include "edgc/toy_trainer.hpp"
#include "oracle.hpp"

namespace edgc {
namespace {

TEST(MpSupportTest, Examples) {
  const auto s1 = mp_support(100, 100);
  EXPECT_DOUBLE_EQ(s1.a, 0.0);
  EXPECT_DOUBLE_EQ(s1.b, 400.0);
  const auto s2 = mp_support(1, 4);
  EXPECT_DOUBLE_EQ(s2.a, 1.0);
  EXPECT_DOUBLE_EQ(s2.b, 9.0);
  const auto s3 = mp_support(64, 256);
  EXPECT_DOUBLE_EQ(s3.a, 64.0);
  EXPECT_DOUBLE_EQ(s3.b, 576.0);
}

TEST(MpSupportTest, WrongOrientationAsksForTranspose) {
  try {
    mp_support(8, 4);
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    EXPECT_NE(std::string(e.what()).find("transpose"), std::string::npos);
  }
}

TEST(MpCdfTest, EndpointsAndExtension) {
  for (auto [m, n] : {std::pair{32, 32}, {64, 128}, {100, 400}, {128, 512}, {1, 4}, {3, 1000}}) {
    const auto s = mp_support(m, n);
    EXPECT_NEAR(mp_cdf(s.a, m, n), 0.0, 1e-9) << m << "x" << n;
    EXPECT_NEAR(mp_cdf(s.b, m, n), 1.0, 1e-9) << m << "x" << n;
    EXPECT_EQ(mp_cdf(s.a - 1.0, m, n), 0.0);
    EXPECT_EQ(mp_cdf(s.b + 1.0, m, n), 1.0);
  }
}

TEST(MpCdfTest, StrictlyIncreasingOnGrid) {
  for (auto [m, n] : {std::pair{32, 32}, {64, 128}, {100, 400}}) {
    const auto s = mp_support(m, n);
    double prev = -1.0;
    for (int i = 1; i < 1024; ++i) {
      const double lam = s.a + (s.b - s.a) * i / 1024.0;
      const double f = mp_cdf(lam, m, n);
      EXPECT_GT(f, prev);
      prev = f;
    }
  }
}

TEST(MpCdfTest, MatchesDensityQuadrature) {
  for (auto [m, n] : {std::pair{32, 32}, {64, 128}, {100, 400}}) {
    const auto s = mp_support(m, n);
    for (double frac : {0.05, 0.2, 0.5, 0.8, 0.97}) {
      const double lam = s.a + frac * (s.b - s.a);
      EXPECT_NEAR(mp_cdf(lam, m, n), oracle::mp_cdf_quadrature(lam, m, n), 1e-6) << m << "x" << n << " " << frac;
    }
  }
}

TEST(InverseCdfTest, RoundTrip) {
  const MpInverseCdf inv(64, 128);
  for (double p : {0.0, 0.1, 0.5, 0.9, 1.0}) {
    const double lam = inv.lambda_at(p);
    EXPECT_GE(lam, inv.support().a);
    EXPECT_LE(lam, inv.support().b);
    EXPECT_NEAR(mp_cdf(lam, 64, 128), p, 2e-3);
  }
}

TEST(SampleEigenvaluesTest, SupportAndDeterminism) {
  const auto s = mp_support(40, 90);
  const auto v = sample_eigenvalues(40, 90, 3);
  ASSERT_EQ(v.size(), 40u);
  for (double x : v) {
    EXPECT_GE(x, s.a);
    EXPECT_LE(x, s.b);
  }
  EXPECT_EQ(v, sample_eigenvalues(40, 90, 3));
  EXPECT_NE(v, sample_eigenvalues(40, 90, 4));
}

TEST(SampleEigenvaluesTest, MeanMatchesGramTrace) {
  double acc = 0.0;
  std::size_t count = 0;
  for (std::uint64_t s = 0; s < 10000; ++s) {
    for (double x : sample_eigenvalues(64, 64, s)) acc += x;
    count += 64;
  }
  const double sampled = acc / static_cast<double>(count);
  EXPECT_NEAR(sampled, 64.0, 0.02 * 64.0);
  // The same mean from actual Gram spectra.
  double emp = 0.0;
  for (std::uint64_t s = 0; s < 50; ++s) emp += oracle::gram_eigenvalues(oracle::gaussian(64, 64, 7000 + s)).mean();
  EXPECT_NEAR(sampled, emp / 50.0, 0.02 * 64.0);
}

TEST(GTableTest, ShapeInvariants) {
  const GTable t(48, 80, 32, 1);
  const auto& sq = t.g_sq();
  ASSERT_EQ(sq.size(), 49u);
  EXPECT_EQ(sq.back(), 0.0);
  EXPECT_EQ(t.g(48), 0.0);
  for (std::size_t r = 1; r < sq.size(); ++r) EXPECT_LE(sq[r], sq[r - 1]);
  EXPECT_NEAR(sq[0], 48.0 * 80.0, 0.05 * 48.0 * 80.0);
  EXPECT_THROW(t.g(49), RangeError);
  EXPECT_THROW(t.g(-1), RangeError);
}

TEST(GTableTest, ForShapeTransposes) {
  const GTable t = GTable::for_shape(90, 30, 8, 2);
  EXPECT_EQ(t.m(), 30);
  EXPECT_EQ(t.n(), 90);
  EXPECT_THROW(GTable(90, 30), DimensionError);
}

TEST(GTableTest, CacheSharesTablesAcrossThreads) {
  std::shared_ptr<const GTable> a, b;
  std::thread t1([&] { a = cached_g_table(20, 50, 16, 9); });
  std::thread t2([&] { b = cached_g_table(20, 50, 16, 9); });
  t1.join();
  t2.join();
  EXPECT_EQ(a->g_sq(), b->g_sq());
  EXPECT_EQ(cached_g_table(20, 50, 16, 9).get(), cached_g_table(20, 50, 16, 9).get());
  EXPECT_EQ(estimate_g(5, 20, 50, 16, 9), a->g(5));
}

TEST(EstimateGTest, FullRankAndZeroRank) {
  EXPECT_EQ(estimate_g(64, 64, 128), 0.0);
  double fro = 0.0;
  for (std::uint64_t s = 0; s < 50; ++s) fro += oracle::gaussian(64, 128, 300 + s).norm();
  fro /= 50.0;
  const double g0 = estimate_g(0, 64, 128);
  EXPECT_NEAR(g0, std::sqrt(8192.0), 0.03 * std::sqrt(8192.0));
  EXPECT_NEAR(g0, fro, 0.03 * fro);
}

TEST(EstimateGTest, AgreesWithSvdOracleAt64x128) {
  for (int r : {8, 16, 32}) {
    const double truth = oracle::mean_rank_r_error(64, 128, r, 50);
    EXPECT_NEAR(estimate_g(r, 64, 128), truth, 0.05 * truth) << "r=" << r;
  }
}

TEST(InvertGTest, RoundTripAndSaturation) {
  const GTable t(64, 128, 32, 0);
  for (std::int64_t r : {0, 1, 7, 32, 63, 64}) EXPECT_EQ(invert_g(t.g(r), t), r);
  EXPECT_EQ(invert_g(t.g(0) * 1.5, t), 0);
  EXPECT_EQ(invert_g(0.0, t), 64);
  // Smallest rank meeting the target.
  const double mid = 0.5 * (t.g(10) + t.g(11));
  EXPECT_EQ(invert_g(mid, t), 11);
}

TEST(RankLawTest, SigmaRule) {
  const GTable t(64, 128, 32, 0);
  EXPECT_EQ(rank_from_sigma(32, 1.3, 1.3, t), 32);
  for (double ratio : {1.1, 1.5, 2.0, 5.0}) EXPECT_LE(rank_from_sigma(32, ratio, 1.0, t), 32);
  for (double ratio : {1.1, 1.5, 2.0}) EXPECT_GE(rank_from_sigma(32, 1.0, ratio, t), 32);
  EXPECT_EQ(rank_from_sigma(32, 2.0, 1.0, t), invert_g(2.0 * t.g(32), t));
  EXPECT_THROW(rank_from_sigma(32, 0.0, 1.0, t), RangeError);
  EXPECT_THROW(rank_from_sigma(32, 1.0, -1.0, t), RangeError);
}

TEST(RankLawTest, EntropyRuleMatchesSigmaRule) {
  const GTable t(64, 128, 32, 0);
  const double h0 = 1.7;
  EXPECT_EQ(rank_from_entropy(40, h0, h0, t), 40);
  EXPECT_EQ(rank_from_entropy(40, h0, h0 - std::log(2.0), t), rank_from_sigma(40, 2.0, 1.0, t));
  EXPECT_LE(rank_from_entropy(64, h0, h0 - 0.1, t), 64);
  EXPECT_THROW(rank_from_entropy(40, h0, std::nan(""), t), NumericError);
}

TEST(RankLawTest, ForwardThenBackIsWithinOne) {
  const GTable t(64, 128, 32, 0);
  for (std::int64_t r0 : {8, 20, 33, 50}) {
    for (double dh : {-0.3, -0.05, 0.05, 0.2}) {
      const std::int64_t r1 = rank_from_entropy(r0, 1.0, 1.0 + dh, t);
      const std::int64_t back = rank_from_entropy(r1, 1.0 + dh, 1.0, t);
      if (r1 == 0 || r1 == 64) continue;  // saturated
      EXPECT_LE(std::abs(back - r0), 1) << r0 << " " << dh;
    }
  }
}

TEST(RankLawTest, ConstantErrorUnderRescaling) {
  const GTable t(64, 128);
  const Matrix a = oracle::gaussian(64, 128, 42);
  const double e0 = oracle::rank_r_error(a, 32);
  const std::int64_t r1 = rank_from_sigma(32, 1.0, 0.5, t);
  EXPECT_LT(r1, 32);
  const double e1 = oracle::rank_r_error(Matrix(0.5 * a), r1);
  EXPECT_NEAR(e1, e0, 0.10 * e0);
}

TEST(GTableCsvTest, Columns) {
  const GTable t(3, 5, 4, 0);
  std::ostringstream os;
  write_g_table_csv(os, t);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "r,g");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  EXPECT_EQ(rows, 4);
  EXPECT_NE(os.str().find("\n3,0\n"), std::string::npos);
}

TEST(SafetyMarginTest, ToyGradientsStayBelowScaledEstimate) {
  ToyTrainConfig cfg;
  cfg.steps = 60;
  cfg.dp_workers = 1;
  cfg.data.samples = 256;
  std::vector<Matrix> grads;
  train_toy(cfg, [&](int step, std::span<const std::vector<GradientMatrix>> workers) {
    if (step % 20 == 0) grads.push_back(workers[0][0].values().transpose());  // W1 as 64 x 256
  });
  ASSERT_EQ(grads.size(), 3u);
  const GTable t(64, 256);
  for (const Matrix& g : grads) {
    const double mean = g.mean();
    const double sigma = std::sqrt((g.array() - mean).square().sum() / static_cast<double>(g.size() - 1));
    for (std::int64_t r : {4, 8, 16, 32}) {
      const double measured = oracle::rank_r_error(g, r);
      EXPECT_LE(measured, sigma * t.g(r)) << "r=" << r;
    }
  }
}

}  // namespace
}  // namespace edgc
