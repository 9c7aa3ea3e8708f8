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

// Estimator-versus-SVD agreement over the full shape grid. Built as its own
// binary so its result is visible as a separate ctest entry.

#include <gtest/gtest.h>

#include "edgc/cqm.hpp"
#include "oracle.hpp"

namespace edgc {
namespace {

struct GridCase {
  int m;
  int n;
};

void PrintTo(const GridCase& c, std::ostream* os) { *os << c.m << "x" << c.n; }

class EstimatorGridTest : public ::testing::TestWithParam<GridCase> {};

TEST_P(EstimatorGridTest, WithinFivePercentOfSvdMean) {
  const auto [m, n] = GetParam();
  for (int r : {0, m / 8, m / 4, m / 2}) {
    const double truth = oracle::mean_rank_r_error(m, n, r, 50);
    const double est = estimate_g(r, m, n);
    EXPECT_NEAR(est, truth, 0.05 * truth) << m << "x" << n << " r=" << r << " rel "
                                          << (est - truth) / truth;
  }
}

INSTANTIATE_TEST_SUITE_P(Shapes, EstimatorGridTest,
                         ::testing::Values(GridCase{32, 32}, GridCase{64, 128}, GridCase{128, 512}),
                         [](const auto& info) {
                           return std::to_string(info.param.m) + "x" + std::to_string(info.param.n);
                         });

}  // namespace
}  // namespace edgc
