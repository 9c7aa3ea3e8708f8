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

#ifndef EDGC_CQM_HPP_
#define EDGC_CQM_HPP_

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <vector>

namespace edgc {

/// Marchenko-Pastur eigenvalue support of A A^T for an m x n (m <= n)
/// matrix with unit-variance entries.
struct MpSupport {
  double a = 0.0;  // (sqrt(n) - sqrt(m))^2
  double b = 0.0;  // (sqrt(n) + sqrt(m))^2
  std::int64_t m = 0;
  std::int64_t n = 0;
};

/// Throws DimensionError unless 1 <= m <= n (transpose first otherwise).
MpSupport mp_support(std::int64_t m, std::int64_t n);

/// Closed-form Marchenko-Pastur CDF of the eigenvalues of A A^T. Returns 0
/// below the support and 1 above it; values are clamped to [0, 1].
double mp_cdf(double lambda, std::int64_t m, std::int64_t n);

/// Number of points in the uniform lambda grid backing inverse-CDF sampling.
inline constexpr int kInverseCdfGridPoints = 1024;

/// Inverse-CDF lookup table over a uniform grid on [a, b].
class MpInverseCdf {
 public:
  MpInverseCdf(std::int64_t m, std::int64_t n, int grid_points = kInverseCdfGridPoints);

  /// Linear interpolation between the bracketing (lambda, p) grid pairs.
  double lambda_at(double p) const;
  const MpSupport& support() const { return support_; }

 private:
  MpSupport support_;
  std::vector<double> lambda_;
  std::vector<double> p_;
};

/// m eigenvalue samples drawn through the inverse CDF; deterministic in seed.
std::vector<double> sample_eigenvalues(std::int64_t m, std::int64_t n, std::uint64_t seed);

/// Monte-Carlo estimate of E||A - A_r||_F^2 for r = 0..m, unit-variance A.
///
/// Each trial samples m eigenvalues, sorts them, and accumulates the sum of
/// the smallest m - r values. Immutable after construction.
class GTable {
 public:
  static constexpr int kDefaultTrials = 64;

  /// Throws DimensionError unless 1 <= m <= n; RangeError if trials < 1.
  GTable(std::int64_t m, std::int64_t n, int trials = kDefaultTrials, std::uint64_t seed = 0);

  /// Builds the table for a matrix shape in either orientation.
  static GTable for_shape(std::int64_t rows, std::int64_t cols, int trials = kDefaultTrials,
                          std::uint64_t seed = 0);

  std::int64_t m() const { return m_; }
  std::int64_t n() const { return n_; }
  int trials() const { return trials_; }
  std::uint64_t seed() const { return seed_; }

  const std::vector<double>& g_sq() const { return g_sq_; }
  /// Frobenius error g(r; m, n) = sqrt(g_sq[r]). Throws RangeError outside [0, m].
  double g(std::int64_t r) const;

 private:
  std::int64_t m_;
  std::int64_t n_;
  int trials_;
  std::uint64_t seed_;
  std::vector<double> g_sq_;
};

/// Process-wide cache of tables keyed by (m, n, trials, seed). Insertion is
/// serialized; returned tables are immutable and safe to share.
std::shared_ptr<const GTable> cached_g_table(std::int64_t m, std::int64_t n,
                                             int trials = GTable::kDefaultTrials,
                                             std::uint64_t seed = 0);

/// g(r; m, n) through the cache.
double estimate_g(std::int64_t r, std::int64_t m, std::int64_t n,
                  int trials = GTable::kDefaultTrials, std::uint64_t seed = 0);

/// Smallest r with g(r) <= target_error; saturates at 0 and m.
std::int64_t invert_g(double target_error, const GTable& table);

/// r1 = g^-1((sigma0 / sigma1) g(r0)). Throws RangeError for non-positive
/// sigmas or r0 outside [0, m].
std::int64_t rank_from_sigma(std::int64_t r0, double sigma0, double sigma1, const GTable& table);

/// r1 = g^-1(exp(h0 - h1) g(r0)). Throws NumericError for non-finite entropies.
std::int64_t rank_from_entropy(std::int64_t r0, double h0, double h1, const GTable& table);

/// CSV rows: r,g
void write_g_table_csv(std::ostream& out, const GTable& table);

}  // namespace edgc

#endif  // EDGC_CQM_HPP_
