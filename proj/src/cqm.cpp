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

#include "edgc/cqm.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <ostream>
#include <string>
#include <tuple>

#include "edgc/errors.hpp"
#include "edgc/rng.hpp"
#include "edgc/text_io.hpp"

namespace edgc {

MpSupport mp_support(std::int64_t m, std::int64_t n) {
  if (m < 1 || n < 1) throw DimensionError("matrix dimensions must be positive");
  if (m > n) {
    throw DimensionError("mp_support requires m <= n (got " + std::to_string(m) + " > " +
                         std::to_string(n) + "); transpose the matrix first");
  }
  const double sm = std::sqrt(static_cast<double>(m));
  const double sn = std::sqrt(static_cast<double>(n));
  return MpSupport{(sn - sm) * (sn - sm), (sn + sm) * (sn + sm), m, n};
}

double mp_cdf(double lambda, std::int64_t m, std::int64_t n) {
  const MpSupport s = mp_support(m, n);
  const double a = s.a;
  const double b = s.b;
  if (lambda < a) return 0.0;
  if (lambda > b) return 1.0;

  double f = 0.0;
  // The arctan term carries the factor sqrt(ab), which vanishes for square
  // matrices; its argument is undefined there.
  if (a > 0.0) {
    const double ratio = (b * (lambda - a)) / (a * (b - lambda));  // +inf at lambda == b
    f -= 2.0 * std::sqrt(a * b) * std::atan(std::sqrt(ratio));
  }
  const double u = std::clamp((lambda - a) / (b - a), 0.0, 1.0);
  f += (a + b) * std::asin(std::sqrt(u));
  f += std::sqrt(std::max(0.0, (lambda - a) * (b - lambda)));
  const double cdf = f / (2.0 * std::numbers::pi * static_cast<double>(m));
  return std::clamp(cdf, 0.0, 1.0);
}

MpInverseCdf::MpInverseCdf(std::int64_t m, std::int64_t n, int grid_points)
    : support_(mp_support(m, n)) {
  if (grid_points < 2) throw RangeError("inverse-CDF grid needs at least 2 points");
  lambda_.resize(static_cast<std::size_t>(grid_points));
  p_.resize(lambda_.size());
  const double step = (support_.b - support_.a) / static_cast<double>(grid_points - 1);
  for (int i = 0; i < grid_points; ++i) {
    const double lam = i + 1 == grid_points ? support_.b : support_.a + step * i;
    lambda_[static_cast<std::size_t>(i)] = lam;
    p_[static_cast<std::size_t>(i)] = mp_cdf(lam, m, n);
  }
  p_.front() = 0.0;
  p_.back() = 1.0;
}

double MpInverseCdf::lambda_at(double p) const {
  if (p <= 0.0) return lambda_.front();
  if (p >= 1.0) return lambda_.back();
  const auto it = std::upper_bound(p_.begin(), p_.end(), p);
  const auto hi = static_cast<std::size_t>(it - p_.begin());
  const std::size_t lo = hi - 1;
  const double dp = p_[hi] - p_[lo];
  if (dp <= 0.0) return lambda_[lo];
  const double t = (p - p_[lo]) / dp;
  return lambda_[lo] + t * (lambda_[hi] - lambda_[lo]);
}

namespace {

std::vector<double> draw_eigenvalues(const MpInverseCdf& inv, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> out(static_cast<std::size_t>(inv.support().m));
  for (auto& v : out) v = inv.lambda_at(unif(rng));
  return out;
}

}  // namespace

std::vector<double> sample_eigenvalues(std::int64_t m, std::int64_t n, std::uint64_t seed) {
  const MpInverseCdf inv(m, n);
  return draw_eigenvalues(inv, derive_seed(seed, seed_stream::kEigenSampling));
}

GTable::GTable(std::int64_t m, std::int64_t n, int trials, std::uint64_t seed)
    : m_(m), n_(n), trials_(trials), seed_(seed) {
  if (trials < 1) throw RangeError("GTable needs at least one trial");
  const MpInverseCdf inv(m, n);
  const auto mm = static_cast<std::size_t>(m);
  std::vector<double> acc(mm + 1, 0.0);
  std::vector<double> prefix(mm + 1, 0.0);
  for (int t = 0; t < trials; ++t) {
    auto lam = draw_eigenvalues(inv, derive_seed(seed, seed_stream::kEigenSampling,
                                                 static_cast<std::uint64_t>(t)));
    std::sort(lam.begin(), lam.end());
    for (std::size_t i = 0; i < mm; ++i) prefix[i + 1] = prefix[i] + lam[i];
    // Rank r discards the m - r smallest eigenvalues.
    for (std::size_t r = 0; r <= mm; ++r) acc[r] += prefix[mm - r];
  }
  g_sq_.resize(mm + 1);
  for (std::size_t r = 0; r <= mm; ++r) g_sq_[r] = acc[r] / trials;
  g_sq_[mm] = 0.0;
}

GTable GTable::for_shape(std::int64_t rows, std::int64_t cols, int trials, std::uint64_t seed) {
  return rows <= cols ? GTable(rows, cols, trials, seed) : GTable(cols, rows, trials, seed);
}

double GTable::g(std::int64_t r) const {
  if (r < 0 || r > m_) {
    throw RangeError("rank " + std::to_string(r) + " outside [0, " + std::to_string(m_) + "]");
  }
  return std::sqrt(g_sq_[static_cast<std::size_t>(r)]);
}

std::shared_ptr<const GTable> cached_g_table(std::int64_t m, std::int64_t n, int trials,
                                             std::uint64_t seed) {
  using Key = std::tuple<std::int64_t, std::int64_t, int, std::uint64_t>;
  static std::mutex mu;
  static std::map<Key, std::shared_ptr<const GTable>> cache;
  const Key key{m, n, trials, seed};
  {
    std::lock_guard<std::mutex> lock(mu);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  auto table = std::make_shared<const GTable>(m, n, trials, seed);
  std::lock_guard<std::mutex> lock(mu);
  return cache.emplace(key, std::move(table)).first->second;
}

double estimate_g(std::int64_t r, std::int64_t m, std::int64_t n, int trials, std::uint64_t seed) {
  return cached_g_table(m, n, trials, seed)->g(r);
}

std::int64_t invert_g(double target_error, const GTable& table) {
  if (std::isnan(target_error)) throw NumericError("invert_g: NaN target");
  // g is non-increasing, so the predicate g(r) <= target is monotone in r.
  std::int64_t lo = 0;
  std::int64_t hi = table.m();
  while (lo < hi) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    if (table.g(mid) <= target_error) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return lo;
}

std::int64_t rank_from_sigma(std::int64_t r0, double sigma0, double sigma1, const GTable& table) {
  if (!(sigma0 > 0.0) || !(sigma1 > 0.0)) {
    throw RangeError("rank_from_sigma: standard deviations must be positive");
  }
  return invert_g((sigma0 / sigma1) * table.g(r0), table);
}

std::int64_t rank_from_entropy(std::int64_t r0, double h0, double h1, const GTable& table) {
  if (!std::isfinite(h0) || !std::isfinite(h1)) {
    throw NumericError("rank_from_entropy: entropies must be finite");
  }
  return invert_g(std::exp(h0 - h1) * table.g(r0), table);
}

void write_g_table_csv(std::ostream& out, const GTable& table) {
  out << "r,g\n";
  for (std::int64_t r = 0; r <= table.m(); ++r) out << r << ',' << format_double(table.g(r)) << '\n';
}

}  // namespace edgc
