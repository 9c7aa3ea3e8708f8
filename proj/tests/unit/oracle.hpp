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

// Reference computations shared by the test suites. Kept independent of the
// library's own numerical paths.

#ifndef EDGC_TESTS_ORACLE_HPP_
#define EDGC_TESTS_ORACLE_HPP_

#include <algorithm>
#include <cmath>
#include <functional>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "edgc/matrix_core.hpp"
#include "edgc/rng.hpp"

namespace edgc::oracle {

inline Matrix gaussian(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, double sigma = 1.0) {
  Rng rng(seed);
  std::normal_distribution<double> d(0.0, sigma);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = d(rng);
  }
  return m;
}

// Squared singular values in descending order, via the smaller Gram matrix.
inline Vector gram_eigenvalues(const Matrix& m) {
  const Matrix g = m.rows() <= m.cols() ? Matrix(m * m.transpose()) : Matrix(m.transpose() * m);
  Eigen::SelfAdjointEigenSolver<Matrix> es(g, Eigen::EigenvaluesOnly);
  Vector ev = es.eigenvalues().cwiseMax(0.0);
  std::sort(ev.data(), ev.data() + ev.size(), std::greater<>());
  return ev;
}

inline double rank_r_error(const Matrix& m, Eigen::Index r) {
  const Vector ev = gram_eigenvalues(m);
  double acc = 0.0;
  for (Eigen::Index i = r; i < ev.size(); ++i) acc += ev(i);
  return std::sqrt(acc);
}

// Mean best rank-r error over `count` seeded unit-variance m x n matrices.
inline double mean_rank_r_error(Eigen::Index m, Eigen::Index n, Eigen::Index r, int count,
                                std::uint64_t seed = 500) {
  double acc = 0.0;
  for (int k = 0; k < count; ++k) acc += rank_r_error(gaussian(m, n, seed + static_cast<std::uint64_t>(k)), r);
  return acc / count;
}

// CDF of the limiting eigenvalue law of A A^T (A m x n, unit variance, m <= n)
// by integrating its density with a cosine substitution that removes the
// endpoint singularities.
inline double mp_cdf_quadrature(double lambda, double m, double n, int panels = 4000) {
  const double a = std::pow(std::sqrt(n) - std::sqrt(m), 2);
  const double b = std::pow(std::sqrt(n) + std::sqrt(m), 2);
  if (lambda <= a) return 0.0;
  if (lambda >= b) return 1.0;
  const double theta_end = std::acos(1.0 - 2.0 * (lambda - a) / (b - a));
  auto f = [&](double t) {
    const double x = a + 0.5 * (b - a) * (1.0 - std::cos(t));
    if (x <= 0.0) return b / (2.0 * M_PI * m);  // limit at the hard edge (a = 0)
    const double dens = std::sqrt(std::max(0.0, (b - x) * (x - a))) / (2.0 * M_PI * m * x);
    return dens * 0.5 * (b - a) * std::sin(t);
  };
  const double h = theta_end / panels;
  double s = f(0.0) + f(theta_end);
  for (int i = 1; i < panels; ++i) s += f(i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  return s * h / 3.0;
}

}  // namespace edgc::oracle

#endif  // EDGC_TESTS_ORACLE_HPP_
