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

#ifndef EDGC_MATRIX_CORE_HPP_
#define EDGC_MATRIX_CORE_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "edgc/rng.hpp"

namespace edgc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// A dense 2-D gradient together with where it came from.
///
/// Entries are held in 64-bit precision regardless of the source format.
/// Construction rejects empty shapes and non-finite entries, so every
/// GradientMatrix reaching the numeric routines is valid.
class GradientMatrix {
 public:
  GradientMatrix() = default;
  explicit GradientMatrix(Matrix values, int layer_id = 0, int stage_id = 0,
                          std::uint64_t iteration = 0);

  /// Builds from row-major entries; throws DimensionError on a length mismatch.
  static GradientMatrix from_row_major(Eigen::Index rows, Eigen::Index cols,
                                       std::span<const double> entries,
                                       int layer_id = 0, int stage_id = 0,
                                       std::uint64_t iteration = 0);

  Eigen::Index rows() const { return values_.rows(); }
  Eigen::Index cols() const { return values_.cols(); }
  Eigen::Index size() const { return values_.size(); }

  const Matrix& values() const { return values_; }
  double operator()(Eigen::Index r, Eigen::Index c) const { return values_(r, c); }

  /// Entry at a row-major linear index.
  double at_linear(std::uint64_t index) const;
  std::vector<double> row_major() const;

  int layer_id() const { return layer_id_; }
  int stage_id() const { return stage_id_; }
  std::uint64_t iteration() const { return iteration_; }

 private:
  Matrix values_;
  int layer_id_ = 0;
  int stage_id_ = 0;
  std::uint64_t iteration_ = 0;
};

double frobenius_norm(const Matrix& m);
inline double frobenius_norm(const GradientMatrix& m) { return frobenius_norm(m.values()); }

/// Singular values in non-increasing order.
Vector singular_values(const Matrix& m);

/// ||M - M_r||_F for the truncated-SVD approximation M_r (Eckart-Young-Mirsky).
/// Throws RangeError unless 0 <= r <= min(m, n).
double optimal_rank_r_error(const Matrix& m, Eigen::Index r);
inline double optimal_rank_r_error(const GradientMatrix& m, Eigen::Index r) {
  return optimal_rank_r_error(m.values(), r);
}

/// Pearson coefficient over the flattened entries.
/// Throws DimensionError on unequal element counts and DegenerateInputError
/// when either argument has zero variance.
double pearson_correlation(std::span<const double> x, std::span<const double> y);
double pearson_correlation(const GradientMatrix& a, const GradientMatrix& b);

/// i.i.d. N(0, sigma^2) entries.
Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng, double sigma = 1.0);

bool all_finite(const Matrix& m);

}  // namespace edgc

#endif  // EDGC_MATRIX_CORE_HPP_
