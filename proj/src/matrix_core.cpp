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

#include "edgc/matrix_core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/SVD>

#include "edgc/errors.hpp"

namespace edgc {

GradientMatrix::GradientMatrix(Matrix values, int layer_id, int stage_id,
                               std::uint64_t iteration)
    : values_(std::move(values)), layer_id_(layer_id), stage_id_(stage_id), iteration_(iteration) {
  if (values_.rows() <= 0 || values_.cols() <= 0) {
    throw DimensionError("gradient matrix must have positive dimensions");
  }
  if (!all_finite(values_)) {
    throw NumericError("gradient matrix for layer " + std::to_string(layer_id) +
                       " contains non-finite entries");
  }
}

GradientMatrix GradientMatrix::from_row_major(Eigen::Index rows, Eigen::Index cols,
                                              std::span<const double> entries, int layer_id,
                                              int stage_id, std::uint64_t iteration) {
  if (rows <= 0 || cols <= 0 || static_cast<Eigen::Index>(entries.size()) != rows * cols) {
    throw DimensionError("entry count " + std::to_string(entries.size()) + " does not match " +
                         std::to_string(rows) + "x" + std::to_string(cols));
  }
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(r, c) = entries[static_cast<std::size_t>(r * cols + c)];
    }
  }
  return GradientMatrix(std::move(m), layer_id, stage_id, iteration);
}

double GradientMatrix::at_linear(std::uint64_t index) const {
  const auto cols = static_cast<std::uint64_t>(values_.cols());
  return values_(static_cast<Eigen::Index>(index / cols), static_cast<Eigen::Index>(index % cols));
}

std::vector<double> GradientMatrix::row_major() const {
  std::vector<double> out(static_cast<std::size_t>(values_.size()));
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(out.data(), values_.rows(),
                                                                                      values_.cols()) = values_;
  return out;
}

double frobenius_norm(const Matrix& m) {
  // Eigen's stableNorm avoids overflow for large-magnitude gradients.
  return m.size() == 0 ? 0.0 : m.stableNorm();
}

Vector singular_values(const Matrix& m) {
  if (m.size() == 0) return Vector();
  Eigen::BDCSVD<Matrix> svd(m);
  return svd.singularValues();
}

double optimal_rank_r_error(const Matrix& m, Eigen::Index r) {
  const Eigen::Index k = std::min(m.rows(), m.cols());
  if (r < 0 || r > k) {
    throw RangeError("rank " + std::to_string(r) + " outside [0, " + std::to_string(k) + "]");
  }
  if (r == k) return 0.0;
  const Vector sv = singular_values(m);
  double tail = 0.0;
  // Smallest values first keeps the sum accurate.
  for (Eigen::Index i = k - 1; i >= r; --i) tail += sv(i) * sv(i);
  return std::sqrt(tail);
}

double pearson_correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw DimensionError("pearson_correlation: element counts differ (" +
                         std::to_string(x.size()) + " vs " + std::to_string(y.size()) + ")");
  }
  if (x.size() < 2) throw DegenerateInputError("pearson_correlation: need at least 2 entries");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) {
    throw DegenerateInputError("pearson_correlation: zero-variance input");
  }
  const double rho = sxy / std::sqrt(sxx * syy);
  return std::clamp(rho, -1.0, 1.0);
}

double pearson_correlation(const GradientMatrix& a, const GradientMatrix& b) {
  const auto xa = a.row_major();
  const auto xb = b.row_major();
  return pearson_correlation(xa, xb);
}

Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng, double sigma) {
  std::normal_distribution<double> dist(0.0, sigma);
  Matrix m(rows, cols);
  // Fill row-major so the stream order matches the trace layout.
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = dist(rng);
  }
  return m;
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace edgc
