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

#ifndef EDGC_COMPRESSOR_HPP_
#define EDGC_COMPRESSOR_HPP_

#include <cstdint>

#include "edgc/matrix_core.hpp"

namespace edgc {

/// Low-rank factors whose product P * Q^T approximates a gradient.
struct LowRankFactors {
  Matrix p;  // m x r, orthonormal columns after compression
  Matrix q;  // n x r

  Eigen::Index rank() const { return p.cols(); }
  Eigen::Index rows() const { return p.rows(); }
  Eigen::Index cols() const { return q.rows(); }
};

/// Per-(matrix, worker) compressor memory: the error-feedback residual and
/// the warm-start basis for the next power iteration.
///
/// A state is bound to one matrix shape for its lifetime. It is single-owner;
/// distinct states may be used from different threads.
class CompressorState {
 public:
  /// Throws RangeError unless 1 <= rank <= min(rows, cols).
  CompressorState(Eigen::Index rows, Eigen::Index cols, Eigen::Index rank, std::uint64_t rng_seed);

  Eigen::Index rows() const { return residual_.rows(); }
  Eigen::Index cols() const { return residual_.cols(); }
  Eigen::Index rank() const { return q_warm_.cols(); }
  std::uint64_t rng_seed() const { return rng_seed_; }

  const Matrix& residual() const { return residual_; }
  const Matrix& q_warm() const { return q_warm_; }

  /// Reallocates the warm-start basis. Shrinking keeps the leading columns;
  /// growing appends fresh standard-Gaussian columns drawn from a stream
  /// keyed by (rng_seed, column index). The residual is preserved.
  void set_rank(Eigen::Index new_rank);

  void reset_residual() { residual_.setZero(); }

 private:
  friend LowRankFactors compress(const GradientMatrix& m, CompressorState& state);
  friend LowRankFactors compress(const Matrix& m, CompressorState& state);

  Matrix residual_;
  Matrix q_warm_;
  std::uint64_t rng_seed_;
};

/// One warm-started power-iteration round with error feedback:
///   M' = M + residual;  P = orth(M' Q_warm);  Q = M'^T P
/// then residual <- M' - P Q^T and Q_warm <- Q.
/// Throws DimensionError if the state is bound to another shape and
/// NumericError on non-finite input.
LowRankFactors compress(const Matrix& m, CompressorState& state);
LowRankFactors compress(const GradientMatrix& m, CompressorState& state);

Matrix decompress(const LowRankFactors& f);

/// In-place modified Gram-Schmidt with one re-orthogonalization pass.
/// Columns that vanish numerically after projection are set to zero.
void orthogonalize_columns(Matrix& a);

/// Number of reals sent for rank-r factors of an m x n matrix: r * (m + n).
constexpr std::uint64_t compressed_element_count(std::uint64_t m, std::uint64_t n,
                                                 std::uint64_t r) {
  return r * (m + n);
}

}  // namespace edgc

#endif  // EDGC_COMPRESSOR_HPP_
