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

#include "edgc/compressor.hpp"

#include <cmath>
#include <string>

#include "edgc/errors.hpp"

namespace edgc {

namespace {

void check_rank(Eigen::Index rows, Eigen::Index cols, Eigen::Index rank) {
  const Eigen::Index k = std::min(rows, cols);
  if (rank < 1 || rank > k) {
    throw RangeError("compression rank " + std::to_string(rank) + " outside [1, " +
                     std::to_string(k) + "]");
  }
}

// Column j of the warm-start basis always comes from the same stream, so
// shrinking then regrowing reproduces the same fresh columns.
Vector basis_column(Eigen::Index n, std::uint64_t seed, Eigen::Index column) {
  Rng rng = make_rng(seed, seed_stream::kCompressorBasis, static_cast<std::uint64_t>(column));
  std::normal_distribution<double> dist(0.0, 1.0);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = dist(rng);
  return v;
}

}  // namespace

CompressorState::CompressorState(Eigen::Index rows, Eigen::Index cols, Eigen::Index rank,
                                 std::uint64_t rng_seed)
    : residual_(Matrix::Zero(rows, cols)), q_warm_(cols, 0), rng_seed_(rng_seed) {
  if (rows <= 0 || cols <= 0) throw DimensionError("compressor state needs positive dimensions");
  check_rank(rows, cols, rank);
  set_rank(rank);
}

void CompressorState::set_rank(Eigen::Index new_rank) {
  check_rank(residual_.rows(), residual_.cols(), new_rank);
  const Eigen::Index old_rank = q_warm_.cols();
  if (new_rank == old_rank) return;
  if (new_rank < old_rank) {
    Matrix kept = q_warm_.leftCols(new_rank);
    q_warm_ = std::move(kept);
    return;
  }
  Matrix grown(q_warm_.rows(), new_rank);
  grown.leftCols(old_rank) = q_warm_;
  for (Eigen::Index j = old_rank; j < new_rank; ++j) {
    grown.col(j) = basis_column(q_warm_.rows(), rng_seed_, j);
  }
  q_warm_ = std::move(grown);
}

void orthogonalize_columns(Matrix& a) {
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    const double before = a.col(j).norm();
    if (before == 0.0) continue;
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index k = 0; k < j; ++k) {
        const double proj = a.col(k).dot(a.col(j));
        a.col(j) -= proj * a.col(k);
      }
    }
    const double after = a.col(j).norm();
    if (after <= 1e-12 * before) {
      a.col(j).setZero();
    } else {
      a.col(j) /= after;
    }
  }
}

LowRankFactors compress(const Matrix& m, CompressorState& state) {
  if (m.rows() != state.rows() || m.cols() != state.cols()) {
    throw DimensionError("compressor state bound to " + std::to_string(state.rows()) + "x" +
                         std::to_string(state.cols()) + ", got " + std::to_string(m.rows()) +
                         "x" + std::to_string(m.cols()));
  }
  if (!m.allFinite()) throw NumericError("compress: non-finite gradient entries");

  Matrix corrected = m + state.residual_;
  LowRankFactors f;
  f.p = corrected * state.q_warm_;
  orthogonalize_columns(f.p);
  f.q = corrected.transpose() * f.p;

  state.residual_ = corrected - f.p * f.q.transpose();
  // A zero column in Q would stay zero forever; keep the previous basis
  // vector for it instead.
  for (Eigen::Index j = 0; j < f.q.cols(); ++j) {
    if (f.q.col(j).squaredNorm() > 0.0) state.q_warm_.col(j) = f.q.col(j);
  }
  return f;
}

LowRankFactors compress(const GradientMatrix& m, CompressorState& state) {
  return compress(m.values(), state);
}

Matrix decompress(const LowRankFactors& f) { return f.p * f.q.transpose(); }

}  // namespace edgc
