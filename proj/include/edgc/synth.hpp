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

#ifndef EDGC_SYNTH_HPP_
#define EDGC_SYNTH_HPP_

#include <cstdint>
#include <utility>
#include <vector>

#include "edgc/dac.hpp"
#include "edgc/matrix_core.hpp"

namespace edgc {

/// Standard-deviation schedule of a synthetic gradient stream.
struct SynthSchedule {
  enum class Form { kExponential, kPiecewise };

  Form form = Form::kExponential;
  double sigma0 = 1.0;
  double tau = 1000.0;  // iterations per e-fold (exponential form)
  /// (iteration, sigma) knots, linearly interpolated and held flat outside
  /// (piecewise form). Knot iterations must be strictly increasing.
  std::vector<std::pair<double, double>> knots;
  std::vector<MatrixShape> shapes;
  std::uint64_t seed = 0;

  double sigma_at(std::uint64_t iteration) const;

  /// Throws RangeError for non-positive sigma, tau or shapes.
  void validate() const;
};

/// Iteration t yields i.i.d. N(0, sigma(t)^2) matrices. Every (t, layer)
/// draws from its own seeded stream, so any iteration can be regenerated
/// without replaying the ones before it.
class SynthStream {
 public:
  explicit SynthStream(SynthSchedule schedule);

  std::vector<GradientMatrix> at(std::uint64_t iteration) const;
  std::vector<GradientMatrix> next() { return at(next_++); }
  const SynthSchedule& schedule() const { return schedule_; }

 private:
  SynthSchedule schedule_;
  std::uint64_t next_ = 0;
};

}  // namespace edgc

#endif  // EDGC_SYNTH_HPP_
