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

#include "edgc/synth.hpp"

#include <cmath>

#include "edgc/errors.hpp"

namespace edgc {

double SynthSchedule::sigma_at(std::uint64_t iteration) const {
  const auto t = static_cast<double>(iteration);
  if (form == Form::kExponential) return sigma0 * std::exp(-t / tau);
  if (knots.empty()) return sigma0;
  if (t <= knots.front().first) return knots.front().second;
  if (t >= knots.back().first) return knots.back().second;
  for (std::size_t i = 1; i < knots.size(); ++i) {
    if (t <= knots[i].first) {
      const auto& [t0, s0] = knots[i - 1];
      const auto& [t1, s1] = knots[i];
      return s0 + (t - t0) / (t1 - t0) * (s1 - s0);
    }
  }
  return knots.back().second;
}

void SynthSchedule::validate() const {
  if (shapes.empty()) throw RangeError("synthetic schedule needs at least one shape");
  for (const auto& s : shapes) {
    if (s.rows < 1 || s.cols < 1) throw RangeError("synthetic shapes must be positive");
  }
  if (form == Form::kExponential) {
    if (!(sigma0 > 0.0) || !(tau > 0.0)) throw RangeError("sigma0 and tau must be positive");
    return;
  }
  for (std::size_t i = 0; i < knots.size(); ++i) {
    if (!(knots[i].second > 0.0)) throw RangeError("piecewise sigma knots must be positive");
    if (i > 0 && !(knots[i].first > knots[i - 1].first)) {
      throw RangeError("piecewise knot iterations must be strictly increasing");
    }
  }
  if (knots.empty() && !(sigma0 > 0.0)) throw RangeError("sigma0 must be positive");
}

SynthStream::SynthStream(SynthSchedule schedule) : schedule_(std::move(schedule)) {
  schedule_.validate();
}

std::vector<GradientMatrix> SynthStream::at(std::uint64_t iteration) const {
  const double sigma = schedule_.sigma_at(iteration);
  const std::uint64_t iter_seed = derive_seed(schedule_.seed, seed_stream::kSynthStream, iteration);
  std::vector<GradientMatrix> out;
  out.reserve(schedule_.shapes.size());
  for (std::size_t l = 0; l < schedule_.shapes.size(); ++l) {
    Rng rng(derive_seed(iter_seed, l));
    const auto& s = schedule_.shapes[l];
    out.emplace_back(gaussian_matrix(s.rows, s.cols, rng, sigma), static_cast<int>(l), 0, iteration);
  }
  return out;
}

}  // namespace edgc
