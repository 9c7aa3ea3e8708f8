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

#ifndef EDGC_ENTROPY_HPP_
#define EDGC_ENTROPY_HPP_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "edgc/matrix_core.hpp"

namespace edgc {

/// Two-level down-sampling rates of the gradient data sampler.
struct SamplerConfig {
  double isr = 0.1;   // iteration sampling rate (alpha)
  double gsr = 0.25;  // per-matrix element sampling rate (beta)
  std::uint64_t rng_seed = 0;

  /// Throws RangeError unless both rates lie in (0, 1].
  void validate() const;
};

/// True iff iteration mod round(1/alpha) == 0.
bool should_sample_iteration(std::uint64_t iteration, double alpha);

/// ceil(beta * total), clamped to [1, total].
std::uint64_t subsample_count(std::uint64_t total, double beta);

/// ceil(beta * m * n) entries drawn uniformly without replacement.
/// Deterministic in (M, beta, seed).
std::vector<double> subsample_entries(const GradientMatrix& m, double beta, std::uint64_t seed);

/// ln(sigma_hat) + 0.5 ln(2 pi e) with the unbiased (n - 1) sigma estimator.
/// Throws DegenerateInputError for fewer than 2 samples or sigma_hat == 0.
double entropy_gaussian_plugin(std::span<const double> samples);

enum class BinRule { kFreedmanDiaconis, kScott, kSturges };

/// Histogram differential-entropy estimate  -sum p_i ln(p_i / width).
/// Throws DegenerateInputError for fewer than 2 samples or zero range.
double entropy_histogram(std::span<const double> samples,
                         BinRule rule = BinRule::kFreedmanDiaconis);

struct Histogram {
  double lo = 0.0;
  double width = 0.0;
  std::vector<std::uint64_t> counts;
};

/// Fixed-range histogram; values outside [lo, hi] land in the edge bins.
Histogram make_histogram(std::span<const double> samples, double lo, double hi, std::size_t bins);

/// Entropies of the sampled layer matrices of one iteration.
struct EntropyRecord {
  std::uint64_t iteration = 0;
  std::vector<double> layer_entropies;

  /// Mean over layers; throws DegenerateInputError when empty.
  double entropy() const;
};

struct EntropyWindow {
  std::uint64_t window_index = 0;
  std::uint64_t window_size = 0;
  double mean_entropy = 0.0;  // nats
  std::uint64_t samples_used = 0;
  std::vector<double> per_iteration_entropies;
};

/// Throws DegenerateInputError for an empty window.
EntropyWindow close_window(std::uint64_t window_index, std::uint64_t window_size,
                           std::span<const EntropyRecord> records);

/// Per-window |sampled - full| / |full|. Throws DimensionError on a length
/// mismatch and DegenerateInputError on a zero baseline entry.
std::vector<double> relative_change_rate(std::span<const double> sampled,
                                         std::span<const double> full);

enum class EntropyEstimator { kGaussianPlugin, kHistogram };

double estimate_entropy(std::span<const double> samples, EntropyEstimator estimator);

/// Streams per-iteration gradients and emits one EntropyWindow each time a
/// window of `window_size` iterations closes. Single-owner.
class GradientDataSampler {
 public:
  GradientDataSampler(SamplerConfig config, std::uint64_t window_size,
                      EntropyEstimator estimator = EntropyEstimator::kGaussianPlugin);

  /// Feeds one iteration. Iterations must be non-decreasing. Returns the
  /// window that closes at this iteration, if any.
  std::optional<EntropyWindow> observe(std::uint64_t iteration,
                                       std::span<const GradientMatrix> layers);

  /// Closes a partially filled window; nullopt when nothing was sampled.
  std::optional<EntropyWindow> flush();

  const SamplerConfig& config() const { return config_; }
  std::uint64_t window_size() const { return window_size_; }

  /// Entropy of one iteration's layers under this sampler's (beta, seed).
  EntropyRecord measure(std::uint64_t iteration, std::span<const GradientMatrix> layers) const;

 private:
  SamplerConfig config_;
  std::uint64_t window_size_;
  EntropyEstimator estimator_;
  std::uint64_t current_window_ = 0;
  std::vector<EntropyRecord> pending_;
};

/// CSV rows: window_index,mean_entropy,samples_used
void write_entropy_csv(std::ostream& out, std::span<const EntropyWindow> windows);

}  // namespace edgc

#endif  // EDGC_ENTROPY_HPP_
