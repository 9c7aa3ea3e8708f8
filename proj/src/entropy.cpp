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

#include "edgc/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>
#include <string>

#include "edgc/errors.hpp"
#include "edgc/text_io.hpp"

namespace edgc {

namespace {

const double kHalfLog2PiE = 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e);

// Histogram bins are capped so heavy-tailed input cannot exhaust memory.
constexpr std::size_t kMaxBins = std::size_t{1} << 22;

// Counter-based splitmix64 stream; index draws are the hot loop of subsampling.
class IndexStream {
 public:
  explicit IndexStream(std::uint64_t seed) : state_(seed) {}

  // Uniform integer in [0, bound), multiply-shift with rejection (Lemire).
  std::uint32_t below(std::uint32_t bound) {
    std::uint64_t prod = (splitmix64(state_++) >> 32) * bound;
    auto low = static_cast<std::uint32_t>(prod);
    if (low < bound) {
      const std::uint32_t threshold = (0u - bound) % bound;
      while (low < threshold) {
        prod = (splitmix64(state_++) >> 32) * bound;
        low = static_cast<std::uint32_t>(prod);
      }
    }
    return static_cast<std::uint32_t>(prod >> 32);
  }

 private:
  std::uint64_t state_;
};

void check_rate(double rate, const char* name) {
  if (!(rate > 0.0 && rate <= 1.0)) {
    throw RangeError(std::string(name) + " must lie in (0, 1], got " + format_double(rate));
  }
}

// Type-7 quantile of already-partitioned data.
double quantile(std::vector<double>& v, double q) {
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(lo);
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(lo), v.end());
  const double a = v[lo];
  if (frac == 0.0 || lo + 1 >= v.size()) return a;
  const double b = *std::min_element(v.begin() + static_cast<std::ptrdiff_t>(lo) + 1, v.end());
  return a + frac * (b - a);
}

double sample_stddev(std::span<const double> x) {
  const double n = static_cast<double>(x.size());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / (n - 1.0));
}

}  // namespace

void SamplerConfig::validate() const {
  check_rate(isr, "iteration sampling rate");
  check_rate(gsr, "gradient sampling rate");
}

bool should_sample_iteration(std::uint64_t iteration, double alpha) {
  check_rate(alpha, "iteration sampling rate");
  const auto period = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(1.0 / alpha)));
  return iteration % period == 0;
}

std::uint64_t subsample_count(std::uint64_t total, double beta) {
  check_rate(beta, "gradient sampling rate");
  // The small slack absorbs products such as 0.07 * 100 = 7.000000000000001.
  const double exact = beta * static_cast<double>(total);
  auto k = static_cast<std::uint64_t>(std::ceil(exact - 1e-9 * std::max(1.0, exact)));
  return std::clamp<std::uint64_t>(k, 1, total);
}

std::vector<double> subsample_entries(const GradientMatrix& m, double beta, std::uint64_t seed) {
  const auto total = static_cast<std::uint64_t>(m.size());
  const std::uint64_t k = subsample_count(total, beta);
  if (k == total) return m.row_major();
  if (total > std::numeric_limits<std::uint32_t>::max()) {
    throw RangeError("matrix too large to subsample (" + std::to_string(total) + " entries)");
  }

  // Floyd's subset sampling over row-major linear indices; a bitmap marks
  // taken entries.
  const auto n = static_cast<std::uint32_t>(total);
  const auto cols = static_cast<std::uint32_t>(m.cols());
  const auto rows = static_cast<std::uint32_t>(m.rows());
  const double* data = m.values().data();  // column-major storage
  std::vector<std::uint64_t> taken((n + 63) / 64, 0);
  IndexStream draws(derive_seed(seed, seed_stream::kSubsample));
  std::vector<double> out;
  out.reserve(k);
  for (std::uint32_t j = n - static_cast<std::uint32_t>(k); j < n; ++j) {
    std::uint32_t t = draws.below(j + 1);
    if ((taken[t >> 6] >> (t & 63)) & 1u) t = j;
    taken[t >> 6] |= std::uint64_t{1} << (t & 63);
    out.push_back(data[static_cast<std::size_t>(t % cols) * rows + t / cols]);
  }
  return out;
}

double entropy_gaussian_plugin(std::span<const double> samples) {
  if (samples.size() < 2) throw DegenerateInputError("entropy needs at least 2 samples");
  const double sigma = sample_stddev(samples);
  if (!(sigma > 0.0)) throw DegenerateInputError("entropy of a constant sample is undefined");
  return std::log(sigma) + kHalfLog2PiE;
}

double entropy_histogram(std::span<const double> samples, BinRule rule) {
  if (samples.size() < 2) throw DegenerateInputError("entropy needs at least 2 samples");
  const auto [min_it, max_it] = std::minmax_element(samples.begin(), samples.end());
  const double lo = *min_it;
  const double range = *max_it - lo;
  if (!(range > 0.0)) throw DegenerateInputError("entropy of a zero-range sample is undefined");

  const double n = static_cast<double>(samples.size());
  double width = 0.0;
  switch (rule) {
    case BinRule::kFreedmanDiaconis: {
      std::vector<double> copy(samples.begin(), samples.end());
      const double iqr = quantile(copy, 0.75) - quantile(copy, 0.25);
      width = 2.0 * iqr / std::cbrt(n);
      if (width > 0.0) break;
      [[fallthrough]];  // IQR of zero: fall back to Scott
    }
    case BinRule::kScott:
      width = 3.49 * sample_stddev(samples) / std::cbrt(n);
      break;
    case BinRule::kSturges:
      width = range / (std::log2(n) + 1.0);
      break;
  }
  auto bins = static_cast<std::size_t>(std::ceil(range / width));
  bins = std::clamp<std::size_t>(bins, 1, kMaxBins);
  const double delta = range / static_cast<double>(bins);

  std::vector<std::uint64_t> counts(bins, 0);
  for (double v : samples) {
    auto b = static_cast<std::size_t>((v - lo) / delta);
    counts[std::min(b, bins - 1)] += 1;
  }
  double h = 0.0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log(p);
  }
  return h + std::log(delta);
}

Histogram make_histogram(std::span<const double> samples, double lo, double hi, std::size_t bins) {
  if (bins == 0 || !(hi > lo)) throw DegenerateInputError("histogram needs bins > 0 and hi > lo");
  Histogram h;
  h.lo = lo;
  h.width = (hi - lo) / static_cast<double>(bins);
  h.counts.assign(bins, 0);
  for (double v : samples) {
    double pos = std::floor((v - lo) / h.width);
    pos = std::clamp(pos, 0.0, static_cast<double>(bins - 1));
    h.counts[static_cast<std::size_t>(pos)] += 1;
  }
  return h;
}

double EntropyRecord::entropy() const {
  if (layer_entropies.empty()) throw DegenerateInputError("entropy record has no layers");
  return std::accumulate(layer_entropies.begin(), layer_entropies.end(), 0.0) /
         static_cast<double>(layer_entropies.size());
}

EntropyWindow close_window(std::uint64_t window_index, std::uint64_t window_size,
                           std::span<const EntropyRecord> records) {
  if (records.empty()) {
    throw DegenerateInputError("window " + std::to_string(window_index) + " has no sampled iterations");
  }
  EntropyWindow w;
  w.window_index = window_index;
  w.window_size = window_size;
  w.samples_used = records.size();
  w.per_iteration_entropies.reserve(records.size());
  for (const auto& r : records) w.per_iteration_entropies.push_back(r.entropy());
  w.mean_entropy = std::accumulate(w.per_iteration_entropies.begin(), w.per_iteration_entropies.end(), 0.0) /
                   static_cast<double>(records.size());
  return w;
}

std::vector<double> relative_change_rate(std::span<const double> sampled, std::span<const double> full) {
  if (sampled.size() != full.size()) {
    throw DimensionError("relative_change_rate: series lengths differ");
  }
  std::vector<double> out(full.size());
  for (std::size_t i = 0; i < full.size(); ++i) {
    if (full[i] == 0.0) {
      throw DegenerateInputError("relative_change_rate: zero baseline at window " + std::to_string(i));
    }
    out[i] = std::abs(sampled[i] - full[i]) / std::abs(full[i]);
  }
  return out;
}

double estimate_entropy(std::span<const double> samples, EntropyEstimator estimator) {
  return estimator == EntropyEstimator::kGaussianPlugin ? entropy_gaussian_plugin(samples)
                                                         : entropy_histogram(samples);
}

GradientDataSampler::GradientDataSampler(SamplerConfig config, std::uint64_t window_size,
                                         EntropyEstimator estimator)
    : config_(config), window_size_(window_size), estimator_(estimator) {
  config_.validate();
  if (window_size_ == 0) throw RangeError("window size must be positive");
}

EntropyRecord GradientDataSampler::measure(std::uint64_t iteration,
                                           std::span<const GradientMatrix> layers) const {
  EntropyRecord rec;
  rec.iteration = iteration;
  rec.layer_entropies.reserve(layers.size());
  const std::uint64_t iter_seed = derive_seed(config_.rng_seed, seed_stream::kSubsample, iteration);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto samples = subsample_entries(layers[l], config_.gsr, derive_seed(iter_seed, l));
    rec.layer_entropies.push_back(estimate_entropy(samples, estimator_));
  }
  return rec;
}

std::optional<EntropyWindow> GradientDataSampler::observe(std::uint64_t iteration,
                                                          std::span<const GradientMatrix> layers) {
  const std::uint64_t window = iteration / window_size_;
  std::optional<EntropyWindow> closed;
  if (window != current_window_) {
    // Iterations skipped a boundary without landing on its last iteration.
    if (!pending_.empty()) closed = close_window(current_window_, window_size_, pending_);
    pending_.clear();
    current_window_ = window;
  }
  if (should_sample_iteration(iteration, config_.isr) && !layers.empty()) {
    pending_.push_back(measure(iteration, layers));
  }
  if ((iteration + 1) % window_size_ == 0) {
    auto w = close_window(current_window_, window_size_, pending_);
    pending_.clear();
    current_window_ = window + 1;
    return w;
  }
  return closed;
}

std::optional<EntropyWindow> GradientDataSampler::flush() {
  if (pending_.empty()) return std::nullopt;
  auto w = close_window(current_window_, window_size_, pending_);
  pending_.clear();
  ++current_window_;
  return w;
}

void write_entropy_csv(std::ostream& out, std::span<const EntropyWindow> windows) {
  out << "window_index,mean_entropy,samples_used\n";
  for (const auto& w : windows) {
    out << w.window_index << ',' << format_double(w.mean_entropy) << ',' << w.samples_used << '\n';
  }
}

}  // namespace edgc
