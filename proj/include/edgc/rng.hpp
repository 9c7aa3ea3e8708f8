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

#ifndef EDGC_RNG_HPP_
#define EDGC_RNG_HPP_

#include <cstdint>
#include <random>

namespace edgc {

using Rng = std::mt19937_64;

// Seed splitting. Every consumer of randomness derives its own stream from
// the single top-level seed as splitmix64(seed ^ mix(stream) ^ mix(index)),
// so two consumers never share a generator and each is reproducible alone.
namespace seed_stream {
inline constexpr std::uint64_t kCompressorBasis = 0x01;
inline constexpr std::uint64_t kSubsample = 0x02;
inline constexpr std::uint64_t kEigenSampling = 0x03;
inline constexpr std::uint64_t kSynthStream = 0x04;
inline constexpr std::uint64_t kToyData = 0x05;
inline constexpr std::uint64_t kToyInit = 0x06;
inline constexpr std::uint64_t kToyBatch = 0x07;
inline constexpr std::uint64_t kCalibrationNoise = 0x08;
}  // namespace seed_stream

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream,
                                    std::uint64_t index = 0) {
  return splitmix64(seed ^ splitmix64(stream * 0x632be59bd9b4e019ULL) ^
                    splitmix64(~index));
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream,
                    std::uint64_t index = 0) {
  return Rng(derive_seed(seed, stream, index));
}

}  // namespace edgc

#endif  // EDGC_RNG_HPP_
