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

#ifndef EDGC_TRACE_HPP_
#define EDGC_TRACE_HPP_

#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "edgc/dac.hpp"
#include "edgc/matrix_core.hpp"

namespace edgc {

/// Binary gradient trace, all integers little-endian:
///
///   offset  size  field
///   0       4     magic "EDGT"
///   4       2     version (1)
///   6       2     element width in bytes (4: IEEE-754 binary32)
///   8       4     layer_count L
///   12      8     iteration_count T
///   20      8L    per layer: rows (u32), cols (u32)
///   20+8L   ...   T iterations, each the L layers in order, row-major
struct TraceHeader {
  static constexpr char kMagic[4] = {'E', 'D', 'G', 'T'};
  static constexpr std::uint16_t kVersion = 1;
  static constexpr std::uint16_t kElementWidth = 4;

  std::vector<MatrixShape> layers;
  std::uint64_t iteration_count = 0;

  std::uint64_t header_bytes() const { return 20 + 8 * static_cast<std::uint64_t>(layers.size()); }
  std::uint64_t iteration_bytes() const;
  std::uint64_t expected_file_bytes() const { return header_bytes() + iteration_count * iteration_bytes(); }
};

/// Streams iterations to disk; the iteration count is patched on close.
class TraceWriter {
 public:
  TraceWriter(const std::string& path, std::vector<MatrixShape> layers);
  ~TraceWriter();
  TraceWriter(const TraceWriter&) = delete;
  TraceWriter& operator=(const TraceWriter&) = delete;

  /// Throws DimensionError when the layer list does not match the header.
  void append(std::span<const GradientMatrix> layers);
  void close();

 private:
  std::ofstream out_;
  TraceHeader header_;
  bool closed_ = false;
};

/// Reads a trace one iteration at a time in constant memory.
class TraceReader {
 public:
  /// Validates magic, version, width and total length up front; throws
  /// FormatError naming the byte offset of the first problem.
  explicit TraceReader(const std::string& path);

  const TraceHeader& header() const { return header_; }

  /// Next iteration's matrices in layer order, or nullopt at the end.
  std::optional<std::vector<GradientMatrix>> next();

 private:
  std::ifstream in_;
  TraceHeader header_;
  std::uint64_t next_iteration_ = 0;
  std::vector<unsigned char> buffer_;
};

/// Convenience wrapper over TraceWriter.
void write_trace(const std::string& path, std::span<const std::vector<GradientMatrix>> iterations);

}  // namespace edgc

#endif  // EDGC_TRACE_HPP_
