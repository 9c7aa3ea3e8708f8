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

#include "edgc/trace.hpp"

#include <bit>
#include <cstring>
#include <filesystem>

#include "edgc/errors.hpp"

namespace edgc {

namespace {

template <typename T>
void put_le(std::ofstream& out, T v) {
  unsigned char b[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) b[i] = static_cast<unsigned char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <typename T>
T get_le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return static_cast<T>(v);
}

void put_f32(std::ofstream& out, float f) { put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(f)); }

}  // namespace

std::uint64_t TraceHeader::iteration_bytes() const {
  std::uint64_t n = 0;
  for (const auto& l : layers) n += static_cast<std::uint64_t>(l.elements());
  return n * kElementWidth;
}

TraceWriter::TraceWriter(const std::string& path, std::vector<MatrixShape> layers)
    : out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw FormatError("cannot open " + path + " for writing");
  header_.layers = std::move(layers);
  out_.write(TraceHeader::kMagic, 4);
  put_le<std::uint16_t>(out_, TraceHeader::kVersion);
  put_le<std::uint16_t>(out_, TraceHeader::kElementWidth);
  put_le<std::uint32_t>(out_, static_cast<std::uint32_t>(header_.layers.size()));
  put_le<std::uint64_t>(out_, 0);
  for (const auto& l : header_.layers) {
    put_le<std::uint32_t>(out_, static_cast<std::uint32_t>(l.rows));
    put_le<std::uint32_t>(out_, static_cast<std::uint32_t>(l.cols));
  }
}

TraceWriter::~TraceWriter() {
  try {
    close();
  } catch (...) {
  }
}

void TraceWriter::append(std::span<const GradientMatrix> layers) {
  if (closed_) throw FormatError("trace writer already closed");
  if (layers.size() != header_.layers.size()) {
    throw DimensionError("iteration has " + std::to_string(layers.size()) + " layers, trace expects " +
                         std::to_string(header_.layers.size()));
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& g = layers[l];
    if (g.rows() != header_.layers[l].rows || g.cols() != header_.layers[l].cols) {
      throw DimensionError("layer " + std::to_string(l) + " shape does not match the trace header");
    }
    for (Eigen::Index r = 0; r < g.rows(); ++r) {
      for (Eigen::Index c = 0; c < g.cols(); ++c) put_f32(out_, static_cast<float>(g(r, c)));
    }
  }
  ++header_.iteration_count;
}

void TraceWriter::close() {
  if (closed_) return;
  closed_ = true;
  out_.seekp(12);
  put_le<std::uint64_t>(out_, header_.iteration_count);
  out_.close();
}

TraceReader::TraceReader(const std::string& path) : in_(path, std::ios::binary) {
  if (!in_) throw FormatError("cannot open trace " + path);
  std::error_code ec;
  const auto file_bytes = static_cast<std::uint64_t>(std::filesystem::file_size(path, ec));
  if (ec) throw FormatError("cannot stat trace " + path);

  unsigned char fixed[20];
  if (file_bytes < sizeof(fixed) || !in_.read(reinterpret_cast<char*>(fixed), sizeof(fixed))) {
    throw FormatError("trace truncated at byte " + std::to_string(file_bytes) + ": header needs 20 bytes");
  }
  if (std::memcmp(fixed, TraceHeader::kMagic, 4) != 0) {
    throw FormatError("bad trace magic at byte 0 (expected \"EDGT\")");
  }
  const auto version = get_le<std::uint16_t>(fixed + 4);
  if (version != TraceHeader::kVersion) {
    throw FormatError("unsupported trace version " + std::to_string(version) + " at byte 4");
  }
  const auto width = get_le<std::uint16_t>(fixed + 6);
  if (width != TraceHeader::kElementWidth) {
    throw FormatError("unsupported element width " + std::to_string(width) + " at byte 6");
  }
  const auto layer_count = get_le<std::uint32_t>(fixed + 8);
  header_.iteration_count = get_le<std::uint64_t>(fixed + 12);

  if (file_bytes < 20 + 8ULL * layer_count) {
    throw FormatError("trace truncated at byte " + std::to_string(file_bytes) + ": layer table needs " +
                      std::to_string(20 + 8ULL * layer_count - file_bytes) + " more bytes");
  }
  header_.layers.resize(layer_count);
  for (std::uint32_t l = 0; l < layer_count; ++l) {
    unsigned char dims[8];
    in_.read(reinterpret_cast<char*>(dims), 8);
    header_.layers[l].rows = get_le<std::uint32_t>(dims);
    header_.layers[l].cols = get_le<std::uint32_t>(dims + 4);
    if (header_.layers[l].rows == 0 || header_.layers[l].cols == 0) {
      throw FormatError("layer " + std::to_string(l) + " has a zero dimension at byte " +
                        std::to_string(20 + 8ULL * l));
    }
  }
  const std::uint64_t expected = header_.expected_file_bytes();
  if (file_bytes < expected) {
    throw FormatError("trace truncated at byte " + std::to_string(file_bytes) + ": missing " +
                      std::to_string(expected - file_bytes) + " bytes of " + std::to_string(expected));
  }
  if (file_bytes > expected) {
    throw FormatError("trace has " + std::to_string(file_bytes - expected) +
                      " trailing bytes after byte " + std::to_string(expected));
  }
}

std::optional<std::vector<GradientMatrix>> TraceReader::next() {
  if (next_iteration_ >= header_.iteration_count) return std::nullopt;
  std::vector<GradientMatrix> out;
  out.reserve(header_.layers.size());
  for (std::size_t l = 0; l < header_.layers.size(); ++l) {
    const auto& shape = header_.layers[l];
    const auto count = static_cast<std::size_t>(shape.elements());
    auto& raw = buffer_;
    raw.resize(count * 4);
    const auto offset = static_cast<std::uint64_t>(in_.tellg());
    if (!in_.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()))) {
      throw FormatError("trace read failed at byte " + std::to_string(offset));
    }
    Matrix m(shape.rows, shape.cols);
    for (std::size_t i = 0; i < count; ++i) {
      const float f = std::bit_cast<float>(get_le<std::uint32_t>(raw.data() + 4 * i));
      m(static_cast<Eigen::Index>(i) / shape.cols, static_cast<Eigen::Index>(i) % shape.cols) = f;
    }
    try {
      out.emplace_back(std::move(m), static_cast<int>(l), 0, next_iteration_);
    } catch (const NumericError&) {
      throw FormatError("non-finite value in layer " + std::to_string(l) + " at byte " + std::to_string(offset));
    }
  }
  ++next_iteration_;
  return out;
}

void write_trace(const std::string& path, std::span<const std::vector<GradientMatrix>> iterations) {
  std::vector<MatrixShape> shapes;
  if (!iterations.empty()) {
    for (const auto& g : iterations.front()) shapes.push_back({g.rows(), g.cols()});
  }
  TraceWriter w(path, shapes);
  for (const auto& it : iterations) w.append(it);
  w.close();
}

}  // namespace edgc
