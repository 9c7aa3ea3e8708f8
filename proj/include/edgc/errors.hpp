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

#ifndef EDGC_ERRORS_HPP_
#define EDGC_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace edgc {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Rank or index outside its admissible interval.
class RangeError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf encountered where finite values are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Zero variance, zero range, empty windows and similar degenerate inputs.
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

// Shape mismatch, including m > n where the caller must transpose first.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Malformed trace, CSV or JSON input.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Unknown key, wrong type or invalid value in a run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class CalibrationError : public Error {
 public:
  using Error::Error;
};

// No rank >= 1 makes compression cheaper than sending the raw gradient.
class InfeasibleCompressionError : public Error {
 public:
  using Error::Error;
};

// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace edgc

#endif  // EDGC_ERRORS_HPP_
