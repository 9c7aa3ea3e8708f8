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

#ifndef EDGC_TEXT_IO_HPP_
#define EDGC_TEXT_IO_HPP_

#include <string>
#include <string_view>
#include <vector>

namespace edgc {

/// Shortest round-trip decimal form, identical on every run.
std::string format_double(double v);

/// Splits one CSV line on commas; surrounding whitespace is trimmed.
std::vector<std::string> split_csv_line(std::string_view line);

/// Parses a whole numeric CSV file. A first line that does not parse as
/// numbers is treated as a header and skipped. Throws FormatError.
std::vector<std::vector<double>> read_numeric_csv(const std::string& path);

}  // namespace edgc

#endif  // EDGC_TEXT_IO_HPP_
