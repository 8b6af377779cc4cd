/*
 * Copyright 2026 The dmpc Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef DMPC_CSV_HPP
#define DMPC_CSV_HPP

#include <string>
#include <vector>

#include "dmpc/errors.hpp"

namespace dmpc {

/// Shortest decimal representation that parses back to the same double
/// (round-trip exact), so CSV artifacts are lossless and byte-stable.
std::string format_double(double value);

/// Round-trip partner of format_double; throws ConfigError on junk.
double parse_double(const std::string& text);

/// Plain comma-separated table with one mandatory header row and '\n' line
/// endings.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  ///< -1 when absent
};

void write_csv(const std::string& path, const CsvTable& table);
CsvTable read_csv(const std::string& path);

}  // namespace dmpc

#endif  // DMPC_CSV_HPP
