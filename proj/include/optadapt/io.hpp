// Copyright 2026 The optadapt Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef OPTADAPT_IO_HPP_
#define OPTADAPT_IO_HPP_

#include <filesystem>
#include <string>
#include <vector>

namespace optadapt {

// Reads a whole file; throws ParseError if it cannot be opened.
std::string read_file(const std::filesystem::path& path);

// Writes atomically: content goes to a sibling temp file which is then
// renamed over the destination, so readers never observe a partial file.
void atomic_write_file(const std::filesystem::path& path, const std::string& content);

// Formats a double with enough digits to round-trip exactly (%.17g),
// deterministic across runs.
std::string format_double(double v);

// One CSV row from already-formatted cells.
std::string csv_row(const std::vector<std::string>& cells);

// Minimal CSV splitter for tests and the figure exporter (no quoting —
// none of the emitted artifacts needs it).
std::vector<std::string> split_csv_row(const std::string& line);

}  // namespace optadapt

#endif  // OPTADAPT_IO_HPP_
