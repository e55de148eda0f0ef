// Copyright 2026 The convgeom Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CONVGEOM_CSV_HPP
#define CONVGEOM_CSV_HPP

#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace convgeom::csv {

/// Quotes a field only when it contains a comma, quote, or newline.
std::string escape(std::string_view field);

std::string join(const std::vector<std::string>& fields);

/// Splits one CSV record; handles quoted fields with doubled quotes.
std::vector<std::string> split(std::string_view line);

/// Reads all records, skipping blank lines.
std::vector<std::vector<std::string>> read_all(std::istream& in);

/// Shortest round-trippable text of a double ("%.17g").
std::string format_exact(double v);
std::string format_optional(const std::optional<double>& v);

}  // namespace convgeom::csv

#endif  // CONVGEOM_CSV_HPP
