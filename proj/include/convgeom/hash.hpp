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

#ifndef CONVGEOM_HASH_HPP
#define CONVGEOM_HASH_HPP

#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>

namespace convgeom {

/// Lower-case hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

/// SHA-256 over length-prefixed fields, so ("ab","c") and ("a","bc") differ.
std::string sha256_fields_hex(std::initializer_list<std::string_view> fields);

/// Stable 64-bit digest of length-prefixed fields (first 8 bytes of SHA-256).
std::uint64_t stable_hash64(std::initializer_list<std::string_view> fields);

std::string read_file(const std::string& path);

}  // namespace convgeom

#endif  // CONVGEOM_HASH_HPP
