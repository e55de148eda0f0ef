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

#ifndef CONVGEOM_TYPES_HPP
#define CONVGEOM_TYPES_HPP

#include <array>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>

namespace convgeom {

/// The three annotated conflict dimensions. Higher values point to the
/// second-named pole (agree, respectful, factual).
enum class Dimension : std::size_t {
    DisagreeVsAgree = 0,
    AttackingVsRespectful = 1,
    EmotionalVsFactual = 2,
};

inline constexpr std::size_t kNumDimensions = 3;
inline constexpr std::array<Dimension, kNumDimensions> kAllDimensions = {
    Dimension::DisagreeVsAgree,
    Dimension::AttackingVsRespectful,
    Dimension::EmotionalVsFactual,
};

struct DimensionInfo {
    std::string_view name;
    std::string_view negative_pole;
    std::string_view positive_pole;
};

const DimensionInfo& info(Dimension d);
std::string_view name(Dimension d);
constexpr std::size_t index(Dimension d) { return static_cast<std::size_t>(d); }

/// Parses a dimension name such as "disagree_vs_agree"; nullopt if unknown.
std::optional<Dimension> parse_dimension(std::string_view s);

/// One value per dimension, indexed by `index(Dimension)`.
template <typename T>
using PerDimension = std::array<T, kNumDimensions>;

/// Post-level (replication-averaged) metric values keyed by post_id.
using PostMetrics = std::unordered_map<std::string, PerDimension<double>>;

/// Integer annotation range, inclusive on both ends.
struct AnnotationScale {
    int min = -5;
    int max = 5;

    constexpr int size() const { return max - min + 1; }
    constexpr bool contains(double v) const { return v >= min && v <= max; }
    void validate() const {
        if (!(min < 0 && 0 < max)) {
            throw std::invalid_argument("annotation scale must satisfy min < 0 < max");
        }
    }
};

}  // namespace convgeom

#endif  // CONVGEOM_TYPES_HPP
