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

#include "convgeom/types.hpp"

namespace convgeom {

namespace {
constexpr PerDimension<DimensionInfo> kInfo = {{
    {"disagree_vs_agree", "disagree", "agree"},
    {"attacking_vs_respectful", "attacking", "respectful"},
    {"emotional_vs_factual", "emotional", "factual"},
}};
}  // namespace

const DimensionInfo& info(Dimension d) { return kInfo[index(d)]; }

std::string_view name(Dimension d) { return kInfo[index(d)].name; }

std::optional<Dimension> parse_dimension(std::string_view s) {
    for (Dimension d : kAllDimensions) {
        if (name(d) == s) return d;
    }
    return std::nullopt;
}

}  // namespace convgeom
