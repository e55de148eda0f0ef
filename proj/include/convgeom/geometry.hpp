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

#ifndef CONVGEOM_GEOMETRY_HPP
#define CONVGEOM_GEOMETRY_HPP

#include <istream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "convgeom/corpus.hpp"
#include "convgeom/types.hpp"

namespace convgeom {

/// Which posts count as the "previous post" for dt_prev.
enum class PrevScope {
    Discussion,  // temporal predecessor anywhere in the discussion
    Branch,      // predecessor within the focal post's branch (or the root)
};

std::optional<PrevScope> parse_prev_scope(std::string_view s);

/// Regressors and response values for one annotated (non-root) post.
struct FeatureRow {
    std::string post_id;
    std::string discussion_id;
    int depth = 1;
    std::optional<double> dt_prev;    // hours
    std::optional<double> dt_parent;  // hours
    PerDimension<double> metric{};
    PerDimension<std::optional<double>> parent_metric{};
    PerDimension<std::optional<double>> sib_older_mean{};
    PerDimension<std::optional<int>> br_neg{};

    bool operator==(const FeatureRow&) const = default;
};

class NegativeDeltaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class MissingAnnotationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Hours since the temporal predecessor; nullopt for the earliest post.
std::optional<double> delta_t_prev(const Corpus& corpus, const DiscussionTree& tree, const std::string& post_id,
                                   PrevScope scope = PrevScope::Discussion);

/// Hours since the parent was posted; nullopt for the root.
/// Throws NegativeDeltaError when the reply predates its parent.
std::optional<double> delta_t_parent(const Corpus& corpus, const DiscussionTree& tree, const std::string& post_id);

/// Mean of `dim` over annotated siblings that precede the post in
/// (timestamp, post_id) order.
std::optional<double> older_sibling_mean(const DiscussionTree& tree, const std::string& post_id, Dimension dim,
                                         const PostMetrics& metrics);

/// 1 iff the branch root's value is strictly negative. nullopt for depth-1
/// posts or when the branch root is not annotated.
std::optional<int> br_neg_indicator(const DiscussionTree& tree, const std::string& post_id, Dimension dim,
                                    const PostMetrics& metrics);

struct FeatureOptions {
    PrevScope prev_scope = PrevScope::Discussion;
    /// Throw MissingAnnotationError for an unannotated non-root post instead
    /// of dropping its row.
    bool strict = true;
};

struct FeatureTable {
    std::vector<FeatureRow> rows;        // ordered by (discussion_id, timestamp, post_id)
    std::vector<std::string> warnings;   // excluded rows
};

FeatureTable compute_feature_table(const Corpus& corpus, const PostMetrics& metrics, const FeatureOptions& options = {});

std::vector<std::string> feature_csv_header();
void write_feature_csv(std::ostream& out, const std::vector<FeatureRow>& rows);
/// Inverse of write_feature_csv. Throws std::runtime_error on a malformed file.
std::vector<FeatureRow> read_feature_csv(std::istream& in);

}  // namespace convgeom

#endif  // CONVGEOM_GEOMETRY_HPP
