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

#include "convgeom/geometry.hpp"

#include <algorithm>
#include <map>

#include "convgeom/csv.hpp"

namespace convgeom {

namespace {

constexpr double kSecondsPerHour = 3600.0;

const PerDimension<double>* find_metric(const PostMetrics& metrics, const std::string& id) {
    auto it = metrics.find(id);
    return it == metrics.end() ? nullptr : &it->second;
}

}  // namespace

std::optional<PrevScope> parse_prev_scope(std::string_view s) {
    if (s == "discussion") return PrevScope::Discussion;
    if (s == "branch") return PrevScope::Branch;
    return std::nullopt;
}

std::optional<double> delta_t_prev(const Corpus& corpus, const DiscussionTree& tree, const std::string& post_id,
                                   PrevScope scope) {
    const auto& order = tree.chronological;
    auto it = std::find(order.begin(), order.end(), post_id);
    if (it == order.end()) throw std::out_of_range("post '" + post_id + "' not in discussion " + tree.discussion_id);

    const std::string* branch = nullptr;
    if (scope == PrevScope::Branch) {
        auto br = tree.branch_root_of.find(post_id);
        if (br != tree.branch_root_of.end()) branch = &br->second;
    }
    const std::int64_t t = corpus.post(post_id).timestamp;
    while (it != order.begin()) {
        --it;
        if (branch) {
            auto br = tree.branch_root_of.find(*it);
            bool same_branch = (*it == tree.root_id) || (br != tree.branch_root_of.end() && br->second == *branch);
            if (!same_branch) continue;
        }
        return static_cast<double>(t - corpus.post(*it).timestamp) / kSecondsPerHour;
    }
    return std::nullopt;
}

std::optional<double> delta_t_parent(const Corpus& corpus, const DiscussionTree& tree, const std::string& post_id) {
    auto it = tree.parent.find(post_id);
    if (it == tree.parent.end()) return std::nullopt;
    const std::int64_t dt = corpus.post(post_id).timestamp - corpus.post(it->second).timestamp;
    if (dt < 0) {
        throw NegativeDeltaError("post '" + post_id + "' is timestamped " + std::to_string(-dt) +
                                 " s before its parent '" + it->second + "'");
    }
    return static_cast<double>(dt) / kSecondsPerHour;
}

std::optional<double> older_sibling_mean(const DiscussionTree& tree, const std::string& post_id, Dimension dim,
                                         const PostMetrics& metrics) {
    auto p = tree.parent.find(post_id);
    if (p == tree.parent.end()) return std::nullopt;
    const auto& siblings = tree.children.at(p->second);
    double sum = 0.0;
    int count = 0;
    for (const std::string& s : siblings) {
        if (s == post_id) break;
        if (const auto* m = find_metric(metrics, s)) {
            sum += (*m)[index(dim)];
            ++count;
        }
    }
    if (count == 0) return std::nullopt;
    return sum / count;
}

std::optional<int> br_neg_indicator(const DiscussionTree& tree, const std::string& post_id, Dimension dim,
                                    const PostMetrics& metrics) {
    auto d = tree.depth.find(post_id);
    if (d == tree.depth.end() || d->second < 2) return std::nullopt;
    const auto* m = find_metric(metrics, tree.branch_root_of.at(post_id));
    if (!m) return std::nullopt;
    return (*m)[index(dim)] < 0.0 ? 1 : 0;
}

FeatureTable compute_feature_table(const Corpus& corpus, const PostMetrics& metrics, const FeatureOptions& options) {
    FeatureTable table;
    for (const auto& [did, tree] : corpus.discussions) {
        for (const std::string& id : tree.chronological) {
            if (id == tree.root_id) continue;
            const auto* own = find_metric(metrics, id);
            if (!own) {
                if (options.strict) throw MissingAnnotationError("post '" + id + "' has no annotation");
                table.warnings.push_back("post '" + id + "' has no annotation; row excluded");
                continue;
            }

            FeatureRow row;
            row.post_id = id;
            row.discussion_id = did;
            row.depth = tree.depth.at(id);
            try {
                row.dt_parent = delta_t_parent(corpus, tree, id);
            } catch (const NegativeDeltaError& e) {
                table.warnings.push_back(std::string("NegativeDelta: ") + e.what() + "; row excluded");
                continue;
            }
            row.dt_prev = delta_t_prev(corpus, tree, id, options.prev_scope);
            row.metric = *own;

            const std::string& parent = tree.parent.at(id);
            const auto* parent_metric = row.depth >= 2 ? find_metric(metrics, parent) : nullptr;
            for (Dimension dim : kAllDimensions) {
                const std::size_t k = index(dim);
                if (parent_metric) row.parent_metric[k] = (*parent_metric)[k];
                row.sib_older_mean[k] = older_sibling_mean(tree, id, dim, metrics);
                row.br_neg[k] = br_neg_indicator(tree, id, dim, metrics);
            }
            table.rows.push_back(std::move(row));
        }
    }
    return table;
}

std::vector<std::string> feature_csv_header() {
    std::vector<std::string> h = {"post_id", "discussion_id", "depth", "dt_prev", "dt_parent"};
    for (Dimension dim : kAllDimensions) {
        const std::string n(name(dim));
        for (const char* suffix : {"_metric", "_parent_metric", "_sib_older_mean", "_br_neg"}) h.push_back(n + suffix);
    }
    return h;
}

void write_feature_csv(std::ostream& out, const std::vector<FeatureRow>& rows) {
    out << csv::join(feature_csv_header()) << '\n';
    for (const FeatureRow& r : rows) {
        std::vector<std::string> f = {r.post_id, r.discussion_id, std::to_string(r.depth),
                                      csv::format_optional(r.dt_prev), csv::format_optional(r.dt_parent)};
        for (Dimension dim : kAllDimensions) {
            const std::size_t k = index(dim);
            f.push_back(csv::format_exact(r.metric[k]));
            f.push_back(csv::format_optional(r.parent_metric[k]));
            f.push_back(csv::format_optional(r.sib_older_mean[k]));
            f.push_back(r.br_neg[k] ? std::to_string(*r.br_neg[k]) : std::string());
        }
        out << csv::join(f) << '\n';
    }
}

std::vector<FeatureRow> read_feature_csv(std::istream& in) {
    auto records = csv::read_all(in);
    if (records.empty()) throw std::runtime_error("feature table: empty file");
    const auto header = feature_csv_header();
    if (records.front() != header) throw std::runtime_error("feature table: unexpected header");

    auto opt_real = [](const std::string& s) -> std::optional<double> {
        if (s.empty()) return std::nullopt;
        return std::stod(s);
    };
    std::vector<FeatureRow> rows;
    for (std::size_t i = 1; i < records.size(); ++i) {
        const auto& f = records[i];
        if (f.size() != header.size()) {
            throw std::runtime_error("feature table: row " + std::to_string(i + 1) + " has " +
                                     std::to_string(f.size()) + " fields");
        }
        FeatureRow r;
        r.post_id = f[0];
        r.discussion_id = f[1];
        r.depth = std::stoi(f[2]);
        r.dt_prev = opt_real(f[3]);
        r.dt_parent = opt_real(f[4]);
        for (Dimension dim : kAllDimensions) {
            const std::size_t k = index(dim);
            const std::size_t base = 5 + 4 * k;
            r.metric[k] = std::stod(f[base]);
            r.parent_metric[k] = opt_real(f[base + 1]);
            r.sib_older_mean[k] = opt_real(f[base + 2]);
            if (!f[base + 3].empty()) r.br_neg[k] = std::stoi(f[base + 3]);
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace convgeom
