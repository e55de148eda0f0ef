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

#ifndef CONVGEOM_TESTS_ORACLES_HPP
#define CONVGEOM_TESTS_ORACLES_HPP

// Brute-force reference computations, written without the library's
// algorithms, for cross-checking.

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "convgeom/corpus.hpp"
#include "convgeom/inference.hpp"
#include "convgeom/types.hpp"

namespace convgeom::oracle {

/// Interval alpha from the coincidence matrix of pairable values.
inline double alpha(const Eigen::MatrixXi& m) {
    std::map<std::pair<int, int>, double> o;
    for (Eigen::Index u = 0; u < m.cols(); ++u) {
        const double mu = static_cast<double>(m.rows());
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            for (Eigen::Index j = 0; j < m.rows(); ++j) {
                if (i != j) o[{m(i, u), m(j, u)}] += 1.0 / (mu - 1.0);
            }
        }
    }
    std::map<int, double> nc;
    double n = 0.0;
    for (const auto& [ck, v] : o) {
        nc[ck.first] += v;
        n += v;
    }
    double d_o = 0.0;
    for (const auto& [ck, v] : o) d_o += v * std::pow(ck.first - ck.second, 2);
    d_o /= n;
    double d_e = 0.0;
    for (const auto& [c, a] : nc) {
        for (const auto& [k, b] : nc) d_e += a * b * std::pow(c - k, 2);
    }
    d_e /= n * (n - 1.0);
    return 1.0 - d_o / d_e;
}

/// Fleiss' kappa from per-item category counts.
inline double kappa(const Eigen::MatrixXi& m) {
    const int r = static_cast<int>(m.rows());
    const int items = static_cast<int>(m.cols());
    std::map<int, double> total;
    double p_bar = 0.0;
    for (int u = 0; u < items; ++u) {
        std::map<int, int> c;
        for (int i = 0; i < r; ++i) c[m(i, u)]++;
        double agree = 0.0;
        for (const auto& [cat, k] : c) {
            agree += static_cast<double>(k) * (k - 1);
            total[cat] += k;
        }
        p_bar += agree / (r * (r - 1.0));
    }
    p_bar /= items;
    double p_e = 0.0;
    for (const auto& [cat, k] : total) p_e += std::pow(k / (static_cast<double>(items) * r), 2);
    return (p_bar - p_e) / (1.0 - p_e);
}

/// (X'X)^-1 (sum_d X_d' e_d e_d' X_d) (X'X)^-1 with every cluster block
/// extracted explicitly.
inline Eigen::MatrixXd sandwich(const Eigen::MatrixXd& x, const Eigen::VectorXd& e, const std::vector<int>& cluster) {
    const Eigen::MatrixXd bread = (x.transpose() * x).inverse();
    std::map<int, std::vector<Eigen::Index>> members;
    for (Eigen::Index i = 0; i < x.rows(); ++i) members[cluster[static_cast<std::size_t>(i)]].push_back(i);
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(x.cols(), x.cols());
    for (const auto& [g, rows] : members) {
        const auto ng = static_cast<Eigen::Index>(rows.size());
        Eigen::MatrixXd xg(ng, x.cols());
        Eigen::VectorXd eg(ng);
        for (Eigen::Index r = 0; r < ng; ++r) {
            xg.row(r) = x.row(rows[static_cast<std::size_t>(r)]);
            eg(r) = e(rows[static_cast<std::size_t>(r)]);
        }
        meat += xg.transpose() * eg * eg.transpose() * xg;
    }
    return bread * meat * bread;
}

/// Residuals of the normal-equation solution.
inline Eigen::VectorXd residuals(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    const Eigen::VectorXd beta = (x.transpose() * x).ldlt().solve(x.transpose() * y);
    return y - x * beta;
}

struct RandomDesign {
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
    std::vector<int> clusters;
};

/// Intercept plus k-1 Gaussian regressors; clusters labelled 0..G-1 with
/// every label used at least once.
inline RandomDesign random_design(std::mt19937_64& rng, int n, int k, int g) {
    std::normal_distribution<double> z;
    RandomDesign d;
    d.x.resize(n, k);
    d.y.resize(n);
    d.clusters.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        d.x(i, 0) = 1.0;
        for (int j = 1; j < k; ++j) d.x(i, j) = z(rng) * (1.0 + j);
        d.clusters[static_cast<std::size_t>(i)] = i < g ? i : std::uniform_int_distribution<int>(0, g - 1)(rng);
        d.y(i) = 0.5 - d.x.row(i).sum() * 0.1 + z(rng) + 0.3 * d.clusters[static_cast<std::size_t>(i)];
    }
    return d;
}

/// Rows each model should keep, counted straight from the reply trees and
/// the per-post values: replies to the root lack a parent value, siblings
/// count when older in (timestamp, post_id) order and annotated.
inline std::size_t filter_recount(const Corpus& corpus, const PostMetrics& metrics, ModelId model, Dimension dim,
                                  bool relax_m6_sibling = false) {
    (void)dim;  // availability does not depend on the dimension when posts are fully annotated
    std::size_t n = 0;
    for (const auto& [id, post] : corpus.posts) {
        if (!post.parent_id || !metrics.count(id)) continue;
        const Post& parent = corpus.post(*post.parent_id);
        if (post.timestamp < parent.timestamp) continue;
        std::vector<std::string> path{id};
        while (corpus.post(path.back()).parent_id) path.push_back(*corpus.post(path.back()).parent_id);
        const std::size_t depth = path.size() - 1;
        const std::string& branch_root = path[path.size() - 2];
        const auto key = std::pair{post.timestamp, post.post_id};
        bool has_prev = false, has_sibling = false;
        for (const auto& [oid, other] : corpus.posts) {
            if (other.discussion_id != post.discussion_id) continue;
            const bool older = std::pair{other.timestamp, other.post_id} < key;
            has_prev = has_prev || older;
            if (older && other.parent_id == post.parent_id && metrics.count(oid)) has_sibling = true;
        }
        const bool has_parent = depth >= 2 && metrics.count(parent.post_id);
        const bool has_br = depth >= 2 && metrics.count(branch_root);
        bool keep = false;
        switch (model) {
            case ModelId::M1: keep = has_prev; break;
            case ModelId::M2: keep = true; break;
            case ModelId::M3: keep = has_sibling; break;
            case ModelId::M4: keep = has_parent; break;
            case ModelId::M5: keep = has_parent && has_sibling; break;
            case ModelId::M6: keep = has_parent && has_br && (relax_m6_sibling || has_sibling); break;
        }
        n += keep;
    }
    return n;
}

}  // namespace convgeom::oracle

#endif  // CONVGEOM_TESTS_ORACLES_HPP
