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

#include "convgeom/agreement.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <tuple>

#include "convgeom/csv.hpp"

namespace convgeom {

Statistic fleiss_kappa(const Eigen::MatrixXi& ratings, const AnnotationScale& scale) {
    const Eigen::Index r = ratings.rows();
    const Eigen::Index n_items = ratings.cols();
    if (r < 2 || n_items < 1) throw std::invalid_argument("kappa needs >= 2 raters and >= 1 item");

    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(n_items, scale.size());
    for (Eigen::Index u = 0; u < n_items; ++u) {
        for (Eigen::Index i = 0; i < r; ++i) {
            const int v = ratings(i, u);
            if (v < scale.min || v > scale.max) throw std::out_of_range("rating outside scale");
            counts(u, v - scale.min) += 1.0;
        }
    }
    const double rd = static_cast<double>(r);
    const Eigen::VectorXd p_item = (counts.array().square().rowwise().sum() - rd) / (rd * (rd - 1.0));
    const double p_bar = p_item.mean();
    const Eigen::VectorXd p_cat = counts.colwise().sum().transpose() / (static_cast<double>(n_items) * rd);
    const double p_e = p_cat.squaredNorm();
    if (p_e >= 1.0) return {1.0, true};
    return {(p_bar - p_e) / (1.0 - p_e), false};
}

Dispersion item_dispersion(std::span<const int> scores, ExactMode mode) {
    const std::size_t r = scores.size();
    if (r < 2) throw std::invalid_argument("dispersion needs >= 2 raters");
    Dispersion d;
    double abs_sum = 0.0;
    std::size_t exact = 0, within = 0, pairs = 0;
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = i + 1; j < r; ++j) {
            const int diff = std::abs(scores[i] - scores[j]);
            abs_sum += diff;
            exact += diff == 0;
            within += diff <= 1;
            ++pairs;
        }
    }
    const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
    d.mapd = abs_sum / static_cast<double>(pairs);
    d.mean_range = static_cast<double>(*hi - *lo);
    if (mode == ExactMode::Pairwise) {
        d.exact_agreement = static_cast<double>(exact) / static_cast<double>(pairs);
        d.pct_within_1 = static_cast<double>(within) / static_cast<double>(pairs);
    } else {
        d.exact_agreement = *hi == *lo ? 1.0 : 0.0;
        d.pct_within_1 = *hi - *lo <= 1 ? 1.0 : 0.0;
    }
    const double mean = std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(r);
    double ss = 0.0;
    for (int s : scores) ss += (s - mean) * (s - mean);
    d.mean_sd = std::sqrt(ss / static_cast<double>(r - 1));
    return d;
}

Dispersion dispersion_stats(const Eigen::MatrixXi& ratings, ExactMode mode) {
    const Eigen::Index n_items = ratings.cols();
    if (n_items == 0) throw std::invalid_argument("dispersion needs >= 1 item");
    Dispersion total;
    std::vector<int> col(static_cast<std::size_t>(ratings.rows()));
    for (Eigen::Index u = 0; u < n_items; ++u) {
        for (Eigen::Index i = 0; i < ratings.rows(); ++i) col[static_cast<std::size_t>(i)] = ratings(i, u);
        const Dispersion d = item_dispersion(col, mode);
        total.mapd += d.mapd;
        total.exact_agreement += d.exact_agreement;
        total.pct_within_1 += d.pct_within_1;
        total.mean_range += d.mean_range;
        total.mean_sd += d.mean_sd;
    }
    const double n = static_cast<double>(n_items);
    total.mapd /= n;
    total.exact_agreement /= n;
    total.pct_within_1 /= n;
    total.mean_range /= n;
    total.mean_sd /= n;
    return total;
}

Eigen::VectorXd midranks(std::span<const double> x) {
    const std::size_t n = x.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    Eigen::VectorXd ranks(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[static_cast<Eigen::Index>(order[k])] = rank;
        i = j + 1;
    }
    return ranks;
}

double spearman_rho(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("spearman_rho: length mismatch");
    if (x.size() < 3) throw std::invalid_argument("spearman_rho: need at least 3 observations");
    const Eigen::VectorXd rx = midranks(x);
    const Eigen::VectorXd ry = midranks(y);
    const Eigen::VectorXd cx = rx.array() - rx.mean();
    const Eigen::VectorXd cy = ry.array() - ry.mean();
    const double sxx = cx.squaredNorm();
    const double syy = cy.squaredNorm();
    if (sxx == 0.0 || syy == 0.0) throw DegenerateData("spearman_rho: constant input");
    return std::clamp(cx.dot(cy) / std::sqrt(sxx * syy), -1.0, 1.0);
}

Eigen::Matrix3d correlation_report(const PostMetrics& metrics) {
    std::vector<std::string> ids;
    ids.reserve(metrics.size());
    for (const auto& [id, _] : metrics) ids.push_back(id);
    std::sort(ids.begin(), ids.end());

    PerDimension<std::vector<double>> cols;
    for (const std::string& id : ids) {
        const auto& v = metrics.at(id);
        for (std::size_t k = 0; k < kNumDimensions; ++k) cols[k].push_back(v[k]);
    }
    Eigen::Matrix3d rho = Eigen::Matrix3d::Identity();
    for (std::size_t a = 0; a < kNumDimensions; ++a) {
        for (std::size_t b = a + 1; b < kNumDimensions; ++b) {
            const double r = spearman_rho(cols[a], cols[b]);
            rho(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = r;
            rho(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = r;
        }
    }
    return rho;
}

RatingsMatrix ratings_from_records(std::span<const AnnotationRecord> records, Dimension dim, int replications) {
    std::vector<const AnnotationRecord*> keep;
    for (const AnnotationRecord& r : records) {
        if (r.dimension == dim && r.raw_scores.size() == static_cast<std::size_t>(replications)) keep.push_back(&r);
    }
    RatingsMatrix m;
    m.values.resize(replications, static_cast<Eigen::Index>(keep.size()));
    for (std::size_t u = 0; u < keep.size(); ++u) {
        m.items.push_back(keep[u]->pair_id);
        for (int i = 0; i < replications; ++i) {
            m.values(i, static_cast<Eigen::Index>(u)) = keep[u]->raw_scores[static_cast<std::size_t>(i)];
        }
    }
    return m;
}

namespace {

AgreementRow row_for(Dimension dim, const RatingsMatrix& m, const AnnotationScale& scale, ExactMode mode) {
    AgreementRow row;
    row.dimension = dim;
    row.n_items = static_cast<std::size_t>(m.n_items());
    row.n_raters = static_cast<std::size_t>(m.raters());
    if (m.n_items() >= 2) row.alpha = krippendorff_alpha_interval(m.values);
    if (m.n_items() >= 1) {
        row.kappa = fleiss_kappa(m.values, scale);
        row.dispersion = dispersion_stats(m.values, mode);
    }
    return row;
}

}  // namespace

AgreementReport agreement_report(std::span<const AnnotationRecord> records, int replications,
                                 const AnnotationScale& scale, ExactMode mode) {
    AgreementReport report;
    for (Dimension dim : kAllDimensions) {
        std::size_t total = 0;
        for (const auto& r : records) total += r.dimension == dim;
        RatingsMatrix m = ratings_from_records(records, dim, replications);
        report.excluded_items = std::max(report.excluded_items, total - static_cast<std::size_t>(m.n_items()));
        report.rows.push_back(row_for(dim, m, scale, mode));
    }
    return report;
}

AgreementReport agreement_report_from_cache(std::span<const CacheEntry> entries, int replications, ExactMode mode) {
    using ItemKey = std::tuple<std::string, std::string, int, int>;
    std::map<ItemKey, PerDimension<std::map<int, int>>> items;
    std::optional<AnnotationScale> scale;
    for (const CacheEntry& e : entries) {
        if (scale && (scale->min != e.scale.min || scale->max != e.scale.max)) {
            throw std::invalid_argument("cache mixes annotation scales");
        }
        scale = e.scale;
        items[{e.pair_hash, e.model_id, e.scale.min, e.scale.max}][index(e.dimension)][e.replication] = e.score;
    }

    std::vector<AnnotationRecord> records;
    std::size_t excluded = 0;
    for (const auto& [key, dims] : items) {
        bool complete = true;
        for (const auto& reps : dims) {
            for (int r = 0; r < replications; ++r) complete = complete && reps.count(r);
        }
        if (!complete) {
            ++excluded;
            continue;
        }
        for (Dimension d : kAllDimensions) {
            AnnotationRecord rec;
            rec.pair_id = std::get<0>(key) + "/" + std::get<1>(key);
            rec.dimension = d;
            for (int r = 0; r < replications; ++r) rec.raw_scores.push_back(dims[index(d)].at(r));
            rec.mean = mean_of(rec.raw_scores);
            records.push_back(std::move(rec));
        }
    }
    AgreementReport report = agreement_report(records, replications, scale.value_or(AnnotationScale{}), mode);
    report.excluded_items = excluded;
    return report;
}

void write_agreement_csv(std::ostream& out, const AgreementReport& report) {
    out << "dimension,krippendorff_alpha,fleiss_kappa,mapd_mean,exact_agreement,pct_within_1,mean_range,mean_sd,"
           "n_items,n_raters,alpha_degenerate,kappa_degenerate\n";
    for (const AgreementRow& r : report.rows) {
        out << csv::join({std::string(name(r.dimension)), csv::format_exact(r.alpha.value),
                          csv::format_exact(r.kappa.value), csv::format_exact(r.dispersion.mapd),
                          csv::format_exact(r.dispersion.exact_agreement), csv::format_exact(r.dispersion.pct_within_1),
                          csv::format_exact(r.dispersion.mean_range), csv::format_exact(r.dispersion.mean_sd),
                          std::to_string(r.n_items), std::to_string(r.n_raters), r.alpha.degenerate ? "1" : "0",
                          r.kappa.degenerate ? "1" : "0"})
            << '\n';
    }
}

void write_correlation_csv(std::ostream& out, const Eigen::Matrix3d& rho) {
    out << "dimension";
    for (Dimension d : kAllDimensions) out << ',' << name(d);
    out << '\n';
    for (Dimension a : kAllDimensions) {
        out << name(a);
        for (Dimension b : kAllDimensions) {
            out << ',' << csv::format_exact(rho(static_cast<Eigen::Index>(index(a)), static_cast<Eigen::Index>(index(b))));
        }
        out << '\n';
    }
}

std::string format_correlation(const Eigen::Matrix3d& rho) {
    std::string out;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-26s", "");
    out += buf;
    for (Dimension d : kAllDimensions) {
        std::snprintf(buf, sizeof buf, " %24s", std::string(name(d)).c_str());
        out += buf;
    }
    out += '\n';
    for (Dimension a : kAllDimensions) {
        std::snprintf(buf, sizeof buf, "%-26s", std::string(name(a)).c_str());
        out += buf;
        for (Dimension b : kAllDimensions) {
            std::snprintf(buf, sizeof buf, " %24.2f",
                          rho(static_cast<Eigen::Index>(index(a)), static_cast<Eigen::Index>(index(b))));
            out += buf;
        }
        out += '\n';
    }
    return out;
}

}  // namespace convgeom
