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

#ifndef CONVGEOM_AGREEMENT_HPP
#define CONVGEOM_AGREEMENT_HPP

#include <Eigen/Dense>

#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "convgeom/annotator.hpp"
#include "convgeom/cache.hpp"
#include "convgeom/types.hpp"

namespace convgeom {

class DegenerateData : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Scores of R replications (rows) on N items (columns) for one dimension.
struct RatingsMatrix {
    std::vector<std::string> items;
    Eigen::MatrixXi values;

    Eigen::Index raters() const { return values.rows(); }
    Eigen::Index n_items() const { return values.cols(); }
};

/// A coefficient that can degenerate (zero expected disagreement); reported
/// as 1 with `degenerate` set.
struct Statistic {
    double value = 0.0;
    bool degenerate = false;
};

/// Krippendorff's alpha with the interval (squared difference) metric for a
/// complete R x N matrix.
template <typename Derived>
Statistic krippendorff_alpha_interval(const Eigen::MatrixBase<Derived>& ratings) {
    const Eigen::Index r = ratings.rows();
    const Eigen::Index n_items = ratings.cols();
    if (r < 2 || n_items < 2) throw std::invalid_argument("alpha needs >= 2 raters and >= 2 items");
    const Eigen::MatrixXd v = ratings.template cast<double>();

    // Sum over ordered pairs i != j of (a_i - a_j)^2 = 2 (m sum a^2 - (sum a)^2).
    auto pair_sq_sum = [](double m, double sum, double sum_sq) { return 2.0 * (m * sum_sq - sum * sum); };

    double observed = 0.0;
    for (Eigen::Index u = 0; u < n_items; ++u) {
        const auto col = v.col(u);
        observed += pair_sq_sum(static_cast<double>(r), col.sum(), col.squaredNorm()) / static_cast<double>(r - 1);
    }
    const double n = static_cast<double>(r * n_items);
    observed /= n;
    const double expected = pair_sq_sum(n, v.sum(), v.squaredNorm()) / (n * (n - 1.0));
    if (expected <= 0.0) return {1.0, true};
    return {1.0 - observed / expected, false};
}

/// Fleiss' kappa treating every integer point of the scale as a category.
Statistic fleiss_kappa(const Eigen::MatrixXi& ratings, const AnnotationScale& scale);

struct Dispersion {
    double mapd = 0.0;            // mean absolute pairwise difference
    double exact_agreement = 0.0;
    double pct_within_1 = 0.0;
    double mean_range = 0.0;
    double mean_sd = 0.0;         // sample sd, divisor R - 1
};

enum class ExactMode {
    Pairwise,   // share of rater pairs that agree, averaged over items
    Unanimity,  // share of items on which all raters agree (within 1: range <= 1)
};

/// Dispersion of a single item's replications.
Dispersion item_dispersion(std::span<const int> scores, ExactMode mode = ExactMode::Pairwise);

/// Item-averaged dispersion statistics of a complete matrix.
Dispersion dispersion_stats(const Eigen::MatrixXi& ratings, ExactMode mode = ExactMode::Pairwise);

/// Average ranks (1-based), ties sharing their mean rank.
Eigen::VectorXd midranks(std::span<const double> x);

/// Pearson correlation of midranks. Throws DegenerateData on constant input.
double spearman_rho(std::span<const double> x, std::span<const double> y);

/// 3 x 3 Spearman matrix between the post-level dimensions, over posts in
/// post_id order.
Eigen::Matrix3d correlation_report(const PostMetrics& metrics);

struct AgreementRow {
    Dimension dimension = Dimension::DisagreeVsAgree;
    Statistic alpha;
    Statistic kappa;
    Dispersion dispersion;
    std::size_t n_items = 0;
    std::size_t n_raters = 0;
};

struct AgreementReport {
    std::vector<AgreementRow> rows;  // one per dimension
    std::size_t excluded_items = 0;  // items with missing replications
};

RatingsMatrix ratings_from_records(std::span<const AnnotationRecord> records, Dimension dim, int replications);

AgreementReport agreement_report(std::span<const AnnotationRecord> records, int replications,
                                 const AnnotationScale& scale, ExactMode mode = ExactMode::Pairwise);

/// Groups cache entries by (pair, model, scale); items lacking any of the
/// `replications` scores on a dimension are excluded.
AgreementReport agreement_report_from_cache(std::span<const CacheEntry> entries, int replications,
                                            ExactMode mode = ExactMode::Pairwise);

void write_agreement_csv(std::ostream& out, const AgreementReport& report);
void write_correlation_csv(std::ostream& out, const Eigen::Matrix3d& rho);
/// Text rendering with two decimals.
std::string format_correlation(const Eigen::Matrix3d& rho);

}  // namespace convgeom

#endif  // CONVGEOM_AGREEMENT_HPP
