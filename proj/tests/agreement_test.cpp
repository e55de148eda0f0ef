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

#include <gtest/gtest.h>

#include <numeric>
#include <random>
#include <sstream>

#include "convgeom/backend.hpp"
#include "convgeom/cache.hpp"
#include "oracles.hpp"
#include "testing.hpp"

using namespace convgeom;

namespace {

Eigen::MatrixXi random_ratings(std::mt19937_64& rng, int r, int n, int lo, int hi) {
    std::uniform_int_distribution<int> u(lo, hi);
    Eigen::MatrixXi m(r, n);
    for (int j = 0; j < n; ++j) {
        // Correlated raters: a shared item level plus rater noise.
        const int level = u(rng);
        for (int i = 0; i < r; ++i) m(i, j) = std::clamp(level + std::uniform_int_distribution<int>(-2, 2)(rng), lo, hi);
    }
    return m;
}

}  // namespace

TEST(agreement, alpha_and_kappa_match_definitional_oracles) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = std::uniform_int_distribution<int>(2, 60)(rng);
        const Eigen::MatrixXi m = random_ratings(rng, 4, n, -5, 5);
        const Statistic a = krippendorff_alpha_interval(m);
        const Statistic k = fleiss_kappa(m, AnnotationScale{});
        ASSERT_FALSE(a.degenerate);
        EXPECT_NEAR(a.value, oracle::alpha(m), 1e-12);
        EXPECT_NEAR(k.value, oracle::kappa(m), 1e-12);
    }
}

TEST(agreement, hand_worked_matrix) {
    Eigen::MatrixXi m(4, 3);
    m << 1, 1, 2,  //
        1, 1, 2,   //
        1, 2, 2,   //
        1, 2, 3;
    EXPECT_NEAR(fleiss_kappa(m, AnnotationScale{}).value, 13.0 / 41.0, 1e-12);
    EXPECT_NEAR(krippendorff_alpha_interval(m).value, 100.0 / 177.0, 1e-12);
}

TEST(agreement, single_item_dispersion) {
    const std::vector<int> item = {1, 2, 3, 4};
    const Dispersion d = item_dispersion(item);
    EXPECT_NEAR(d.mapd, 1.6667, 1e-4);
    EXPECT_NEAR(d.exact_agreement, 0.0, 1e-4);
    EXPECT_NEAR(d.pct_within_1, 0.5, 1e-4);
    EXPECT_NEAR(d.mean_range, 3.0, 1e-4);
    EXPECT_NEAR(d.mean_sd, 1.2910, 1e-4);

    const std::vector<int> pairs = {2, 2, 3, 3};
    EXPECT_NEAR(item_dispersion(pairs).exact_agreement, 1.0 / 3.0, 1e-12);
    EXPECT_EQ(item_dispersion(pairs, ExactMode::Unanimity).exact_agreement, 0.0);
    EXPECT_EQ(item_dispersion(pairs, ExactMode::Unanimity).pct_within_1, 1.0);
    EXPECT_THROW(item_dispersion(std::vector<int>{1}), std::invalid_argument);
}

TEST(agreement, identical_replications) {
    std::mt19937_64 rng(1);
    Eigen::MatrixXi m(4, 50);
    for (int j = 0; j < 50; ++j) m.col(j).setConstant(std::uniform_int_distribution<int>(-5, 5)(rng));
    const Statistic a = krippendorff_alpha_interval(m);
    const Statistic k = fleiss_kappa(m, AnnotationScale{});
    EXPECT_EQ(a.value, 1.0);
    EXPECT_EQ(k.value, 1.0);
    const Dispersion d = dispersion_stats(m);
    EXPECT_EQ(d.exact_agreement, 1.0);
    EXPECT_EQ(d.pct_within_1, 1.0);
    EXPECT_EQ(d.mapd, 0.0);
    EXPECT_EQ(d.mean_range, 0.0);
    EXPECT_EQ(d.mean_sd, 0.0);

    // A single shared value leaves no expected disagreement.
    const Statistic flat = krippendorff_alpha_interval(Eigen::MatrixXi::Constant(4, 10, 2));
    EXPECT_EQ(flat.value, 1.0);
    EXPECT_TRUE(flat.degenerate);
    EXPECT_TRUE(fleiss_kappa(Eigen::MatrixXi::Constant(4, 10, 2), AnnotationScale{}).degenerate);
}

TEST(agreement, independent_raters_are_near_zero) {
    std::mt19937_64 rng(123);
    std::uniform_int_distribution<int> u(-5, 5);
    Eigen::MatrixXi m(4, 2000);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
    EXPECT_LT(std::abs(fleiss_kappa(m, AnnotationScale{}).value), 0.1);
    EXPECT_LT(std::abs(krippendorff_alpha_interval(m).value), 0.1);
}

TEST(agreement, invariances) {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::MatrixXi m = random_ratings(rng, 4, 30, -4, 4);
        const double a = krippendorff_alpha_interval(m).value;
        const double k = fleiss_kappa(m, AnnotationScale{}).value;

        std::vector<int> cols(30);
        std::iota(cols.begin(), cols.end(), 0);
        std::shuffle(cols.begin(), cols.end(), rng);
        const Eigen::MatrixXi items_permuted = m(Eigen::all, cols);
        EXPECT_NEAR(krippendorff_alpha_interval(items_permuted).value, a, 1e-12);
        EXPECT_NEAR(fleiss_kappa(items_permuted, AnnotationScale{}).value, k, 1e-12);

        const Eigen::MatrixXi raters_permuted = m.colwise().reverse();
        EXPECT_NEAR(krippendorff_alpha_interval(raters_permuted).value, a, 1e-12);

        // Interval alpha ignores shifts and positive scaling; kappa ignores relabelling.
        const Eigen::MatrixXi shifted = (m.array() + 1).matrix();
        EXPECT_NEAR(krippendorff_alpha_interval(shifted).value, a, 1e-12);
        EXPECT_NEAR(krippendorff_alpha_interval((m * 3).eval()).value, a, 1e-12);
        EXPECT_NEAR(fleiss_kappa(shifted, AnnotationScale{}).value, k, 1e-12);
    }
}

TEST(agreement, spearman_with_ties_matches_oracle) {
    std::mt19937_64 rng(31);
    std::uniform_int_distribution<int> u(0, 6);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 5 + static_cast<std::size_t>(trial);
        std::vector<double> x(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = u(rng) * 0.5;
            y[i] = x[i] + u(rng);
        }
        auto rank = [](const std::vector<double>& v) {
            std::vector<double> r(v.size());
            for (std::size_t i = 0; i < v.size(); ++i) {
                double less = 0, equal = 0;
                for (double w : v) {
                    less += w < v[i];
                    equal += w == v[i];
                }
                r[i] = 1.0 + less + (equal - 1.0) / 2.0;
            }
            return r;
        };
        const auto rx = rank(x), ry = rank(y);
        const Eigen::VectorXd mr = midranks(x);
        for (std::size_t i = 0; i < n; ++i) EXPECT_DOUBLE_EQ(mr(static_cast<Eigen::Index>(i)), rx[i]);
        double mx = 0, my = 0;
        for (std::size_t i = 0; i < n; ++i) {
            mx += rx[i] / n;
            my += ry[i] / n;
        }
        double sxy = 0, sxx = 0, syy = 0;
        for (std::size_t i = 0; i < n; ++i) {
            sxy += (rx[i] - mx) * (ry[i] - my);
            sxx += (rx[i] - mx) * (rx[i] - mx);
            syy += (ry[i] - my) * (ry[i] - my);
        }
        bool constant = sxx == 0 || syy == 0;
        if (constant) {
            EXPECT_THROW(spearman_rho(x, y), DegenerateData);
        } else {
            EXPECT_NEAR(spearman_rho(x, y), sxy / std::sqrt(sxx * syy), 1e-12);
        }
    }
    const std::vector<double> a = {1, 2, 3, 4}, b = {10, 20, 30, 40}, c = {4, 3, 2, 1};
    EXPECT_DOUBLE_EQ(spearman_rho(a, b), 1.0);
    EXPECT_DOUBLE_EQ(spearman_rho(a, c), -1.0);
    EXPECT_THROW(spearman_rho(a, std::vector<double>{1, 1, 1, 1}), DegenerateData);
}

TEST(agreement, report_from_records_equals_report_from_cache) {
    std::mt19937_64 rng(4);
    const Corpus corpus = make_corpus(convgeom::testing::random_posts(rng, 4, 40));
    AnnotateOptions opt;
    MockBackend mock(3, opt.scale);
    AnnotationCache cache;
    const CorpusAnnotation a = annotate_corpus(corpus, &mock, cache, "mock", opt);
    const AgreementReport from_records = agreement_report(a.records, 4, opt.scale);
    const auto entries = cache.entries();
    const AgreementReport from_cache = agreement_report_from_cache(entries, 4);
    ASSERT_EQ(from_records.rows.size(), 3u);
    ASSERT_EQ(from_cache.rows.size(), 3u);
    for (std::size_t k = 0; k < 3; ++k) {
        const auto& x = from_records.rows[k];
        const auto& y = from_cache.rows[k];
        EXPECT_EQ(x.dimension, y.dimension);
        EXPECT_EQ(x.n_items, y.n_items);
        EXPECT_EQ(x.n_raters, 4u);
        EXPECT_NEAR(x.alpha.value, y.alpha.value, 1e-12);
        EXPECT_NEAR(x.kappa.value, y.kappa.value, 1e-12);
        EXPECT_NEAR(x.dispersion.mapd, y.dispersion.mapd, 1e-12);
        // Uniform mock answers carry no signal.
        EXPECT_LT(std::abs(x.alpha.value), 0.15);
    }

    // Dropping one replication of one pair excludes that item.
    std::vector<CacheEntry> partial = entries;
    partial.erase(partial.begin());
    const AgreementReport fewer = agreement_report_from_cache(partial, 4);
    EXPECT_EQ(fewer.excluded_items, 1u);
    EXPECT_EQ(fewer.rows[static_cast<std::size_t>(index(entries.front().dimension))].n_items,
              from_cache.rows[0].n_items - 1);

    std::ostringstream out;
    write_agreement_csv(out, from_records);
    EXPECT_EQ(out.str().substr(0, out.str().find('\n')),
              "dimension,krippendorff_alpha,fleiss_kappa,mapd_mean,exact_agreement,pct_within_1,mean_range,mean_sd,"
              "n_items,n_raters,alpha_degenerate,kappa_degenerate");
}

TEST(agreement, correlation_report_is_symmetric) {
    PostMetrics m;
    for (int i = 0; i < 20; ++i) {
        m["p" + std::to_string(i)] = {static_cast<double>(i), static_cast<double>(-i), static_cast<double>(i % 5)};
    }
    const Eigen::Matrix3d rho = correlation_report(m);
    EXPECT_TRUE(rho.isApprox(rho.transpose()));
    EXPECT_DOUBLE_EQ(rho(0, 1), -1.0);
    EXPECT_EQ(rho.diagonal(), Eigen::Vector3d::Ones());
    EXPECT_NE(format_correlation(rho).find("-1.00"), std::string::npos);
}
