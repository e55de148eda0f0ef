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

#include "convgeom/inference.hpp"

#include <gtest/gtest.h>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <numeric>
#include <sstream>

#include "convgeom/distributions.hpp"
#include "convgeom/ols.hpp"
#include "convgeom/synth.hpp"
#include "oracles.hpp"

using namespace convgeom;

namespace {

FeatureRow row(const std::string& id, const std::string& did, double y, std::optional<double> dt_prev) {
    FeatureRow r;
    r.post_id = id;
    r.discussion_id = did;
    r.dt_prev = dt_prev;
    r.dt_parent = dt_prev;
    r.metric = {y, y, y};
    return r;
}

std::vector<FeatureRow> synthetic_rows(std::uint64_t seed, int discussions = 20) {
    SynthConfig c;
    c.seed = seed;
    c.n_discussions = discussions;
    c.mean_posts = 30;
    const SynthOutput s = generate_corpus(c);
    return compute_feature_table(s.corpus, s.metrics).rows;
}

}  // namespace

TEST(ols, small_examples) {
    Eigen::MatrixXd x(3, 2);
    x << 1, 0, 1, 1, 1, 2;
    const auto fit = ols_fit(x, Eigen::Vector3d(1, 3, 5));
    EXPECT_NEAR(fit.beta(0), 1.0, 1e-12);
    EXPECT_NEAR(fit.beta(1), 2.0, 1e-12);
    EXPECT_LT(fit.residuals.norm(), 1e-12);

    const auto fit2 = ols_fit(x, Eigen::Vector3d(0, 1, 3));
    EXPECT_NEAR(fit2.beta(0), -1.0 / 6.0, 1e-12);
    EXPECT_NEAR(fit2.beta(1), 1.5, 1e-12);
    EXPECT_NEAR(fit2.residuals.sum(), 0.0, 1e-12);
    EXPECT_TRUE(fit2.xtx_inverse.isApprox((x.transpose() * x).inverse(), 1e-12));
}

TEST(ols, matches_normal_equations_and_works_in_float) {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 20; ++trial) {
        const auto d = oracle::random_design(rng, 40, 4, 5);
        const auto fit = ols_fit(d.x, d.y);
        const Eigen::VectorXd beta = (d.x.transpose() * d.x).ldlt().solve(d.x.transpose() * d.y);
        EXPECT_LT((fit.beta - beta).cwiseAbs().maxCoeff(), 1e-10);
        // Residuals are orthogonal to every regressor.
        EXPECT_LT((d.x.transpose() * fit.residuals).cwiseAbs().maxCoeff(), 1e-9);
    }
    const auto d = oracle::random_design(rng, 30, 3, 4);
    const Eigen::MatrixXf xf = d.x.cast<float>();
    const Eigen::VectorXf yf = d.y.cast<float>();
    const auto ff = ols_fit(xf, yf);
    const auto fd = ols_fit(d.x, d.y);
    EXPECT_LT((ff.beta.cast<double>() - fd.beta).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(ols, rank_and_size_checks) {
    Eigen::MatrixXd x(4, 3);
    x << 1, 1, 2, 1, 2, 4, 1, 3, 6, 1, 4, 8;
    EXPECT_THROW(ols_fit(x, Eigen::Vector4d(1, 2, 3, 4)), SingularDesign);
    Eigen::MatrixXd zero_col = Eigen::MatrixXd::Ones(5, 2);
    zero_col.col(1).setZero();
    EXPECT_THROW(ols_fit(zero_col, Eigen::VectorXd::Ones(5)), SingularDesign);
    EXPECT_THROW(ols_fit(Eigen::MatrixXd::Ones(2, 2), Eigen::VectorXd::Ones(2)), InsufficientSample);
    // Badly scaled but full-rank columns are fine.
    Eigen::MatrixXd scaled(4, 2);
    scaled << 1, 1e7, 1, 2e7, 1, 3e7, 1, 5e7;
    const auto fit = ols_fit(scaled, Eigen::Vector4d(2, 3, 4, 6));
    EXPECT_NEAR(fit.beta(1), 1e-7, 1e-15);
}

TEST(sandwich, matches_brute_force_formula) {
    std::mt19937_64 rng(2026);
    for (int trial = 0; trial < 100; ++trial) {
        const int k = std::uniform_int_distribution<int>(1, 4)(rng);
        const int g = std::uniform_int_distribution<int>(2, 10)(rng);
        const int n = std::uniform_int_distribution<int>(std::max(g, k + 1), 50)(rng);
        const auto d = oracle::random_design(rng, n, k, g);
        const Eigen::VectorXd e = oracle::residuals(d.x, d.y);
        const Eigen::MatrixXd v = cluster_robust_vcov(d.x, e, d.clusters);
        const Eigen::MatrixXd ref = oracle::sandwich(d.x, e, d.clusters);
        EXPECT_LT((v - ref).cwiseAbs().maxCoeff(), 1e-12) << "trial " << trial;
        EXPECT_TRUE(v.isApprox(v.transpose()));
    }
}

TEST(sandwich, singleton_clusters_give_hc0) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        const int k = std::uniform_int_distribution<int>(1, 4)(rng);
        const int n = std::uniform_int_distribution<int>(k + 1, 50)(rng);
        auto d = oracle::random_design(rng, n, k, 1);
        std::iota(d.clusters.begin(), d.clusters.end(), 0);
        const Eigen::VectorXd e = oracle::residuals(d.x, d.y);
        const Eigen::MatrixXd cr = cluster_robust_vcov(d.x, e, d.clusters);
        EXPECT_LT((cr - hc0_vcov(d.x, e)).cwiseAbs().maxCoeff(), 1e-12);
        Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(k, k);
        for (int i = 0; i < n; ++i) meat += e(i) * e(i) * d.x.row(i).transpose() * d.x.row(i);
        const Eigen::MatrixXd b = (d.x.transpose() * d.x).inverse();
        EXPECT_LT((cr - b * meat * b).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(sandwich, invariant_to_row_order_and_cluster_labels) {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        const auto d = oracle::random_design(rng, 40, 3, 6);
        const auto fit = ols_fit(d.x, d.y);
        const Eigen::MatrixXd v = cluster_robust_vcov(d.x, fit.residuals, d.clusters, &fit.xtx_inverse);

        std::vector<int> perm(40);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<int> relabel = {5, 3, 1, 0, 2, 4};
        Eigen::MatrixXd x2(40, 3);
        Eigen::VectorXd y2(40);
        std::vector<int> c2(40);
        for (int i = 0; i < 40; ++i) {
            x2.row(i) = d.x.row(perm[static_cast<std::size_t>(i)]);
            y2(i) = d.y(perm[static_cast<std::size_t>(i)]);
            c2[static_cast<std::size_t>(i)] = relabel[static_cast<std::size_t>(d.clusters[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])])];
        }
        const auto fit2 = ols_fit(x2, y2);
        const Eigen::MatrixXd v2 = cluster_robust_vcov(x2, fit2.residuals, c2);
        EXPECT_LT((fit2.beta - fit.beta).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_LT((v2 - v).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(sandwich, cluster_indexing_and_cr1) {
    const std::vector<std::string> labels = {"b", "a", "b", "c", "a"};
    const auto ids = index_clusters<std::string>(labels);
    EXPECT_EQ(ids, (std::vector<int>{0, 1, 0, 2, 1}));
    EXPECT_EQ(count_clusters(ids), 3);
    EXPECT_DOUBLE_EQ(cr1_factor(100, 4, 10), 10.0 / 9.0 * 99.0 / 96.0);
    EXPECT_DOUBLE_EQ(cr1_factor(100, 4, 1), 1.0);
}

TEST(pvalues, normal_and_student_t) {
    EXPECT_NEAR(normal_two_sided_p(1.96), 0.05, 0.001);
    EXPECT_NEAR(normal_two_sided_p(-1.96), 0.05, 0.001);
    EXPECT_DOUBLE_EQ(normal_two_sided_p(0.0), 1.0);
    const boost::math::normal_distribution<double> z;
    for (double t : {0.1, 0.5, 1.0, 2.5, 4.0, 8.0}) {
        EXPECT_NEAR(normal_two_sided_p(t), 2.0 * boost::math::cdf(boost::math::complement(z, t)), 1e-14);
    }
    for (double df : {1.0, 2.0, 3.5, 5.0, 29.0, 59.0, 500.0}) {
        const boost::math::students_t_distribution<double> dist(df);
        for (double t : {0.0, 0.05, 0.7, 1.0, 2.0, 3.3, 10.0, 45.0, -2.2}) {
            const double ref = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
            EXPECT_NEAR(student_t_two_sided_p(t, df), ref, 1e-12 + 1e-10 * ref) << "df " << df << " t " << t;
        }
    }
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.05, 30.0), p(0.0, 1.0);
    for (int i = 0; i < 300; ++i) {
        const double a = u(rng), b = u(rng), x = p(rng);
        EXPECT_NEAR(incomplete_beta(a, b, x), boost::math::ibeta(a, b, x), 1e-12);
    }
    EXPECT_EQ(incomplete_beta(2.0, 3.0, 0.0), 0.0);
    EXPECT_EQ(incomplete_beta(2.0, 3.0, 1.0), 1.0);
}

TEST(pvalues, special_cases) {
    EXPECT_EQ(p_value(0.0, 0.0, 10).value, 1.0);
    EXPECT_EQ(p_value(0.0, 1.0, 10).value, 1.0);
    const PValue zero_se = p_value(1.0, 0.0, 10);
    EXPECT_EQ(zero_se.value, 0.0);
    EXPECT_TRUE(zero_se.degenerate);
    EXPECT_DOUBLE_EQ(p_value(1.96, 1.0, 1).value, normal_two_sided_p(1.96));
    EXPECT_DOUBLE_EQ(p_value(1.96, 1.0, 60, PValueMode::Normal).value, normal_two_sided_p(1.96));
    EXPECT_DOUBLE_EQ(p_value(1.96, 1.0, 60).value, student_t_two_sided_p(1.96, 59.0));
    EXPECT_GT(p_value(1.96, 1.0, 60).value, 0.05);
}

TEST(stars, schemes) {
    EXPECT_EQ(stars(0.00011), "***");
    EXPECT_EQ(stars(0.0152), "*");
    EXPECT_EQ(stars(0.5), "");
    EXPECT_EQ(stars(0.001), "**");
    EXPECT_EQ(stars(0.0099), "**");
    EXPECT_EQ(stars(0.05), "†");
    EXPECT_EQ(stars(0.1), "");
    EXPECT_EQ(stars(0.00011, StarScheme::Shifted), "****");
    EXPECT_EQ(stars(0.0152, StarScheme::Shifted), "**");
    EXPECT_EQ(stars(0.07, StarScheme::Shifted), "+");
    EXPECT_EQ(parse_star_scheme("shifted"), StarScheme::Shifted);
    EXPECT_FALSE(parse_star_scheme("fancy").has_value());
    EXPECT_EQ(parse_pvalue_mode("normal"), PValueMode::Normal);
}

TEST(models, specs) {
    EXPECT_EQ(make_spec(ModelId::M1, Dimension::DisagreeVsAgree).terms, (std::vector<Term>{Term::Intercept, Term::DtPrev}));
    const ModelSpec m5 = make_spec(ModelId::M5, Dimension::EmotionalVsFactual);
    EXPECT_EQ(m5.terms.size(), 4u);
    EXPECT_EQ(to_string(m5.terms[3]), "parent_metric:sib_older_mean");
    const ModelSpec m6 = make_spec(ModelId::M6, Dimension::DisagreeVsAgree);
    EXPECT_TRUE(m6.filter.older_sibling);
    InferenceOptions relax;
    relax.m6_relax_sibling_filter = true;
    EXPECT_FALSE(make_spec(ModelId::M6, Dimension::DisagreeVsAgree, relax).filter.older_sibling);
    EXPECT_EQ(to_string(m6.terms[3]), "parent_metric:br_neg");
    EXPECT_EQ(parse_model_id("M4"), ModelId::M4);
    EXPECT_FALSE(parse_model_id("M7").has_value());

    FeatureRow r;
    r.parent_metric[1] = -2.0;
    r.br_neg[1] = 1;
    r.sib_older_mean[1] = 0.5;
    EXPECT_EQ(term_value(Term::ParentXBr, r, Dimension::AttackingVsRespectful), -2.0);
    EXPECT_EQ(term_value(Term::ParentXSib, r, Dimension::AttackingVsRespectful), -1.0);
    EXPECT_THROW(term_value(Term::ParentMetric, r, Dimension::DisagreeVsAgree), std::bad_optional_access);
}

TEST(models, error_kinds) {
    const ModelSpec m1 = make_spec(ModelId::M1, Dimension::DisagreeVsAgree);
    auto kind = [&](const std::vector<FeatureRow>& rows) {
        try {
            run_model(m1, rows);
        } catch (const InferenceError& e) {
            return e.kind();
        }
        ADD_FAILURE();
        return InferenceErrorKind::EmptySample;
    };
    EXPECT_EQ(kind({row("a", "d", 1, std::nullopt)}), InferenceErrorKind::EmptySample);
    EXPECT_EQ(kind({row("a", "d", 1, 2.0), row("b", "d", 2, 3.0)}), InferenceErrorKind::InsufficientSample);
    EXPECT_EQ(kind({row("a", "d", 1, 2.0), row("b", "d", 2, 2.0), row("c", "e", 0, 2.0)}),
              InferenceErrorKind::SingularDesign);

    const RegressionTable single = run_model(m1, std::vector<FeatureRow>{row("a", "d", 1, 1.0), row("b", "d", 2, 2.0), row("c", "d", 4, 3.0)});
    EXPECT_EQ(single.n_clusters, 1);
    EXPECT_NE(std::find(single.flags.begin(), single.flags.end(), "single_cluster"), single.flags.end());

    const RegressionTable exact = run_model(m1, std::vector<FeatureRow>{row("a", "d", 1, 1.0), row("b", "e", 2, 2.0), row("c", "f", 3, 3.0)});
    EXPECT_NEAR(exact.terms[1].estimate, 1.0, 1e-12);
    EXPECT_NEAR(exact.terms[1].std_error, 0.0, 1e-12);
    EXPECT_DOUBLE_EQ(exact.r_squared, 1.0);
}

TEST(models, default_grid_has_sixteen_tables) {
    const auto rows = synthetic_rows(4);
    const RunAllResult r = run_all(rows);
    EXPECT_TRUE(r.failures.empty());
    ASSERT_EQ(r.tables.size(), 16u);
    EXPECT_EQ(table_basename(r.tables.front()), "M1_disagree_vs_agree");
    EXPECT_EQ(table_basename(r.tables.back()), "M6_disagree_vs_agree");
    for (const RegressionTable& t : r.tables) {
        EXPECT_EQ(t.n_clusters, 20);
        EXPECT_EQ(t.vcov.rows(), static_cast<Eigen::Index>(t.terms.size()));
        for (const auto& e : t.terms) {
            EXPECT_GT(e.std_error, 0.0);
            EXPECT_GE(e.p_value, 0.0);
            EXPECT_LE(e.p_value, 1.0);
            EXPECT_EQ(e.stars, stars(e.p_value));
        }
    }
    std::ostringstream csv;
    write_table_csv(csv, r.tables.back());
    EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')), "term,estimate,std_error,p_value,stars");
    const std::string summary = summary_json(r, {});
    EXPECT_NE(summary.find("\"n_clusters\": 20"), std::string::npos);
}

TEST(models, cr1_scales_the_covariance) {
    const auto rows = synthetic_rows(6);
    InferenceOptions cr1;
    cr1.cr1_correction = true;
    const ModelSpec spec = make_spec(ModelId::M4, Dimension::AttackingVsRespectful);
    const RegressionTable a = run_model(spec, rows);
    const RegressionTable b = run_model(spec, rows, cr1);
    const double f = cr1_factor(static_cast<Eigen::Index>(a.n_obs), 2, a.n_clusters);
    EXPECT_TRUE(b.vcov.isApprox(a.vcov * f, 1e-12));
    EXPECT_EQ(a.terms[1].estimate, b.terms[1].estimate);
}

TEST(models, row_and_cluster_permutation_invariance) {
    auto rows = synthetic_rows(9);
    const RunAllResult a = run_all(rows);
    std::mt19937_64 rng(1);
    std::shuffle(rows.begin(), rows.end(), rng);
    for (auto& r : rows) r.discussion_id = "x" + r.discussion_id;
    const RunAllResult b = run_all(rows);
    ASSERT_EQ(a.tables.size(), b.tables.size());
    for (std::size_t i = 0; i < a.tables.size(); ++i) {
        EXPECT_EQ(a.tables[i].n_obs, b.tables[i].n_obs);
        EXPECT_LT((a.tables[i].vcov - b.tables[i].vcov).cwiseAbs().maxCoeff(), 1e-12);
        for (std::size_t j = 0; j < a.tables[i].terms.size(); ++j) {
            EXPECT_NEAR(a.tables[i].terms[j].estimate, b.tables[i].terms[j].estimate, 1e-10);
        }
    }
}

TEST(models, sample_filters_match_recount) {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 10; ++trial) {
        SynthConfig c;
        c.seed = 100 + static_cast<std::uint64_t>(trial);
        c.n_discussions = 8;
        c.mean_posts = 25;
        const SynthOutput s = generate_corpus(c);
        PostMetrics m = s.metrics;
        std::bernoulli_distribution drop(0.1);
        for (auto it = m.begin(); it != m.end();) it = drop(rng) ? m.erase(it) : std::next(it);
        FeatureOptions fo;
        fo.strict = false;
        const auto rows = compute_feature_table(s.corpus, m, fo).rows;
        for (bool relax : {false, true}) {
            InferenceOptions opt;
            opt.m6_relax_sibling_filter = relax;
            for (ModelId id : kAllModels) {
                const Design d = build_design(make_spec(id, Dimension::AttackingVsRespectful, opt), rows);
                EXPECT_EQ(static_cast<std::size_t>(d.x.rows()),
                          oracle::filter_recount(s.corpus, m, id, Dimension::AttackingVsRespectful, relax))
                    << to_string(id);
            }
        }
    }
}
