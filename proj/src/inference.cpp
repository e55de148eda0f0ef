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

#include <cmath>

#include "convgeom/csv.hpp"
#include "convgeom/distributions.hpp"
#include "json.hpp"

namespace convgeom {

std::string_view to_string(ModelId id) {
    static constexpr std::array<std::string_view, 6> kNames = {"M1", "M2", "M3", "M4", "M5", "M6"};
    return kNames[static_cast<std::size_t>(id)];
}

std::optional<ModelId> parse_model_id(std::string_view s) {
    for (ModelId id : kAllModels) {
        if (to_string(id) == s) return id;
    }
    return std::nullopt;
}

std::string_view to_string(Term t) {
    switch (t) {
        case Term::Intercept: return "intercept";
        case Term::DtPrev: return "dt_prev";
        case Term::DtParent: return "dt_parent";
        case Term::SibOlderMean: return "sib_older_mean";
        case Term::ParentMetric: return "parent_metric";
        case Term::BrNeg: return "br_neg";
        case Term::ParentXSib: return "parent_metric:sib_older_mean";
        case Term::ParentXBr: return "parent_metric:br_neg";
    }
    return "?";
}

std::optional<PValueMode> parse_pvalue_mode(std::string_view s) {
    if (s == "t") return PValueMode::StudentT;
    if (s == "normal") return PValueMode::Normal;
    return std::nullopt;
}

std::optional<StarScheme> parse_star_scheme(std::string_view s) {
    if (s == "conventional") return StarScheme::Conventional;
    if (s == "shifted") return StarScheme::Shifted;
    return std::nullopt;
}

bool SampleFilter::accepts(const FeatureRow& row, Dimension dim) const {
    const std::size_t k = index(dim);
    return (!dt_prev || row.dt_prev) && (!dt_parent || row.dt_parent) &&
           (!older_sibling || row.sib_older_mean[k]) && (!parent_metric || row.parent_metric[k]) &&
           (!br_neg || row.br_neg[k]);
}

ModelSpec make_spec(ModelId id, Dimension response, const InferenceOptions& options) {
    ModelSpec s;
    s.id = id;
    s.response = response;
    switch (id) {
        case ModelId::M1:
            s.terms = {Term::Intercept, Term::DtPrev};
            s.filter.dt_prev = true;
            break;
        case ModelId::M2:
            s.terms = {Term::Intercept, Term::DtParent};
            s.filter.dt_parent = true;
            break;
        case ModelId::M3:
            s.terms = {Term::Intercept, Term::SibOlderMean};
            s.filter.older_sibling = true;
            break;
        case ModelId::M4:
            s.terms = {Term::Intercept, Term::ParentMetric};
            s.filter.parent_metric = true;
            break;
        case ModelId::M5:
            s.terms = {Term::Intercept, Term::ParentMetric, Term::SibOlderMean, Term::ParentXSib};
            s.filter.parent_metric = true;
            s.filter.older_sibling = true;
            break;
        case ModelId::M6:
            s.terms = {Term::Intercept, Term::ParentMetric, Term::BrNeg, Term::ParentXBr};
            s.filter.parent_metric = true;
            s.filter.br_neg = true;
            s.filter.older_sibling = !options.m6_relax_sibling_filter;
            break;
    }
    return s;
}

double term_value(Term term, const FeatureRow& row, Dimension dim) {
    const std::size_t k = index(dim);
    switch (term) {
        case Term::Intercept: return 1.0;
        case Term::DtPrev: return row.dt_prev.value();
        case Term::DtParent: return row.dt_parent.value();
        case Term::SibOlderMean: return row.sib_older_mean[k].value();
        case Term::ParentMetric: return row.parent_metric[k].value();
        case Term::BrNeg: return static_cast<double>(row.br_neg[k].value());
        case Term::ParentXSib: return row.parent_metric[k].value() * row.sib_older_mean[k].value();
        case Term::ParentXBr: return row.parent_metric[k].value() * static_cast<double>(row.br_neg[k].value());
    }
    return 0.0;
}

Design build_design(const ModelSpec& spec, std::span<const FeatureRow> rows) {
    std::vector<const FeatureRow*> kept;
    for (const FeatureRow& r : rows) {
        if (spec.filter.accepts(r, spec.response)) kept.push_back(&r);
    }
    Design d;
    const auto n = static_cast<Eigen::Index>(kept.size());
    const auto k = static_cast<Eigen::Index>(spec.terms.size());
    d.x.resize(n, k);
    d.y.resize(n);
    std::vector<std::string> labels;
    labels.reserve(kept.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        const FeatureRow& r = *kept[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < k; ++j) d.x(i, j) = term_value(spec.terms[static_cast<std::size_t>(j)], r, spec.response);
        d.y(i) = r.metric[index(spec.response)];
        labels.push_back(r.discussion_id);
        d.post_ids.push_back(r.post_id);
    }
    d.clusters = index_clusters<std::string>(labels);
    return d;
}

PValue p_value(double estimate, double se, int n_clusters, PValueMode mode) {
    if (estimate == 0.0) return {1.0, false};
    if (!(se > 0.0)) return {0.0, true};
    const double t = estimate / se;
    if (mode == PValueMode::Normal || n_clusters < 2) return {normal_two_sided_p(t), false};
    return {student_t_two_sided_p(t, static_cast<double>(n_clusters - 1)), false};
}

std::string stars(double p, StarScheme scheme) {
    const bool conventional = scheme == StarScheme::Conventional;
    if (p < 0.001) return conventional ? "***" : "****";
    if (p < 0.01) return conventional ? "**" : "***";
    if (p < 0.05) return conventional ? "*" : "**";
    if (p < 0.1) return conventional ? "†" : "+";
    return "";
}

std::string star_legend(StarScheme scheme) {
    if (scheme == StarScheme::Conventional) {
        return "Signif.: p < 0.001 \"***\", < 0.01 \"**\", < 0.05 \"*\", < 0.1 \"†\"";
    }
    return "Signif.: p < 0.001 \"****\", < 0.01 \"***\", < 0.05 \"**\", < 0.1 \"+\"";
}

RegressionTable run_model(const ModelSpec& spec, std::span<const FeatureRow> rows, const InferenceOptions& options) {
    const std::string label = std::string(to_string(spec.id)) + "/" + std::string(name(spec.response));
    const Design d = build_design(spec, rows);
    if (d.x.rows() == 0) throw InferenceError(InferenceErrorKind::EmptySample, label + ": no rows pass the sample filter");

    OlsFit<double> fit;
    try {
        fit = ols_fit(d.x, d.y);
    } catch (const InsufficientSample& e) {
        throw InferenceError(InferenceErrorKind::InsufficientSample, label + ": " + e.what());
    } catch (const SingularDesign& e) {
        throw InferenceError(InferenceErrorKind::SingularDesign, label + ": " + e.what());
    }

    RegressionTable t;
    t.model = spec.id;
    t.response = spec.response;
    t.n_obs = static_cast<std::size_t>(d.x.rows());
    t.n_clusters = count_clusters(d.clusters);
    t.vcov = cluster_robust_vcov(d.x, fit.residuals, d.clusters, &fit.xtx_inverse);
    if (options.cr1_correction) t.vcov *= cr1_factor(d.x.rows(), d.x.cols(), t.n_clusters);
    if (t.n_clusters < 2) t.flags.push_back("single_cluster");

    const double ssr = fit.residuals.squaredNorm();
    const double sst = (d.y.array() - d.y.mean()).matrix().squaredNorm();
    t.r_squared = sst > 0.0 ? 1.0 - ssr / sst : (ssr == 0.0 ? 1.0 : 0.0);

    for (std::size_t j = 0; j < spec.terms.size(); ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        TermEstimate e;
        e.term = std::string(to_string(spec.terms[j]));
        e.estimate = fit.beta(jj);
        e.std_error = std::sqrt(std::max(0.0, t.vcov(jj, jj)));
        const PValue p = p_value(e.estimate, e.std_error, t.n_clusters, options.pvalue);
        if (p.degenerate) t.flags.push_back("degenerate_se:" + e.term);
        e.p_value = p.value;
        e.stars = stars(e.p_value, options.stars);
        t.terms.push_back(std::move(e));
    }
    return t;
}

std::vector<ModelSpec> default_grid(const InferenceOptions& options) {
    std::vector<ModelSpec> grid;
    for (ModelId id : {ModelId::M1, ModelId::M2, ModelId::M3, ModelId::M4, ModelId::M5}) {
        for (Dimension d : kAllDimensions) grid.push_back(make_spec(id, d, options));
    }
    grid.push_back(make_spec(ModelId::M6, Dimension::DisagreeVsAgree, options));
    return grid;
}

RunAllResult run_specs(std::span<const ModelSpec> specs, std::span<const FeatureRow> rows,
                       const InferenceOptions& options) {
    RunAllResult out;
    for (const ModelSpec& s : specs) {
        try {
            out.tables.push_back(run_model(s, rows, options));
        } catch (const InferenceError& e) {
            out.failures.push_back({s.id, s.response, e.what()});
        }
    }
    return out;
}

RunAllResult run_all(std::span<const FeatureRow> rows, const InferenceOptions& options) {
    const auto grid = default_grid(options);
    return run_specs(grid, rows, options);
}

std::string table_basename(const RegressionTable& t) {
    return std::string(to_string(t.model)) + "_" + std::string(name(t.response));
}

void write_table_csv(std::ostream& out, const RegressionTable& table) {
    out << "term,estimate,std_error,p_value,stars\n";
    for (const TermEstimate& e : table.terms) {
        out << csv::join({e.term, csv::format_exact(e.estimate), csv::format_exact(e.std_error),
                          csv::format_exact(e.p_value), e.stars})
            << '\n';
    }
}

std::string summary_json(const RunAllResult& result, const InferenceOptions& options) {
    using nlohmann::ordered_json;
    ordered_json j;
    j["options"] = {
        {"cr_correction", options.cr1_correction},
        {"pvalue", options.pvalue == PValueMode::StudentT ? "t" : "normal"},
        {"m6_relax_sibling_filter", options.m6_relax_sibling_filter},
        {"stars_scheme", options.stars == StarScheme::Conventional ? "conventional" : "shifted"},
    };
    ordered_json tables = ordered_json::array();
    for (const RegressionTable& t : result.tables) {
        tables.push_back({
            {"model", std::string(to_string(t.model))},
            {"response", std::string(name(t.response))},
            {"file", table_basename(t) + ".csv"},
            {"n_obs", t.n_obs},
            {"n_clusters", t.n_clusters},
            {"r_squared", t.r_squared},
            {"flags", t.flags},
        });
    }
    j["tables"] = tables;
    ordered_json failures = ordered_json::array();
    for (const ModelFailure& f : result.failures) {
        failures.push_back({{"model", std::string(to_string(f.model))},
                            {"response", std::string(name(f.response))},
                            {"error", f.message}});
    }
    j["failures"] = failures;
    return j.dump(2) + "\n";
}

}  // namespace convgeom
