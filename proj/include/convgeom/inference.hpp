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

#ifndef CONVGEOM_INFERENCE_HPP
#define CONVGEOM_INFERENCE_HPP

#include <Eigen/Dense>

#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "convgeom/geometry.hpp"
#include "convgeom/ols.hpp"
#include "convgeom/types.hpp"

namespace convgeom {

enum class ModelId { M1, M2, M3, M4, M5, M6 };

inline constexpr std::array<ModelId, 6> kAllModels = {ModelId::M1, ModelId::M2, ModelId::M3,
                                                       ModelId::M4, ModelId::M5, ModelId::M6};

std::string_view to_string(ModelId id);
std::optional<ModelId> parse_model_id(std::string_view s);

/// Regressor columns; the intercept is always the first column.
enum class Term {
    Intercept,
    DtPrev,
    DtParent,
    SibOlderMean,
    ParentMetric,
    BrNeg,
    ParentXSib,  // parent_metric * sib_older_mean
    ParentXBr,   // parent_metric * br_neg
};

std::string_view to_string(Term t);

/// Which optional FeatureRow fields a row must carry to enter the sample.
struct SampleFilter {
    bool dt_prev = false;
    bool dt_parent = false;
    bool older_sibling = false;
    bool parent_metric = false;
    bool br_neg = false;

    bool accepts(const FeatureRow& row, Dimension dim) const;
};

struct ModelSpec {
    ModelId id = ModelId::M1;
    Dimension response = Dimension::DisagreeVsAgree;
    std::vector<Term> terms;  // intercept first
    SampleFilter filter;
};

enum class PValueMode { StudentT, Normal };
enum class StarScheme {
    Conventional,  // *** < 0.001, ** < 0.01, * < 0.05, dagger < 0.1
    Shifted,       // **** < 0.001, *** < 0.01, ** < 0.05, + < 0.1
};

std::optional<PValueMode> parse_pvalue_mode(std::string_view s);
std::optional<StarScheme> parse_star_scheme(std::string_view s);

struct InferenceOptions {
    bool cr1_correction = false;
    PValueMode pvalue = PValueMode::StudentT;
    bool m6_relax_sibling_filter = false;
    StarScheme stars = StarScheme::Conventional;
};

ModelSpec make_spec(ModelId id, Dimension response, const InferenceOptions& options = {});

/// Value of one design column for a row that passed the filter.
double term_value(Term term, const FeatureRow& row, Dimension dim);

struct Design {
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
    std::vector<int> clusters;  // dense discussion indices
    std::vector<std::string> post_ids;
};

Design build_design(const ModelSpec& spec, std::span<const FeatureRow> rows);

struct PValue {
    double value = 1.0;
    bool degenerate = false;  // se == 0 with a non-zero estimate
};

/// Two-sided p-value of estimate/se under t(n_clusters - 1) or the normal.
PValue p_value(double estimate, double se, int n_clusters, PValueMode mode = PValueMode::StudentT);

std::string stars(double p, StarScheme scheme = StarScheme::Conventional);
std::string star_legend(StarScheme scheme);

struct TermEstimate {
    std::string term;
    double estimate = 0.0;
    double std_error = 0.0;
    double p_value = 1.0;
    std::string stars;
};

struct RegressionTable {
    ModelId model = ModelId::M1;
    Dimension response = Dimension::DisagreeVsAgree;
    std::vector<TermEstimate> terms;
    std::size_t n_obs = 0;
    int n_clusters = 0;
    double r_squared = 0.0;
    Eigen::MatrixXd vcov;
    std::vector<std::string> flags;  // e.g. single_cluster, degenerate_se
};

enum class InferenceErrorKind { EmptySample, InsufficientSample, SingularDesign };

class InferenceError : public std::runtime_error {
public:
    InferenceError(InferenceErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    InferenceErrorKind kind() const { return kind_; }

private:
    InferenceErrorKind kind_;
};

/// Filters, fits and computes discussion-clustered inference for one model.
RegressionTable run_model(const ModelSpec& spec, std::span<const FeatureRow> rows, const InferenceOptions& options = {});

struct ModelFailure {
    ModelId model;
    Dimension response;
    std::string message;
};

struct RunAllResult {
    std::vector<RegressionTable> tables;  // ordered by (model, dimension)
    std::vector<ModelFailure> failures;
};

/// The default grid of M1-M5 over every dimension plus M6 on disagree_vs_agree.
std::vector<ModelSpec> default_grid(const InferenceOptions& options = {});

RunAllResult run_all(std::span<const FeatureRow> rows, const InferenceOptions& options = {});
RunAllResult run_specs(std::span<const ModelSpec> specs, std::span<const FeatureRow> rows,
                       const InferenceOptions& options = {});

std::string table_basename(const RegressionTable& t);
/// Unrounded CSV: term, estimate, std_error, p_value, stars.
void write_table_csv(std::ostream& out, const RegressionTable& table);
/// n_obs / n_clusters / r_squared per table and failures, as JSON text.
std::string summary_json(const RunAllResult& result, const InferenceOptions& options);

}  // namespace convgeom

#endif  // CONVGEOM_INFERENCE_HPP
