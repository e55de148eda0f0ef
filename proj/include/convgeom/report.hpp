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

#ifndef CONVGEOM_REPORT_HPP
#define CONVGEOM_REPORT_HPP

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

#include "convgeom/agreement.hpp"
#include "convgeom/geometry.hpp"
#include "convgeom/inference.hpp"

namespace convgeom {

/// Five significant digits.
std::string format_number(double v);
/// Five significant digits; below 1e-5 renders as "< 0.00001".
std::string format_p(double p);

struct RenderedTable {
    std::string text;
    std::string csv;
};

RenderedTable render_table(const RegressionTable& table, StarScheme scheme = StarScheme::Conventional);

std::string render_agreement(const AgreementReport& report);

/// Figure z for 95% pointwise bands.
inline constexpr double kBandZ = 1.96;

/// Half width z * sqrt([1, x] V [1, x]') of the pointwise band.
double band_half_width(const Eigen::Matrix2d& vcov, double x, double z = kBandZ);

/// True for models drawn as a scatter with one regressor (M1-M4).
bool has_scatter(ModelId model);

std::string figure_basename(const RegressionTable& table);

/// Standalone SVG: points, fitted line, and the cluster-robust 95% band.
/// Throws InferenceError(EmptySample) when no row passes the model filter.
std::string emit_scatter(std::span<const FeatureRow> rows, const ModelSpec& spec, const RegressionTable& fit);

}  // namespace convgeom

#endif  // CONVGEOM_REPORT_HPP
