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

#include "convgeom/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "convgeom/svg.hpp"

namespace convgeom {

std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.5g", v);
    return buf;
}

std::string format_p(double p) {
    if (p < 1e-5) return "< 0.00001";
    return format_number(p);
}

namespace {

std::string pad(const std::string& s, std::size_t width, bool left = false) {
    // Column widths count code points so the dagger does not misalign.
    std::size_t cps = 0;
    for (unsigned char c : s) cps += (c & 0xC0) != 0x80;
    if (cps >= width) return s;
    const std::string fill(width - cps, ' ');
    return left ? s + fill : fill + s;
}

}  // namespace

RenderedTable render_table(const RegressionTable& table, StarScheme scheme) {
    RenderedTable out;
    std::string& t = out.text;
    t += std::string(to_string(table.model)) + "  response: " + std::string(name(table.response)) + "\n";
    t += pad("term", 30, true) + pad("estimate", 12) + pad("std_error", 12) + pad("p_value", 12) + "  stars\n";
    for (const TermEstimate& e : table.terms) {
        t += pad(e.term, 30, true) + pad(format_number(e.estimate), 12) + pad(format_number(e.std_error), 12) +
             pad(format_p(e.p_value), 12) + "  " + stars(e.p_value, scheme) + "\n";
    }
    t += "n_obs = " + std::to_string(table.n_obs) + ", n_clusters = " + std::to_string(table.n_clusters) +
         ", R^2 = " + format_number(table.r_squared) + "\n";
    for (const std::string& f : table.flags) t += "flag: " + f + "\n";
    t += star_legend(scheme) + "\n";

    RegressionTable csv_table = table;
    for (TermEstimate& e : csv_table.terms) e.stars = stars(e.p_value, scheme);
    std::ostringstream ss;
    write_table_csv(ss, csv_table);
    out.csv = ss.str();
    return out;
}

std::string render_agreement(const AgreementReport& report) {
    std::string t;
    t += pad("dimension", 26, true) + pad("alpha", 9) + pad("kappa", 9) + pad("MAPD", 9) + pad("exact", 9) +
         pad("within1", 9) + pad("range", 9) + pad("sd", 9) + pad("n_items", 9) + pad("raters", 8) + "\n";
    for (const AgreementRow& r : report.rows) {
        char buf[256];
        std::snprintf(buf, sizeof buf, "%9.3f%9.3f%9.3f%9.3f%9.3f%9.3f%9.3f%9zu%8zu", r.alpha.value, r.kappa.value,
                      r.dispersion.mapd, r.dispersion.exact_agreement, r.dispersion.pct_within_1,
                      r.dispersion.mean_range, r.dispersion.mean_sd, r.n_items, r.n_raters);
        t += pad(std::string(name(r.dimension)), 26, true) + buf + "\n";
    }
    if (report.excluded_items) t += "items excluded for missing replications: " + std::to_string(report.excluded_items) + "\n";
    return t;
}

double band_half_width(const Eigen::Matrix2d& vcov, double x, double z) {
    const Eigen::Vector2d g(1.0, x);
    return z * std::sqrt(std::max(0.0, g.dot(vcov * g)));
}

bool has_scatter(ModelId model) {
    return model == ModelId::M1 || model == ModelId::M2 || model == ModelId::M3 || model == ModelId::M4;
}

std::string figure_basename(const RegressionTable& table) { return table_basename(table); }

namespace {

std::string pole_axis(Dimension d, const std::string& prefix) {
    const auto& di = info(d);
    return prefix + std::string(di.negative_pole) + " (-) ... " + std::string(di.positive_pole) + " (+)";
}

std::string x_label(const ModelSpec& spec) {
    switch (spec.id) {
        case ModelId::M1: return "hours since previous post in the discussion";
        case ModelId::M2: return "hours since parent post";
        case ModelId::M3: return pole_axis(spec.response, "older-sibling mean: ");
        default: return pole_axis(spec.response, "parent post: ");
    }
}

std::vector<double> nice_ticks(double lo, double hi) {
    const double span = hi - lo;
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        step = m * mag;
        if (step >= raw) break;
    }
    std::vector<double> ticks;
    for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * span; t += step) ticks.push_back(t);
    return ticks;
}

}  // namespace

std::string emit_scatter(std::span<const FeatureRow> rows, const ModelSpec& spec, const RegressionTable& fit) {
    if (spec.terms.size() != 2 || fit.vcov.rows() != 2) {
        throw std::invalid_argument("emit_scatter: model must have exactly one regressor");
    }
    const Design d = build_design(spec, rows);
    if (d.x.rows() == 0) throw InferenceError(InferenceErrorKind::EmptySample, "emit_scatter: empty sample");

    const double a = fit.terms[0].estimate;
    const double b = fit.terms[1].estimate;
    const Eigen::Matrix2d v = fit.vcov;

    double x_lo = d.x.col(1).minCoeff(), x_hi = d.x.col(1).maxCoeff();
    if (x_hi - x_lo < 1e-9) {
        x_lo -= 0.5;
        x_hi += 0.5;
    }
    const int n_grid = 101;
    std::vector<double> gx(n_grid), gy(n_grid), gw(n_grid);
    for (int i = 0; i < n_grid; ++i) {
        gx[static_cast<std::size_t>(i)] = x_lo + (x_hi - x_lo) * i / (n_grid - 1);
        gy[static_cast<std::size_t>(i)] = a + b * gx[static_cast<std::size_t>(i)];
        gw[static_cast<std::size_t>(i)] = band_half_width(v, gx[static_cast<std::size_t>(i)]);
    }
    double y_lo = d.y.minCoeff(), y_hi = d.y.maxCoeff();
    for (int i = 0; i < n_grid; ++i) {
        y_lo = std::min(y_lo, gy[static_cast<std::size_t>(i)] - gw[static_cast<std::size_t>(i)]);
        y_hi = std::max(y_hi, gy[static_cast<std::size_t>(i)] + gw[static_cast<std::size_t>(i)]);
    }
    if (y_hi - y_lo < 1e-9) {
        y_lo -= 0.5;
        y_hi += 0.5;
    }
    const double x_pad = 0.04 * (x_hi - x_lo), y_pad = 0.04 * (y_hi - y_lo);
    x_lo -= x_pad, x_hi += x_pad, y_lo -= y_pad, y_hi += y_pad;

    constexpr double W = 640, H = 480, L = 70, R = 20, T = 40, B = 60;
    auto px = [&](double x) { return L + (x - x_lo) / (x_hi - x_lo) * (W - L - R); };
    auto py = [&](double y) { return H - B - (y - y_lo) / (y_hi - y_lo) * (H - T - B); };

    svg::Document doc(W, H);
    doc.comment(std::string(to_string(spec.id)) + " " + std::string(name(spec.response)) +
                ": n_obs=" + std::to_string(fit.n_obs) + " n_clusters=" + std::to_string(fit.n_clusters));

    std::vector<std::pair<double, double>> band;
    for (int i = 0; i < n_grid; ++i) {
        const auto k = static_cast<std::size_t>(i);
        band.emplace_back(px(gx[k]), py(gy[k] + gw[k]));
    }
    for (int i = n_grid - 1; i >= 0; --i) {
        const auto k = static_cast<std::size_t>(i);
        band.emplace_back(px(gx[k]), py(gy[k] - gw[k]));
    }
    doc.polygon(band, "gray", 0.35);

    for (Eigen::Index i = 0; i < d.x.rows(); ++i) doc.circle(px(d.x(i, 1)), py(d.y(i)), 2.0, "black", 0.35);

    doc.polyline({{px(gx.front()), py(gy.front())}, {px(gx.back()), py(gy.back())}}, "red", 2.0);

    doc.line(L, H - B, W - R, H - B, "black");
    doc.line(L, T, L, H - B, "black");
    for (double t : nice_ticks(x_lo, x_hi)) {
        doc.line(px(t), H - B, px(t), H - B + 5, "black");
        doc.text(px(t), H - B + 18, format_number(t), 11);
    }
    for (double t : nice_ticks(y_lo, y_hi)) {
        doc.line(L - 5, py(t), L, py(t), "black");
        doc.text(L - 8, py(t) + 4, format_number(t), 11, "end");
    }
    doc.text((L + W - R) / 2, H - 15, x_label(spec), 13);
    doc.text(18, (T + H - B) / 2, pole_axis(spec.response, ""), 13, "middle", -90);
    doc.text((L + W - R) / 2, 24,
             std::string(to_string(spec.id)) + ": " + std::string(name(spec.response)) + "  (slope " +
                 format_number(b) + ", p " + format_p(fit.terms[1].p_value) + ")",
             14);
    return doc.str();
}

}  // namespace convgeom
