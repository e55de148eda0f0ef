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

#include "convgeom/svg.hpp"

#include <cmath>
#include <cstdio>

namespace convgeom::svg {

std::string num(double v) {
    if (std::fabs(v) < 5e-4) v = 0.0;  // avoid "-0.000"
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

std::string escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

Document::Document(double width, double height) : width_(width), height_(height) {}

void Document::line(double x1, double y1, double x2, double y2, std::string_view stroke, double width) {
    body_ += "  <line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) + "\" y2=\"" + num(y2) +
             "\" stroke=\"" + std::string(stroke) + "\" stroke-width=\"" + num(width) + "\"/>\n";
}

void Document::circle(double cx, double cy, double r, std::string_view fill, double opacity) {
    body_ += "  <circle cx=\"" + num(cx) + "\" cy=\"" + num(cy) + "\" r=\"" + num(r) + "\" fill=\"" +
             std::string(fill) + "\" fill-opacity=\"" + num(opacity) + "\"/>\n";
}

namespace {
std::string points(const std::vector<std::pair<double, double>>& pts) {
    std::string s;
    for (const auto& [x, y] : pts) {
        if (!s.empty()) s.push_back(' ');
        s += num(x) + "," + num(y);
    }
    return s;
}
}  // namespace

void Document::polyline(const std::vector<std::pair<double, double>>& pts, std::string_view stroke, double width) {
    body_ += "  <polyline points=\"" + points(pts) + "\" fill=\"none\" stroke=\"" + std::string(stroke) +
             "\" stroke-width=\"" + num(width) + "\"/>\n";
}

void Document::polygon(const std::vector<std::pair<double, double>>& pts, std::string_view fill, double opacity) {
    body_ += "  <polygon points=\"" + points(pts) + "\" fill=\"" + std::string(fill) + "\" fill-opacity=\"" +
             num(opacity) + "\" stroke=\"none\"/>\n";
}

void Document::text(double x, double y, std::string_view content, double size, std::string_view anchor,
                    double rotate) {
    body_ += "  <text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-size=\"" + num(size) +
             "\" font-family=\"sans-serif\" text-anchor=\"" + std::string(anchor) + "\"";
    if (rotate != 0.0) body_ += " transform=\"rotate(" + num(rotate) + " " + num(x) + " " + num(y) + ")\"";
    body_ += ">" + escape(content) + "</text>\n";
}

void Document::comment(std::string_view content) { body_ += "  <!-- " + escape(content) + " -->\n"; }

std::string Document::str() const {
    return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
           num(width_) + "\" height=\"" + num(height_) + "\" viewBox=\"0 0 " + num(width_) + " " + num(height_) +
           "\">\n  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" + body_ + "</svg>\n";
}

}  // namespace convgeom::svg
