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

#ifndef CONVGEOM_SVG_HPP
#define CONVGEOM_SVG_HPP

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace convgeom::svg {

/// Minimal standalone SVG builder. Coordinates are printed with a fixed
/// number of decimals so output is byte-stable.
class Document {
public:
    Document(double width, double height);

    void line(double x1, double y1, double x2, double y2, std::string_view stroke, double width = 1.0);
    void circle(double cx, double cy, double r, std::string_view fill, double opacity = 1.0);
    void polyline(const std::vector<std::pair<double, double>>& pts, std::string_view stroke, double width = 1.0);
    void polygon(const std::vector<std::pair<double, double>>& pts, std::string_view fill, double opacity = 1.0);
    void text(double x, double y, std::string_view content, double size = 12.0, std::string_view anchor = "middle",
              double rotate = 0.0);
    void comment(std::string_view content);

    std::string str() const;

private:
    double width_;
    double height_;
    std::string body_;
};

std::string escape(std::string_view s);
std::string num(double v);

}  // namespace convgeom::svg

#endif  // CONVGEOM_SVG_HPP
