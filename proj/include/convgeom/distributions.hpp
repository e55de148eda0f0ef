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

#ifndef CONVGEOM_DISTRIBUTIONS_HPP
#define CONVGEOM_DISTRIBUTIONS_HPP

namespace convgeom {

/// Regularized incomplete beta function I_x(a, b) for a, b > 0, x in [0, 1].
double incomplete_beta(double a, double b, double x);

/// P(|Z| >= |z|) for a standard normal Z.
double normal_two_sided_p(double z);

/// P(|T| >= |t|) for Student's t with `df` > 0 degrees of freedom.
double student_t_two_sided_p(double t, double df);

}  // namespace convgeom

#endif  // CONVGEOM_DISTRIBUTIONS_HPP
