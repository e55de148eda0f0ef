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

#ifndef CONVGEOM_OLS_HPP
#define CONVGEOM_OLS_HPP

#include <Eigen/Dense>

#include <map>
#include <span>
#include <stdexcept>
#include <vector>

namespace convgeom {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

class SingularDesign : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InsufficientSample : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Relative pivot threshold below which a column-equilibrated design is
/// considered rank deficient.
inline constexpr double kRankThreshold = 1e-10;

template <typename Scalar>
struct OlsFit {
    VectorX<Scalar> beta;
    VectorX<Scalar> residuals;
    MatrixX<Scalar> xtx_inverse;  // (X'X)^-1, the sandwich bread
};

namespace detail {

// Column-pivoted QR of the column-equilibrated design. Throws SingularDesign
// when a column is zero or the numerical rank is below k.
template <typename Derived>
auto equilibrated_qr(const Eigen::MatrixBase<Derived>& x) {
    using Scalar = typename Derived::Scalar;
    const Eigen::Index k = x.cols();
    VectorX<Scalar> scale = x.colwise().norm().transpose();
    for (Eigen::Index j = 0; j < k; ++j) {
        if (!(scale[j] > Scalar(0))) throw SingularDesign("design column " + std::to_string(j) + " is all zero");
    }
    const MatrixX<Scalar> xs = x * scale.cwiseInverse().asDiagonal();
    Eigen::ColPivHouseholderQR<MatrixX<Scalar>> qr(xs);
    qr.setThreshold(Scalar(kRankThreshold));
    if (qr.rank() < k) {
        throw SingularDesign("design matrix has rank " + std::to_string(qr.rank()) + " < " + std::to_string(k));
    }
    return std::pair{std::move(qr), std::move(scale)};
}

template <typename Scalar>
MatrixX<Scalar> bread_from_qr(const Eigen::ColPivHouseholderQR<MatrixX<Scalar>>& qr, const VectorX<Scalar>& scale) {
    const Eigen::Index k = qr.cols();
    const MatrixX<Scalar> r = qr.matrixR().topLeftCorner(k, k).template triangularView<Eigen::Upper>();
    const MatrixX<Scalar> r_inv =
        r.template triangularView<Eigen::Upper>().solve(MatrixX<Scalar>::Identity(k, k));
    const MatrixX<Scalar> inner = r_inv * r_inv.transpose();
    const auto& perm = qr.colsPermutation();
    MatrixX<Scalar> bread = perm * inner * perm.transpose();
    bread = scale.cwiseInverse().asDiagonal() * bread * scale.cwiseInverse().asDiagonal();
    return (bread + bread.transpose()) / Scalar(2);
}

}  // namespace detail

/// Least-squares fit of y on the columns of x via a rank-revealing QR.
template <typename DerivedX, typename DerivedY>
OlsFit<typename DerivedX::Scalar> ols_fit(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y) {
    using Scalar = typename DerivedX::Scalar;
    if (x.rows() != y.rows()) throw std::invalid_argument("ols_fit: X and y row counts differ");
    if (x.rows() <= x.cols()) {
        throw InsufficientSample("ols_fit: n = " + std::to_string(x.rows()) + " <= k = " + std::to_string(x.cols()));
    }
    auto [qr, scale] = detail::equilibrated_qr(x);
    OlsFit<Scalar> fit;
    fit.beta = qr.solve(y.template cast<Scalar>()).cwiseQuotient(scale);
    fit.residuals = y.template cast<Scalar>() - x * fit.beta;
    fit.xtx_inverse = detail::bread_from_qr(qr, scale);
    return fit;
}

/// (X'X)^-1 with the same rank check as ols_fit.
template <typename Derived>
MatrixX<typename Derived::Scalar> xtx_inverse(const Eigen::MatrixBase<Derived>& x) {
    auto [qr, scale] = detail::equilibrated_qr(x);
    return detail::bread_from_qr(qr, scale);
}

/// Maps arbitrary cluster labels onto 0..G-1 in order of first appearance.
template <typename Label>
std::vector<int> index_clusters(std::span<const Label> labels) {
    std::map<Label, int> ids;
    std::vector<int> out;
    out.reserve(labels.size());
    for (const Label& l : labels) out.push_back(ids.emplace(l, static_cast<int>(ids.size())).first->second);
    return out;
}

inline int count_clusters(std::span<const int> cluster_ids) {
    int g = 0;
    for (int c : cluster_ids) {
        if (c < 0) throw std::invalid_argument("cluster ids must be non-negative");
        g = std::max(g, c + 1);
    }
    return g;
}

/// Cluster-robust sandwich  B (sum_g X_g' e_g e_g' X_g) B  with B = (X'X)^-1.
/// Cluster ids are dense indices 0..G-1 aligned with the rows of x.
template <typename DerivedX, typename DerivedE>
MatrixX<typename DerivedX::Scalar> cluster_robust_vcov(const Eigen::MatrixBase<DerivedX>& x,
                                                       const Eigen::MatrixBase<DerivedE>& residuals,
                                                       std::span<const int> cluster_ids,
                                                       const MatrixX<typename DerivedX::Scalar>* bread = nullptr) {
    using Scalar = typename DerivedX::Scalar;
    if (residuals.rows() != x.rows() || static_cast<Eigen::Index>(cluster_ids.size()) != x.rows()) {
        throw std::invalid_argument("cluster_robust_vcov: dimension mismatch");
    }
    const MatrixX<Scalar> b = bread ? *bread : xtx_inverse(x);
    const int g = count_clusters(cluster_ids);
    MatrixX<Scalar> scores = MatrixX<Scalar>::Zero(g, x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        scores.row(cluster_ids[static_cast<std::size_t>(i)]) += residuals(i) * x.row(i);
    }
    const MatrixX<Scalar> meat = scores.transpose() * scores;
    MatrixX<Scalar> v = b * meat * b;
    return (v + v.transpose()) / Scalar(2);
}

/// White's HC0 estimator  B (sum_i e_i^2 x_i x_i') B.
template <typename DerivedX, typename DerivedE>
MatrixX<typename DerivedX::Scalar> hc0_vcov(const Eigen::MatrixBase<DerivedX>& x,
                                            const Eigen::MatrixBase<DerivedE>& residuals) {
    using Scalar = typename DerivedX::Scalar;
    const MatrixX<Scalar> b = xtx_inverse(x);
    const MatrixX<Scalar> meat = x.transpose() * residuals.cwiseAbs2().asDiagonal() * x;
    MatrixX<Scalar> v = b * meat * b;
    return (v + v.transpose()) / Scalar(2);
}

/// Small-sample factor G/(G-1) * (n-1)/(n-k).
inline double cr1_factor(Eigen::Index n, Eigen::Index k, int clusters) {
    if (clusters < 2 || n <= k) return 1.0;
    return static_cast<double>(clusters) / (clusters - 1) * static_cast<double>(n - 1) / static_cast<double>(n - k);
}

}  // namespace convgeom

#endif  // CONVGEOM_OLS_HPP
