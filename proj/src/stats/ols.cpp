#include "attnlens/stats/ols.hpp"

#include "attnlens/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace attnlens::stats {

namespace {

constexpr double kRankTolerance = 1e-10;

Eigen::Index rank_of(const Eigen::MatrixXd& a) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    qr.setThreshold(kRankTolerance);
    return qr.rank();
}

} // namespace

double RegressionResult::coefficient(const std::string& column) const {
    const auto it = std::find(columns.begin(), columns.end(), column);
    if (it == columns.end()) {
        fail(ErrorKind::not_found, "no coefficient '" + column + "'");
    }
    return coefficients[static_cast<std::size_t>(it - columns.begin())];
}

double RegressionResult::predict(std::span<const double> row) const {
    if (row.size() != coefficients.size()) {
        fail(ErrorKind::dimension, "row width does not match the regression");
    }
    double y = intercept;
    for (std::size_t c = 0; c < row.size(); ++c) {
        y += coefficients[c] * row[c];
    }
    return y;
}

RegressionResult ols_fit(const FeatureMatrix& x, std::span<const double> y) {
    const auto n = static_cast<Eigen::Index>(x.rows());
    const auto p = static_cast<Eigen::Index>(x.cols());
    if (static_cast<std::size_t>(n) != y.size()) {
        fail(ErrorKind::dimension, "design rows and targets differ in length");
    }
    if (n <= p + 1) {
        fail(ErrorKind::estimation, "regression needs more rows than columns plus intercept");
    }
    Eigen::MatrixXd a(n, p + 1);
    Eigen::VectorXd b(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        a(r, 0) = 1.0;
        for (Eigen::Index c = 0; c < p; ++c) {
            a(r, c + 1) = x(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
        }
        b(r) = y[static_cast<std::size_t>(r)];
    }
    if (!a.allFinite() || !b.allFinite()) {
        fail(ErrorKind::numeric, "regression input is not finite");
    }
    // Column scaling keeps the rank threshold meaningful across units.
    Eigen::VectorXd scale = a.colwise().norm().transpose();
    for (Eigen::Index c = 0; c <= p; ++c) {
        if (scale(c) == 0.0) scale(c) = 1.0;
    }
    const Eigen::MatrixXd as = a * scale.cwiseInverse().asDiagonal();

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(as);
    qr.setThreshold(kRankTolerance);
    if (qr.rank() < p + 1) {
        std::string dependent;
        Eigen::MatrixXd basis(n, 0);
        Eigen::Index basis_rank = 0;
        for (Eigen::Index c = 0; c <= p; ++c) {
            Eigen::MatrixXd trial(n, basis.cols() + 1);
            trial << basis, as.col(c);
            if (rank_of(trial) > basis_rank) {
                basis = std::move(trial);
                ++basis_rank;
            } else {
                if (!dependent.empty()) dependent += ", ";
                dependent += c == 0 ? std::string("intercept") : x.columns()[c - 1];
            }
        }
        fail(ErrorKind::estimation, "design matrix is rank deficient; dependent columns: " + dependent);
    }
    const Eigen::VectorXd beta = scale.cwiseInverse().asDiagonal() * qr.solve(b);

    RegressionResult out;
    out.columns = x.columns();
    out.n = static_cast<std::size_t>(n);
    out.intercept = beta(0);
    out.coefficients.assign(beta.data() + 1, beta.data() + beta.size());
    const Eigen::VectorXd fitted = a * beta;
    const Eigen::VectorXd resid = b - fitted;
    out.fitted.assign(fitted.data(), fitted.data() + n);
    out.residuals.assign(resid.data(), resid.data() + n);
    const double ssr = resid.squaredNorm();
    const double sst = (b.array() - b.mean()).square().sum();
    out.r_squared = sst > 0.0 ? 1.0 - ssr / sst : 0.0;
    out.residual_variance = ssr / static_cast<double>(n - p - 1);
    return out;
}

} // namespace attnlens::stats
