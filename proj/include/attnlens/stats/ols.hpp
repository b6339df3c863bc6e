#pragma once

#include "attnlens/stats/features.hpp"

#include <span>
#include <string>
#include <vector>

namespace attnlens::stats {

struct RegressionResult {
    std::vector<std::string> columns;
    std::vector<double> coefficients;
    double intercept = 0.0;
    double r_squared = 0.0;
    double residual_variance = 0.0; // SSR / (n - p - 1)
    std::size_t n = 0;
    std::vector<double> fitted;
    std::vector<double> residuals;

    double coefficient(const std::string& column) const;
    double predict(std::span<const double> row) const;
};

// Least squares with an intercept via column-pivoted QR. Requires
// n > cols + 1; a rank-deficient design throws Error{estimation} naming the
// columns that depend on earlier ones ("intercept" for constants).
RegressionResult ols_fit(const FeatureMatrix& x, std::span<const double> y);

} // namespace attnlens::stats
