#pragma once

#include "attnlens/stats/features.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace attnlens::stats {

// Equal-frequency cut points per feature. A value falls in bin
// #cuts <= value, so binning depends only on ranks. Cut points are observed
// values.
struct Binning {
    std::vector<std::string> features;
    std::vector<std::vector<double>> cuts;
    // Representative value per bin: the smallest observed value for bin 0,
    // the lower cut point otherwise. Ascending.
    std::vector<std::vector<double>> grid;

    std::size_t bins(std::size_t feature) const { return cuts[feature].size() + 1; }
    std::size_t bin_of(std::size_t feature, double value) const;
    bool operator==(const Binning&) const = default;
};

Binning equal_frequency_bins(const FeatureMatrix& x, std::size_t max_bins);

struct EbmConfig {
    std::size_t bins = 32;
    std::size_t rounds = 500;
    double learning_rate = 0.05;
    std::size_t max_leaves = 3;
    std::size_t n_pairs = 0;
    std::size_t pair_bins = 8;
    double min_hessian = 1e-3; // leaves with less curvature are not updated

    void validate() const;
};

struct PairTerm {
    std::size_t i = 0;
    std::size_t j = 0;
    // Coarse bins of i and j, each a contiguous run of the main bins.
    std::vector<std::size_t> map_i;
    std::vector<std::size_t> map_j;
    std::size_t cols = 0;
    std::vector<double> table; // row-major [coarse_i][coarse_j]

    double value(std::size_t bin_i, std::size_t bin_j) const {
        return table[map_i[bin_i] * cols + map_j[bin_j]];
    }
};

// logit(P(y = 1)) = intercept + sum_i f_i(x_i) + sum_pairs f_ij(x_i, x_j),
// every term centered over the training rows.
struct GamModel {
    Binning binning;
    double intercept = 0.0;
    std::vector<std::vector<double>> shapes; // per feature, per bin
    std::vector<PairTerm> pairs;
    std::vector<std::string> warnings;

    double contribution(std::size_t feature, double value) const;
    double predict_logit(std::span<const double> row) const;
    double predict_proba(std::span<const double> row) const;
};

// Cyclic boosting on the logit link: each round visits the features in
// order and adds a learning-rate-scaled Newton step of a piecewise-constant
// fit with at most max_leaves runs of bins. Binning defaults to
// equal_frequency_bins(x, config.bins); pass one to share it across fits.
GamModel ebm_fit(const FeatureMatrix& x, std::span<const int> y, const EbmConfig& config,
                 const Binning* binning = nullptr);

double accuracy(const GamModel& model, const FeatureMatrix& x, std::span<const int> y);

struct ResponseCurve {
    std::string feature;
    std::vector<double> grid;
    std::vector<double> mean;
    std::vector<double> std; // sample standard deviation across models

    bool operator==(const ResponseCurve&) const = default;
};

// Models must share the binning; otherwise Error{input}.
ResponseCurve response_curve(std::span<const GamModel> models, const std::string& feature);

} // namespace attnlens::stats
