#pragma once

#include "attnlens/experiment/records.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace attnlens::stats {

// Dense row-major design matrix with named columns.
class FeatureMatrix {
public:
    FeatureMatrix() = default;
    FeatureMatrix(std::vector<std::string> columns, std::size_t rows);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return columns_.size(); }
    const std::vector<std::string>& columns() const noexcept { return columns_; }
    std::size_t column_index(const std::string& name) const;

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols(), cols()}; }
    std::vector<double> column(std::size_t c) const;
    void scale_column(std::size_t c, double factor);

private:
    std::vector<std::string> columns_;
    std::size_t rows_ = 0;
    std::vector<double> data_;
};

// Reaction-time regression: expected_answer, probability, accurate,
// review_length, trial_number, method_CLS_A, method_LIME, method_SHAP
// (RANDOM is the reference level) and the first n_positions impacting-word
// positions.
struct RegressionData {
    FeatureMatrix x;
    std::vector<double> y;
};
RegressionData regression_features(std::span<const experiment::ResponseRecord> records,
                                   std::size_t n_positions = 1);

// Accuracy classification: reaction_time, probability, review_length,
// trial_number, first_word_position, plus an ordinal method code when
// include_method is set.
struct ClassificationData {
    FeatureMatrix x;
    std::vector<int> y;
};
ClassificationData classification_features(std::span<const experiment::ResponseRecord> records,
                                           bool include_method = false);

// Records with a valid reaction time; flagged ones stay out of the analyses.
std::vector<experiment::ResponseRecord> valid_records(
    std::span<const experiment::ResponseRecord> records);

} // namespace attnlens::stats
