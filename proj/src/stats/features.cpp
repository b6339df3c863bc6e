#include "attnlens/stats/features.hpp"

#include "attnlens/error.hpp"

#include <algorithm>

namespace attnlens::stats {

using experiment::ResponseRecord;
using explain::Method;

FeatureMatrix::FeatureMatrix(std::vector<std::string> columns, std::size_t rows)
    : columns_(std::move(columns)), rows_(rows), data_(rows_ * columns_.size(), 0.0) {}

std::size_t FeatureMatrix::column_index(const std::string& name) const {
    const auto it = std::find(columns_.begin(), columns_.end(), name);
    if (it == columns_.end()) {
        fail(ErrorKind::not_found, "no feature column '" + name + "'");
    }
    return static_cast<std::size_t>(it - columns_.begin());
}

std::vector<double> FeatureMatrix::column(std::size_t c) const {
    std::vector<double> out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) {
        out[r] = (*this)(r, c);
    }
    return out;
}

void FeatureMatrix::scale_column(std::size_t c, double factor) {
    for (std::size_t r = 0; r < rows_; ++r) {
        (*this)(r, c) *= factor;
    }
}

RegressionData regression_features(std::span<const ResponseRecord> records,
                                   std::size_t n_positions) {
    if (n_positions > 3) {
        fail(ErrorKind::input, "at most three impacting-word positions exist");
    }
    std::vector<std::string> cols = {"expected_answer", "probability",  "accurate",
                                     "review_length",   "trial_number", "method_CLS_A",
                                     "method_LIME",     "method_SHAP"};
    const char* pos_names[] = {"first_word_position", "second_word_position",
                               "third_word_position"};
    for (std::size_t k = 0; k < n_positions; ++k) {
        cols.emplace_back(pos_names[k]);
    }
    RegressionData d{FeatureMatrix(std::move(cols), records.size()), {}};
    d.y.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        auto& x = d.x;
        x(i, 0) = r.expected_class;
        x(i, 1) = r.probability;
        x(i, 2) = r.accurate ? 1.0 : 0.0;
        x(i, 3) = static_cast<double>(r.review_length);
        x(i, 4) = static_cast<double>(r.trial_number);
        x(i, 5) = r.method == Method::cls_a ? 1.0 : 0.0;
        x(i, 6) = r.method == Method::lime ? 1.0 : 0.0;
        x(i, 7) = r.method == Method::shap ? 1.0 : 0.0;
        for (std::size_t k = 0; k < n_positions; ++k) {
            x(i, 8 + k) = r.impact_positions[k];
        }
        d.y.push_back(r.reaction_time_s);
    }
    return d;
}

ClassificationData classification_features(std::span<const ResponseRecord> records,
                                           bool include_method) {
    std::vector<std::string> cols = {"reaction_time", "probability", "review_length",
                                     "trial_number", "first_word_position"};
    if (include_method) {
        cols.emplace_back("method");
    }
    ClassificationData d{FeatureMatrix(std::move(cols), records.size()), {}};
    d.y.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        d.x(i, 0) = r.reaction_time_s;
        d.x(i, 1) = r.probability;
        d.x(i, 2) = static_cast<double>(r.review_length);
        d.x(i, 3) = static_cast<double>(r.trial_number);
        d.x(i, 4) = r.impact_positions[0];
        if (include_method) {
            d.x(i, 5) = static_cast<double>(r.method);
        }
        d.y.push_back(r.accurate ? 1 : 0);
    }
    return d;
}

std::vector<ResponseRecord> valid_records(std::span<const ResponseRecord> records) {
    std::vector<ResponseRecord> out;
    for (const auto& r : records) {
        if (r.validity == experiment::RtValidity::valid) {
            out.push_back(r);
        }
    }
    return out;
}

} // namespace attnlens::stats
