#pragma once

#include "attnlens/experiment/records.hpp"
#include "attnlens/stats/ebm.hpp"
#include "attnlens/stats/ols.hpp"
#include "attnlens/stats/ttest.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace attnlens::stats {

using experiment::ResponseRecord;
using Warnings = std::vector<std::string>;

struct DescriptiveRow {
    std::string experiment_id;
    explain::Method method = explain::Method::random;
    std::size_t n = 0;
    double mean_rt = 0.0;
    double accuracy = 0.0; // fraction in [0, 1]
};

// Mean reaction time and accuracy per (experiment, method), methods in
// display order. Empty groups are left out with a warning.
std::vector<DescriptiveRow> descriptive_summary(std::span<const ResponseRecord> records,
                                                Warnings* warnings = nullptr);

struct ParticipantDiff {
    std::string participant;
    double diff = 0.0; // mean RT(method) - mean RT(RANDOM)
};

std::vector<ParticipantDiff> paired_diff_by_participant(std::span<const ResponseRecord> records,
                                                        explain::Method method,
                                                        Warnings* warnings = nullptr);

struct ParticipantFit {
    std::string participant;
    RegressionResult fit;
};

struct CoefficientSummary {
    std::string column;
    std::vector<double> values; // one per participant
    double mean = 0.0;
    double median = 0.0;
    std::optional<TTestResult> test; // method columns only, alternative "less"
};

struct RegressionSummary {
    std::vector<ParticipantFit> fits;
    std::vector<CoefficientSummary> coefficients;
    double mean_r_squared = 0.0;
};

RegressionSummary per_participant_regression(std::span<const ResponseRecord> records,
                                             std::size_t n_positions = 1,
                                             Warnings* warnings = nullptr);

// Downsamples the majority outcome without replacement to the minority
// count; order of the kept records follows the input.
std::vector<ResponseRecord> balanced_subsample(std::span<const ResponseRecord> records,
                                               std::uint64_t seed);

struct AnalysisConfig {
    std::uint64_t seed = 0;
    std::size_t iterations = 50;
    std::size_t n_positions = 1;
    EbmConfig ebm;
    // Fraction of the probability range (by grid quantile) treated as "high"
    // when comparing method curves with RANDOM.
    double high_probability_quantile = 0.75;
    std::size_t threads = 0; // 0: hardware concurrency
};

struct MethodCurves {
    explain::Method method = explain::Method::random;
    std::size_t n_models = 0;
    std::vector<ResponseCurve> curves;
    double mean_train_accuracy = 0.0;
};

struct CurveComparison {
    explain::Method method = explain::Method::random;
    std::string feature;
    // Mean of (method curve - RANDOM curve) over the upper grid points.
    double high_region_difference = 0.0;
};

struct MethodTest {
    explain::Method method = explain::Method::random;
    std::vector<ParticipantDiff> diffs;
    std::optional<TTestResult> test;
};

struct ExperimentReport {
    std::string experiment_id;
    std::size_t n_records = 0;
    std::size_t n_valid = 0;
    std::size_t n_participants = 0;
    std::vector<DescriptiveRow> summary;
    std::vector<MethodTest> rt_tests; // CLS_A, LIME, SHAP vs RANDOM
    RegressionSummary regression;
    std::vector<MethodCurves> curves;
    std::vector<CurveComparison> comparisons;
};

struct AnalysisReport {
    std::uint64_t seed = 0;
    std::vector<ExperimentReport> experiments;
    Warnings warnings;

    const ExperimentReport& experiment(const std::string& id) const;
};

AnalysisReport analysis_report(std::span<const ResponseRecord> records,
                               const AnalysisConfig& config);

inline constexpr std::string_view kReportVersion = "attnlens-report/1";

// Writes summary.json, rt_tests.json, regression.json, curves.json,
// report.json and SVG plots into dir.
void write_report_bundle(const AnalysisReport& report, const std::filesystem::path& dir);
std::string report_to_json(const AnalysisReport& report);

} // namespace attnlens::stats
