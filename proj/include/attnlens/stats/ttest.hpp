#pragma once

#include <cstddef>
#include <span>
#include <string>

namespace attnlens::stats {

enum class Alternative { less, greater };

struct TTestResult {
    double t = 0.0;
    double df = 0.0;
    double p = 1.0; // one-tailed
    double mean_diff = 0.0;
    std::size_t n = 0;
    // Zero sample variance: t is reported as 0 and p as 1 instead of +-inf.
    bool degenerate = false;
};

// One-sample test of mean(diffs) against 0; n >= 2.
TTestResult t_test_one_tailed(std::span<const double> diffs, Alternative alt = Alternative::less);

// "***" below 0.005, "**" below 0.01, "*" below 0.05, else "".
std::string stars(double p);

} // namespace attnlens::stats
