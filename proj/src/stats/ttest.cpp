#include "attnlens/stats/ttest.hpp"

#include "attnlens/error.hpp"
#include "attnlens/stats/distributions.hpp"

#include <cmath>

namespace attnlens::stats {

TTestResult t_test_one_tailed(std::span<const double> diffs, Alternative alt) {
    const std::size_t n = diffs.size();
    if (n < 2) {
        fail(ErrorKind::input, "t-test needs at least two values");
    }
    double mean = 0.0;
    for (double d : diffs) {
        if (!std::isfinite(d)) {
            fail(ErrorKind::numeric, "t-test input is not finite");
        }
        mean += d;
    }
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double d : diffs) {
        ss += (d - mean) * (d - mean);
    }
    TTestResult r;
    r.n = n;
    r.df = static_cast<double>(n - 1);
    r.mean_diff = mean;
    const double se = std::sqrt(ss / r.df / static_cast<double>(n));
    if (!(se > 0.0) || se <= 1e-14 * std::abs(mean)) {
        r.degenerate = true;
        return r;
    }
    r.t = mean / se;
    const double lower = student_t_cdf(r.t, r.df);
    r.p = alt == Alternative::less ? lower : student_t_cdf(-r.t, r.df);
    return r;
}

std::string stars(double p) {
    if (p < 0.005) return "***";
    if (p < 0.01) return "**";
    if (p < 0.05) return "*";
    return "";
}

} // namespace attnlens::stats
