#pragma once

#include "attnlens/stats/ebm.hpp"

#include <string>
#include <vector>

namespace attnlens::stats {

struct NamedSeries {
    std::string name;
    std::vector<double> values;
};

// Violin-style density outlines with a median tick, one per series.
std::string violin_svg(const std::string& title, const std::vector<NamedSeries>& series);

// Mean curves with a +-1 std band.
std::string curves_svg(const std::string& title, const std::vector<std::string>& names,
                       const std::vector<ResponseCurve>& curves);

} // namespace attnlens::stats
