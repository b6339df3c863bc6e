#include "attnlens/stats/plots.hpp"

#include "attnlens/render/highlight.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace attnlens::stats {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kMargin = 50.0;
constexpr const char* kColors[] = {"#1f4e9c", "#d9822b", "#3b8e3b", "#888888", "#a23b72"};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string header(const std::string& title) {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(kWidth) + "\" height=\"" +
           fmt(kHeight) + "\" font-family=\"sans-serif\" font-size=\"12\">\n" +
           "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" + "<text x=\"" +
           fmt(kWidth / 2) + "\" y=\"20\" text-anchor=\"middle\">" + render::html_escape(title) +
           "</text>\n";
}

struct Range {
    double lo = 0.0;
    double hi = 1.0;
};

Range padded(double lo, double hi) {
    if (!(hi > lo)) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double pad = 0.05 * (hi - lo);
    return {lo - pad, hi + pad};
}

double map(double v, Range r, double a, double b) { return a + (v - r.lo) / (r.hi - r.lo) * (b - a); }

std::string y_axis(Range r) {
    std::string s = "<line x1=\"" + fmt(kMargin) + "\" y1=\"" + fmt(kMargin) + "\" x2=\"" +
                    fmt(kMargin) + "\" y2=\"" + fmt(kHeight - kMargin) + "\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double v = r.lo + (r.hi - r.lo) * k / 4.0;
        const double y = map(v, r, kHeight - kMargin, kMargin);
        s += "<text x=\"" + fmt(kMargin - 4) + "\" y=\"" + fmt(y + 4) + "\" text-anchor=\"end\">" +
             fmt(v) + "</text>\n";
    }
    return s;
}

} // namespace

std::string violin_svg(const std::string& title, const std::vector<NamedSeries>& series) {
    std::string s = header(title);
    double lo = 0.0, hi = 0.0;
    bool any = false;
    for (const auto& ns : series) {
        for (double v : ns.values) {
            lo = any ? std::min(lo, v) : v;
            hi = any ? std::max(hi, v) : v;
            any = true;
        }
    }
    lo = std::min(lo, 0.0);
    hi = std::max(hi, 0.0);
    const Range r = padded(lo, hi);
    s += y_axis(r);
    const double zero = map(0.0, r, kHeight - kMargin, kMargin);
    s += "<line x1=\"" + fmt(kMargin) + "\" y1=\"" + fmt(zero) + "\" x2=\"" + fmt(kWidth - kMargin) +
         "\" y2=\"" + fmt(zero) + "\" stroke=\"#bbbbbb\" stroke-dasharray=\"4 3\"/>\n";
    const double slot = (kWidth - 2 * kMargin) / std::max<std::size_t>(series.size(), 1);
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& v = series[k].values;
        const double cx = kMargin + slot * (k + 0.5);
        s += "<text x=\"" + fmt(cx) + "\" y=\"" + fmt(kHeight - kMargin + 18) +
             "\" text-anchor=\"middle\">" + render::html_escape(series[k].name) + "</text>\n";
        if (v.empty()) continue;
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        double var = 0.0;
        for (double x : v) var += (x - mean) * (x - mean);
        const double sd = v.size() > 1 ? std::sqrt(var / (v.size() - 1)) : 0.0;
        // Silverman's rule, floored so a constant series still draws.
        const double bw = std::max(1.06 * sd * std::pow(static_cast<double>(v.size()), -0.2),
                                   0.02 * (r.hi - r.lo));
        constexpr int kPoints = 48;
        std::vector<double> ys(kPoints), dens(kPoints);
        double peak = 0.0;
        for (int i = 0; i < kPoints; ++i) {
            ys[i] = r.lo + (r.hi - r.lo) * i / (kPoints - 1.0);
            double d = 0.0;
            for (double x : v) d += std::exp(-0.5 * std::pow((ys[i] - x) / bw, 2));
            dens[i] = d;
            peak = std::max(peak, d);
        }
        const double half = 0.4 * slot;
        std::string pts;
        for (int i = 0; i < kPoints; ++i) {
            pts += fmt(cx + half * dens[i] / peak) + "," + fmt(map(ys[i], r, kHeight - kMargin, kMargin)) + " ";
        }
        for (int i = kPoints - 1; i >= 0; --i) {
            pts += fmt(cx - half * dens[i] / peak) + "," + fmt(map(ys[i], r, kHeight - kMargin, kMargin)) + " ";
        }
        s += "<polygon points=\"" + pts + "\" fill=\"" + kColors[k % 5] +
             "\" fill-opacity=\"0.35\" stroke=\"" + kColors[k % 5] + "\"/>\n";
        auto sorted = v;
        std::sort(sorted.begin(), sorted.end());
        const std::size_t m = sorted.size() / 2;
        const double median = sorted.size() % 2 ? sorted[m] : 0.5 * (sorted[m - 1] + sorted[m]);
        const double my = map(median, r, kHeight - kMargin, kMargin);
        s += "<line x1=\"" + fmt(cx - half / 2) + "\" y1=\"" + fmt(my) + "\" x2=\"" + fmt(cx + half / 2) +
             "\" y2=\"" + fmt(my) + "\" stroke=\"black\" stroke-width=\"2\"/>\n";
    }
    return s + "</svg>\n";
}

std::string curves_svg(const std::string& title, const std::vector<std::string>& names,
                       const std::vector<ResponseCurve>& curves) {
    std::string s = header(title);
    double xlo = 0.0, xhi = 0.0, ylo = 0.0, yhi = 0.0;
    bool any = false;
    for (const auto& c : curves) {
        for (std::size_t i = 0; i < c.grid.size(); ++i) {
            const double a = c.mean[i] - c.std[i];
            const double b = c.mean[i] + c.std[i];
            xlo = any ? std::min(xlo, c.grid[i]) : c.grid[i];
            xhi = any ? std::max(xhi, c.grid[i]) : c.grid[i];
            ylo = any ? std::min(ylo, a) : a;
            yhi = any ? std::max(yhi, b) : b;
            any = true;
        }
    }
    const Range rx = padded(xlo, xhi);
    const Range ry = padded(ylo, yhi);
    s += y_axis(ry);
    s += "<text x=\"" + fmt(kMargin) + "\" y=\"" + fmt(kHeight - kMargin + 18) + "\">" + fmt(xlo) +
         "</text>\n<text x=\"" + fmt(kWidth - kMargin) + "\" y=\"" + fmt(kHeight - kMargin + 18) +
         "\" text-anchor=\"end\">" + fmt(xhi) + "</text>\n";
    auto px = [&](double x) { return map(x, rx, kMargin, kWidth - kMargin); };
    auto py = [&](double y) { return map(y, ry, kHeight - kMargin, kMargin); };
    for (std::size_t k = 0; k < curves.size(); ++k) {
        const auto& c = curves[k];
        const char* color = kColors[k % 5];
        std::string band, line;
        for (std::size_t i = 0; i < c.grid.size(); ++i) {
            band += fmt(px(c.grid[i])) + "," + fmt(py(c.mean[i] + c.std[i])) + " ";
            line += fmt(px(c.grid[i])) + "," + fmt(py(c.mean[i])) + " ";
        }
        for (std::size_t i = c.grid.size(); i-- > 0;) {
            band += fmt(px(c.grid[i])) + "," + fmt(py(c.mean[i] - c.std[i])) + " ";
        }
        s += "<polygon points=\"" + band + "\" fill=\"" + color + "\" fill-opacity=\"0.12\" stroke=\"none\"/>\n";
        s += "<polyline points=\"" + line + "\" fill=\"none\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
        s += "<text x=\"" + fmt(kWidth - kMargin - 4) + "\" y=\"" + fmt(kMargin + 14.0 * k) +
             "\" text-anchor=\"end\" fill=\"" + color + "\">" +
             render::html_escape(k < names.size() ? names[k] : c.feature) + "</text>\n";
    }
    return s + "</svg>\n";
}

} // namespace attnlens::stats
