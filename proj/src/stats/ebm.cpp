#include "attnlens/stats/ebm.hpp"

#include "attnlens/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace attnlens::stats {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

struct Segment {
    std::size_t begin = 0;
    std::size_t end = 0; // exclusive
};

// Best split of bins [0, B) into at most max_leaves contiguous runs,
// maximizing sum G^2 / H over runs (the Newton gain).
std::vector<Segment> best_segments(const std::vector<double>& g, const std::vector<double>& h,
                                   std::size_t max_leaves) {
    const std::size_t b = g.size();
    std::vector<double> cg(b + 1, 0.0);
    std::vector<double> ch(b + 1, 0.0);
    for (std::size_t i = 0; i < b; ++i) {
        cg[i + 1] = cg[i] + g[i];
        ch[i + 1] = ch[i] + h[i];
    }
    auto gain = [&](std::size_t s, std::size_t e) {
        const double hh = ch[e] - ch[s];
        const double gg = cg[e] - cg[s];
        return hh > 0.0 ? gg * gg / hh : 0.0;
    };
    const std::size_t leaves = std::min(max_leaves, b);
    constexpr double neg = -std::numeric_limits<double>::infinity();
    // best[l][e]: best gain covering [0, e) with exactly l runs.
    std::vector<std::vector<double>> best(leaves + 1, std::vector<double>(b + 1, neg));
    std::vector<std::vector<std::size_t>> from(leaves + 1, std::vector<std::size_t>(b + 1, 0));
    best[0][0] = 0.0;
    for (std::size_t l = 1; l <= leaves; ++l) {
        for (std::size_t e = l; e <= b; ++e) {
            for (std::size_t s = l - 1; s < e; ++s) {
                if (best[l - 1][s] == neg) continue;
                const double v = best[l - 1][s] + gain(s, e);
                if (v > best[l][e] + 1e-12) {
                    best[l][e] = v;
                    from[l][e] = s;
                }
            }
        }
    }
    std::size_t l_best = 1;
    for (std::size_t l = 2; l <= leaves; ++l) {
        if (best[l][b] > best[l_best][b] + 1e-12) l_best = l;
    }
    std::vector<Segment> segs(l_best);
    std::size_t e = b;
    for (std::size_t l = l_best; l >= 1; --l) {
        const std::size_t s = from[l][e];
        segs[l - 1] = {s, e};
        e = s;
    }
    return segs;
}

std::vector<std::size_t> coarse_map(std::size_t bins, std::size_t coarse) {
    const std::size_t c = std::min(bins, coarse);
    std::vector<std::size_t> map(bins);
    for (std::size_t b = 0; b < bins; ++b) {
        map[b] = b * c / bins;
    }
    return map;
}

} // namespace

std::size_t Binning::bin_of(std::size_t feature, double value) const {
    const auto& c = cuts[feature];
    return static_cast<std::size_t>(std::upper_bound(c.begin(), c.end(), value) - c.begin());
}

Binning equal_frequency_bins(const FeatureMatrix& x, std::size_t max_bins) {
    if (max_bins < 2) {
        fail(ErrorKind::input, "binning needs at least two bins");
    }
    if (x.rows() == 0) {
        fail(ErrorKind::input, "cannot bin an empty matrix");
    }
    Binning out;
    out.features = x.columns();
    const std::size_t n = x.rows();
    for (std::size_t f = 0; f < x.cols(); ++f) {
        auto v = x.column(f);
        std::sort(v.begin(), v.end());
        std::vector<double> cuts;
        for (std::size_t k = 1; k < max_bins; ++k) {
            const double c = v[k * n / max_bins];
            if (c > v.front() && (cuts.empty() || c > cuts.back())) {
                cuts.push_back(c);
            }
        }
        std::vector<double> grid{v.front()};
        grid.insert(grid.end(), cuts.begin(), cuts.end());
        out.cuts.push_back(std::move(cuts));
        out.grid.push_back(std::move(grid));
    }
    return out;
}

void EbmConfig::validate() const {
    if (bins < 2 || rounds == 0 || max_leaves == 0 || pair_bins < 2) {
        fail(ErrorKind::input, "EBM needs bins >= 2, rounds > 0, max_leaves > 0, pair_bins >= 2");
    }
    if (!(learning_rate > 0.0 && learning_rate <= 1.0) || !(min_hessian >= 0.0)) {
        fail(ErrorKind::input, "EBM learning rate must lie in (0, 1]");
    }
}

double GamModel::contribution(std::size_t feature, double value) const {
    return shapes.at(feature)[binning.bin_of(feature, value)];
}

double GamModel::predict_logit(std::span<const double> row) const {
    if (row.size() != shapes.size()) {
        fail(ErrorKind::dimension, "row width does not match the model");
    }
    double z = intercept;
    for (std::size_t f = 0; f < shapes.size(); ++f) {
        z += shapes[f][binning.bin_of(f, row[f])];
    }
    for (const auto& p : pairs) {
        z += p.value(binning.bin_of(p.i, row[p.i]), binning.bin_of(p.j, row[p.j]));
    }
    return z;
}

double GamModel::predict_proba(std::span<const double> row) const {
    return sigmoid(predict_logit(row));
}

GamModel ebm_fit(const FeatureMatrix& x, std::span<const int> y, const EbmConfig& config,
                 const Binning* binning) {
    config.validate();
    const std::size_t n = x.rows();
    const std::size_t nf = x.cols();
    if (y.size() != n) {
        fail(ErrorKind::dimension, "EBM targets and rows differ in length");
    }
    if (n < 20) {
        fail(ErrorKind::input, "EBM needs at least 20 rows");
    }
    std::size_t positives = 0;
    for (int v : y) {
        if (v != 0 && v != 1) fail(ErrorKind::input, "EBM targets must be 0 or 1");
        positives += static_cast<std::size_t>(v);
    }
    if (positives == 0 || positives == n) {
        fail(ErrorKind::input, "EBM needs both outcome classes");
    }

    GamModel m;
    m.binning = binning ? *binning : equal_frequency_bins(x, config.bins);
    if (m.binning.features != x.columns()) {
        fail(ErrorKind::input, "binning features do not match the design matrix");
    }
    std::vector<std::vector<std::size_t>> bin(nf, std::vector<std::size_t>(n));
    for (std::size_t f = 0; f < nf; ++f) {
        for (std::size_t r = 0; r < n; ++r) {
            bin[f][r] = m.binning.bin_of(f, x(r, f));
        }
    }
    std::vector<bool> active(nf, true);
    for (std::size_t f = 0; f < nf; ++f) {
        m.shapes.emplace_back(m.binning.bins(f), 0.0);
        const std::size_t first = bin[f][0];
        if (std::all_of(bin[f].begin(), bin[f].end(), [&](std::size_t b) { return b == first; })) {
            active[f] = false;
            m.warnings.push_back("feature '" + x.columns()[f] +
                                 "' takes a single value; its shape function is zero");
        }
    }

    const double base = static_cast<double>(positives) / static_cast<double>(n);
    m.intercept = std::log(base / (1.0 - base));
    std::vector<double> score(n, m.intercept);

    auto gradients = [&](auto&& cell_of, std::size_t cells, std::vector<double>& g,
                         std::vector<double>& h) {
        g.assign(cells, 0.0);
        h.assign(cells, 0.0);
        for (std::size_t r = 0; r < n; ++r) {
            const double p = sigmoid(score[r]);
            const std::size_t c = cell_of(r);
            g[c] += static_cast<double>(y[r]) - p;
            h[c] += p * (1.0 - p);
        }
    };

    std::vector<double> g;
    std::vector<double> h;
    for (std::size_t round = 0; round < config.rounds; ++round) {
        for (std::size_t f = 0; f < nf; ++f) {
            if (!active[f]) continue;
            const auto& bf = bin[f];
            gradients([&](std::size_t r) { return bf[r]; }, m.binning.bins(f), g, h);
            std::vector<double> update(m.binning.bins(f), 0.0);
            for (const auto& s : best_segments(g, h, config.max_leaves)) {
                double gg = 0.0;
                double hh = 0.0;
                for (std::size_t b = s.begin; b < s.end; ++b) {
                    gg += g[b];
                    hh += h[b];
                }
                const double step = hh >= config.min_hessian ? config.learning_rate * gg / hh : 0.0;
                for (std::size_t b = s.begin; b < s.end; ++b) update[b] = step;
            }
            for (std::size_t b = 0; b < update.size(); ++b) m.shapes[f][b] += update[b];
            for (std::size_t r = 0; r < n; ++r) score[r] += update[bf[r]];
        }
    }

    if (config.n_pairs > 0) {
        struct Candidate {
            double gain;
            std::size_t i, j;
        };
        std::vector<Candidate> candidates;
        for (std::size_t i = 0; i < nf; ++i) {
            for (std::size_t j = i + 1; j < nf; ++j) {
                if (!active[i] || !active[j]) continue;
                const auto mi = coarse_map(m.binning.bins(i), config.pair_bins);
                const auto mj = coarse_map(m.binning.bins(j), config.pair_bins);
                const std::size_t cols = mj.back() + 1;
                gradients([&](std::size_t r) { return mi[bin[i][r]] * cols + mj[bin[j][r]]; },
                          (mi.back() + 1) * cols, g, h);
                double gain = 0.0;
                for (std::size_t c = 0; c < g.size(); ++c) {
                    if (h[c] >= config.min_hessian) gain += g[c] * g[c] / h[c];
                }
                candidates.push_back({gain, i, j});
            }
        }
        std::stable_sort(candidates.begin(), candidates.end(),
                         [](const Candidate& a, const Candidate& b) { return a.gain > b.gain; });
        for (std::size_t k = 0; k < std::min(config.n_pairs, candidates.size()); ++k) {
            PairTerm p;
            p.i = candidates[k].i;
            p.j = candidates[k].j;
            p.map_i = coarse_map(m.binning.bins(p.i), config.pair_bins);
            p.map_j = coarse_map(m.binning.bins(p.j), config.pair_bins);
            p.cols = p.map_j.back() + 1;
            p.table.assign((p.map_i.back() + 1) * p.cols, 0.0);
            m.pairs.push_back(std::move(p));
        }
        for (std::size_t round = 0; round < config.rounds; ++round) {
            for (auto& p : m.pairs) {
                auto cell = [&](std::size_t r) {
                    return p.map_i[bin[p.i][r]] * p.cols + p.map_j[bin[p.j][r]];
                };
                gradients(cell, p.table.size(), g, h);
                std::vector<double> update(p.table.size(), 0.0);
                for (std::size_t c = 0; c < update.size(); ++c) {
                    if (h[c] >= config.min_hessian) update[c] = config.learning_rate * g[c] / h[c];
                    p.table[c] += update[c];
                }
                for (std::size_t r = 0; r < n; ++r) score[r] += update[cell(r)];
            }
        }
    }

    // Center every term over the training rows and fold the means into the intercept.
    for (std::size_t f = 0; f < nf; ++f) {
        double mean = 0.0;
        for (std::size_t r = 0; r < n; ++r) mean += m.shapes[f][bin[f][r]];
        mean /= static_cast<double>(n);
        for (auto& v : m.shapes[f]) v -= mean;
        m.intercept += mean;
    }
    for (auto& p : m.pairs) {
        double mean = 0.0;
        for (std::size_t r = 0; r < n; ++r) mean += p.value(bin[p.i][r], bin[p.j][r]);
        mean /= static_cast<double>(n);
        for (auto& v : p.table) v -= mean;
        m.intercept += mean;
    }
    return m;
}

double accuracy(const GamModel& model, const FeatureMatrix& x, std::span<const int> y) {
    if (y.size() != x.rows() || y.empty()) {
        fail(ErrorKind::dimension, "accuracy needs one target per row");
    }
    std::size_t hits = 0;
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const int pred = model.predict_proba(x.row(r)) >= 0.5 ? 1 : 0;
        hits += pred == y[r] ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(y.size());
}

ResponseCurve response_curve(std::span<const GamModel> models, const std::string& feature) {
    if (models.empty()) {
        fail(ErrorKind::input, "response curve needs at least one model");
    }
    const auto& ref = models.front().binning;
    for (const auto& m : models) {
        if (!(m.binning == ref)) {
            fail(ErrorKind::input, "response curve models use different grids");
        }
    }
    const auto it = std::find(ref.features.begin(), ref.features.end(), feature);
    if (it == ref.features.end()) {
        fail(ErrorKind::not_found, "no feature '" + feature + "' in the models");
    }
    const auto f = static_cast<std::size_t>(it - ref.features.begin());
    ResponseCurve c;
    c.feature = feature;
    c.grid = ref.grid[f];
    const std::size_t k = models.size();
    for (std::size_t b = 0; b < c.grid.size(); ++b) {
        // Deviations from the first model keep identical models exact.
        const double pivot = models.front().shapes[f][b];
        double shift = 0.0;
        for (const auto& m : models) shift += m.shapes[f][b] - pivot;
        shift /= static_cast<double>(k);
        double ss = 0.0;
        for (const auto& m : models) {
            const double d = m.shapes[f][b] - pivot - shift;
            ss += d * d;
        }
        c.mean.push_back(pivot + shift);
        c.std.push_back(k > 1 ? std::sqrt(ss / static_cast<double>(k - 1)) : 0.0);
    }
    return c;
}

} // namespace attnlens::stats
