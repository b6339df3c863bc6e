#include "attnlens/stats/analysis.hpp"

#include "attnlens/error.hpp"
#include "attnlens/rng.hpp"
#include "attnlens/stats/plots.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <numeric>
#include <thread>

namespace attnlens::stats {

using explain::Method;
using nlohmann::ordered_json;

namespace {

void warn(Warnings* w, std::string msg) {
    if (w) w->push_back(std::move(msg));
}

double mean_of(const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::vector<std::string> sorted_participants(std::span<const ResponseRecord> records) {
    std::vector<std::string> ids;
    for (const auto& r : records) ids.push_back(r.participant);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
}

bool is_method_column(const std::string& c) { return c.rfind("method_", 0) == 0; }

// Runs fn(i) for i in [0, n) on a small pool; results land by index so the
// outcome does not depend on scheduling.
template <class Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

ordered_json ttest_json(const std::optional<TTestResult>& t) {
    if (!t) return nullptr;
    return {{"t", t->t},       {"df", t->df},   {"p", t->p},
            {"mean_diff", t->mean_diff}, {"n", t->n}, {"degenerate", t->degenerate},
            {"stars", stars(t->p)}};
}

ordered_json curve_json(const ResponseCurve& c) {
    return {{"feature", c.feature}, {"grid", c.grid}, {"mean", c.mean}, {"std", c.std}};
}

ordered_json summary_json(const ExperimentReport& e) {
    ordered_json rows = ordered_json::array();
    for (const auto& r : e.summary) {
        rows.push_back({{"method", explain::to_string(r.method)},
                        {"n", r.n},
                        {"mean_rt_s", r.mean_rt},
                        {"accuracy", r.accuracy}});
    }
    return rows;
}

ordered_json rt_tests_json(const ExperimentReport& e) {
    ordered_json out = ordered_json::array();
    for (const auto& m : e.rt_tests) {
        ordered_json diffs = ordered_json::array();
        for (const auto& d : m.diffs) diffs.push_back({{"participant", d.participant}, {"diff", d.diff}});
        out.push_back({{"method", explain::to_string(m.method)},
                       {"reference", "RANDOM"},
                       {"alternative", "less"},
                       {"test", ttest_json(m.test)},
                       {"participants", diffs}});
    }
    return out;
}

ordered_json regression_json(const ExperimentReport& e) {
    ordered_json coefs = ordered_json::array();
    for (const auto& c : e.regression.coefficients) {
        coefs.push_back({{"column", c.column},
                         {"mean", c.mean},
                         {"median", c.median},
                         {"values", c.values},
                         {"test", ttest_json(c.test)}});
    }
    ordered_json fits = ordered_json::array();
    for (const auto& f : e.regression.fits) {
        fits.push_back({{"participant", f.participant},
                        {"n", f.fit.n},
                        {"intercept", f.fit.intercept},
                        {"coefficients", f.fit.coefficients},
                        {"r_squared", f.fit.r_squared},
                        {"residual_variance", f.fit.residual_variance}});
    }
    return {{"columns", e.regression.fits.empty() ? ordered_json::array()
                                                   : ordered_json(e.regression.fits[0].fit.columns)},
            {"mean_r_squared", e.regression.mean_r_squared},
            {"coefficients", coefs},
            {"participants", fits}};
}

ordered_json curves_json(const ExperimentReport& e) {
    ordered_json methods = ordered_json::array();
    for (const auto& m : e.curves) {
        ordered_json curves = ordered_json::array();
        for (const auto& c : m.curves) curves.push_back(curve_json(c));
        methods.push_back({{"method", explain::to_string(m.method)},
                           {"n_models", m.n_models},
                           {"mean_train_accuracy", m.mean_train_accuracy},
                           {"curves", curves}});
    }
    ordered_json comps = ordered_json::array();
    for (const auto& c : e.comparisons) {
        comps.push_back({{"method", explain::to_string(c.method)},
                         {"reference", "RANDOM"},
                         {"feature", c.feature},
                         {"high_region_difference", c.high_region_difference}});
    }
    return {{"methods", methods}, {"comparisons", comps}};
}

template <class F>
ordered_json per_experiment(const AnalysisReport& report, std::string_view artifact, F&& body) {
    ordered_json exps = ordered_json::array();
    for (const auto& e : report.experiments) {
        exps.push_back({{"experiment_id", e.experiment_id}, {std::string(artifact), body(e)}});
    }
    return {{"version", kReportVersion}, {"seed", report.seed}, {"experiments", exps}};
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) {
        fail(ErrorKind::io, "cannot write " + path.string());
    }
}

} // namespace

std::vector<DescriptiveRow> descriptive_summary(std::span<const ResponseRecord> records,
                                                Warnings* warnings) {
    if (records.empty()) {
        fail(ErrorKind::input, "descriptive summary needs records");
    }
    std::vector<std::string> exps;
    for (const auto& r : records) exps.push_back(r.experiment_id);
    std::sort(exps.begin(), exps.end());
    exps.erase(std::unique(exps.begin(), exps.end()), exps.end());

    std::vector<DescriptiveRow> rows;
    for (const auto& e : exps) {
        for (Method m : explain::kDisplayMethods) {
            DescriptiveRow row{e, m, 0, 0.0, 0.0};
            for (const auto& r : records) {
                if (r.experiment_id != e || r.method != m) continue;
                ++row.n;
                row.mean_rt += r.reaction_time_s;
                row.accuracy += r.accurate ? 1.0 : 0.0;
            }
            if (row.n == 0) {
                warn(warnings, "no records for " + e + " / " + std::string(explain::to_string(m)));
                continue;
            }
            row.mean_rt /= static_cast<double>(row.n);
            row.accuracy /= static_cast<double>(row.n);
            rows.push_back(row);
        }
    }
    return rows;
}

std::vector<ParticipantDiff> paired_diff_by_participant(std::span<const ResponseRecord> records,
                                                        Method method, Warnings* warnings) {
    std::vector<ParticipantDiff> out;
    for (const auto& p : sorted_participants(records)) {
        double sum_m = 0.0, sum_r = 0.0;
        std::size_t n_m = 0, n_r = 0;
        for (const auto& r : records) {
            if (r.participant != p) continue;
            if (r.method == method) {
                sum_m += r.reaction_time_s;
                ++n_m;
            } else if (r.method == Method::random) {
                sum_r += r.reaction_time_s;
                ++n_r;
            }
        }
        if (n_m == 0 || n_r == 0) {
            warn(warnings, "participant " + p + " lacks " + std::string(explain::to_string(method)) +
                               " or RANDOM trials");
            continue;
        }
        out.push_back({p, sum_m / static_cast<double>(n_m) - sum_r / static_cast<double>(n_r)});
    }
    return out;
}

RegressionSummary per_participant_regression(std::span<const ResponseRecord> records,
                                             std::size_t n_positions, Warnings* warnings) {
    RegressionSummary out;
    for (const auto& p : sorted_participants(records)) {
        std::vector<ResponseRecord> mine;
        for (const auto& r : records) {
            if (r.participant == p) mine.push_back(r);
        }
        const auto data = regression_features(mine, n_positions);
        try {
            out.fits.push_back({p, ols_fit(data.x, data.y)});
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::estimation) throw;
            warn(warnings, "participant " + p + " skipped: " + e.what());
        }
    }
    if (out.fits.empty()) {
        return out;
    }
    const auto& cols = out.fits.front().fit.columns;
    for (std::size_t c = 0; c < cols.size(); ++c) {
        CoefficientSummary s;
        s.column = cols[c];
        for (const auto& f : out.fits) s.values.push_back(f.fit.coefficients[c]);
        s.mean = mean_of(s.values);
        s.median = median_of(s.values);
        if (is_method_column(s.column) && s.values.size() >= 2) {
            s.test = t_test_one_tailed(s.values, Alternative::less);
        }
        out.coefficients.push_back(std::move(s));
    }
    double r2 = 0.0;
    for (const auto& f : out.fits) r2 += f.fit.r_squared;
    out.mean_r_squared = r2 / static_cast<double>(out.fits.size());
    return out;
}

std::vector<ResponseRecord> balanced_subsample(std::span<const ResponseRecord> records,
                                               std::uint64_t seed) {
    std::vector<std::size_t> right, wrong;
    for (std::size_t i = 0; i < records.size(); ++i) {
        (records[i].accurate ? right : wrong).push_back(i);
    }
    if (right.empty() || wrong.empty()) {
        fail(ErrorKind::sampling, "balanced subsampling needs both accurate and inaccurate answers");
    }
    auto& major = right.size() >= wrong.size() ? right : wrong;
    const auto& minor = right.size() >= wrong.size() ? wrong : right;
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(major));
    major.resize(minor.size());
    std::vector<std::size_t> keep = minor;
    keep.insert(keep.end(), major.begin(), major.end());
    std::sort(keep.begin(), keep.end());
    std::vector<ResponseRecord> out;
    out.reserve(keep.size());
    for (auto i : keep) out.push_back(records[i]);
    return out;
}

const ExperimentReport& AnalysisReport::experiment(const std::string& id) const {
    for (const auto& e : experiments) {
        if (e.experiment_id == id) return e;
    }
    fail(ErrorKind::not_found, "report has no experiment '" + id + "'");
}

AnalysisReport analysis_report(std::span<const ResponseRecord> records,
                               const AnalysisConfig& config) {
    config.ebm.validate();
    if (config.iterations == 0) {
        fail(ErrorKind::input, "analysis needs at least one subsampling iteration");
    }
    AnalysisReport report;
    report.seed = config.seed;
    if (records.empty()) {
        report.warnings.push_back("no records to analyze");
        return report;
    }
    std::vector<std::string> exps;
    for (const auto& r : records) exps.push_back(r.experiment_id);
    std::sort(exps.begin(), exps.end());
    exps.erase(std::unique(exps.begin(), exps.end()), exps.end());

    for (std::size_t ei = 0; ei < exps.size(); ++ei) {
        const auto& id = exps[ei];
        auto& w = report.warnings;
        ExperimentReport e;
        e.experiment_id = id;
        std::vector<ResponseRecord> all;
        for (const auto& r : records) {
            if (r.experiment_id == id) all.push_back(r);
        }
        e.n_records = all.size();
        const auto valid = valid_records(all);
        e.n_valid = valid.size();
        e.n_participants = sorted_participants(valid).size();
        if (e.n_valid < e.n_records) {
            w.push_back(id + ": " + std::to_string(e.n_records - e.n_valid) +
                        " records with flagged reaction times left out");
        }
        if (valid.empty()) {
            report.experiments.push_back(std::move(e));
            continue;
        }
        e.summary = descriptive_summary(valid, &w);

        for (Method m : {Method::cls_a, Method::lime, Method::shap}) {
            MethodTest t{m, paired_diff_by_participant(valid, m, &w), std::nullopt};
            if (t.diffs.size() >= 2) {
                std::vector<double> d;
                for (const auto& x : t.diffs) d.push_back(x.diff);
                t.test = t_test_one_tailed(d, Alternative::less);
            } else {
                w.push_back(id + ": too few participants to test " +
                            std::string(explain::to_string(m)));
            }
            e.rt_tests.push_back(std::move(t));
        }

        e.regression = per_participant_regression(valid, config.n_positions, &w);

        // One binning per experiment so all method curves share a grid.
        const auto full = classification_features(valid);
        const Binning binning = equal_frequency_bins(full.x, config.ebm.bins);
        for (std::size_t mi = 0; mi < explain::kDisplayMethods.size(); ++mi) {
            const Method m = explain::kDisplayMethods[mi];
            std::vector<ResponseRecord> subset;
            for (const auto& r : valid) {
                if (r.method == m) subset.push_back(r);
            }
            std::vector<GamModel> models(config.iterations);
            std::vector<double> train_acc(config.iterations, 0.0);
            try {
                parallel_for(config.iterations, config.threads, [&](std::size_t it) {
                    const auto sample =
                        balanced_subsample(subset, derive_seed(config.seed, ei * 16 + mi, it));
                    const auto data = classification_features(sample);
                    models[it] = ebm_fit(data.x, data.y, config.ebm, &binning);
                    train_acc[it] = accuracy(models[it], data.x, data.y);
                });
            } catch (const Error& err) {
                w.push_back(id + ": no accuracy model for " + std::string(explain::to_string(m)) +
                            ": " + err.what());
                continue;
            }
            MethodCurves mc;
            mc.method = m;
            mc.n_models = models.size();
            mc.mean_train_accuracy = mean_of(train_acc);
            for (const auto& f : binning.features) {
                mc.curves.push_back(response_curve(models, f));
            }
            e.curves.push_back(std::move(mc));
        }

        const auto random_it = std::find_if(e.curves.begin(), e.curves.end(),
                                            [](const MethodCurves& c) { return c.method == Method::random; });
        if (random_it != e.curves.end()) {
            const MethodCurves random = *random_it;
            for (const auto& mc : e.curves) {
                if (mc.method == Method::random) continue;
                for (std::size_t f = 0; f < mc.curves.size(); ++f) {
                    const auto& a = mc.curves[f];
                    const auto& b = random.curves[f];
                    const auto g = a.grid.size();
                    auto start = static_cast<std::size_t>(
                        std::floor(config.high_probability_quantile * static_cast<double>(g)));
                    start = std::min(start, g - 1);
                    double diff = 0.0;
                    for (std::size_t k = start; k < g; ++k) diff += a.mean[k] - b.mean[k];
                    e.comparisons.push_back({mc.method, a.feature, diff / static_cast<double>(g - start)});
                }
            }
        }
        report.experiments.push_back(std::move(e));
    }
    return report;
}

std::string report_to_json(const AnalysisReport& report) {
    ordered_json exps = ordered_json::array();
    for (const auto& e : report.experiments) {
        exps.push_back({{"experiment_id", e.experiment_id},
                        {"n_records", e.n_records},
                        {"n_valid", e.n_valid},
                        {"n_participants", e.n_participants},
                        {"summary", summary_json(e)},
                        {"rt_tests", rt_tests_json(e)},
                        {"regression", regression_json(e)},
                        {"accuracy_models", curves_json(e)}});
    }
    ordered_json j = {{"version", kReportVersion},
                      {"seed", report.seed},
                      {"experiments", exps},
                      {"warnings", report.warnings}};
    return j.dump(2);
}

void write_report_bundle(const AnalysisReport& report, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        fail(ErrorKind::io, "cannot create report directory " + dir.string());
    }
    write_file(dir / "report.json", report_to_json(report) + "\n");
    write_file(dir / "summary.json", per_experiment(report, "summary", summary_json).dump(2) + "\n");
    write_file(dir / "rt_tests.json", per_experiment(report, "rt_tests", rt_tests_json).dump(2) + "\n");
    write_file(dir / "regression.json",
               per_experiment(report, "regression", regression_json).dump(2) + "\n");
    write_file(dir / "curves.json", per_experiment(report, "accuracy_models", curves_json).dump(2) + "\n");

    for (const auto& e : report.experiments) {
        std::vector<NamedSeries> diffs;
        for (const auto& t : e.rt_tests) {
            NamedSeries s{std::string(explain::to_string(t.method)) + " " +
                              (t.test ? stars(t.test->p) : std::string()),
                          {}};
            for (const auto& d : t.diffs) s.values.push_back(d.diff);
            diffs.push_back(std::move(s));
        }
        write_file(dir / ("rt_diffs_" + e.experiment_id + ".svg"),
                   violin_svg(e.experiment_id + ": mean RT difference vs RANDOM (s)", diffs));

        std::vector<NamedSeries> coefs;
        for (const auto& c : e.regression.coefficients) {
            if (!is_method_column(c.column)) continue;
            coefs.push_back({c.column + " " + (c.test ? stars(c.test->p) : std::string()), c.values});
        }
        write_file(dir / ("coefficients_" + e.experiment_id + ".svg"),
                   violin_svg(e.experiment_id + ": per-participant RT coefficients", coefs));

        if (e.curves.empty()) continue;
        for (std::size_t f = 0; f < e.curves.front().curves.size(); ++f) {
            std::vector<std::string> names;
            std::vector<ResponseCurve> curves;
            for (const auto& mc : e.curves) {
                names.emplace_back(explain::to_string(mc.method));
                curves.push_back(mc.curves[f]);
            }
            const auto& feature = curves.front().feature;
            write_file(dir / ("curve_" + e.experiment_id + "_" + feature + ".svg"),
                       curves_svg(e.experiment_id + ": accuracy response to " + feature, names, curves));
        }
    }
}

} // namespace attnlens::stats
