#include "attnlens/explain/explainers.hpp"

#include "attnlens/error.hpp"
#include "attnlens/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <iterator>
#include <cctype>
#include <cmath>
#include <numeric>
#include <unordered_map>

namespace attnlens::explain {

namespace {

int predicted_class(const std::array<double, 2>& p) { return p[1] > p[0] ? 1 : 0; }

void require_words(const TokenSequence& seq) {
    if (seq.word_count() == 0) {
        fail(ErrorKind::input, "sequence has no words to explain");
    }
}

int resolve_target(const Classifier& clf, const TokenSequence& seq, std::optional<int> target) {
    if (target) {
        if (*target != 0 && *target != 1) {
            fail(ErrorKind::input, "target class must be 0 or 1");
        }
        return *target;
    }
    return predicted_class(clf.predict_proba(seq));
}

// Sums token weights within each word span; the CLS position is never part of
// a span and is therefore dropped.
std::vector<double> aggregate_to_words(std::span<const double> token_weights,
                                       const TokenSequence& seq, bool renormalize) {
    std::vector<double> words(seq.word_count(), 0.0);
    for (std::size_t w = 0; w < seq.word_count(); ++w) {
        const auto& span = seq.word_spans[w];
        for (std::size_t t = span.first; t <= span.last; ++t) {
            words[w] += token_weights[t];
        }
    }
    if (renormalize) {
        const double total = std::accumulate(words.begin(), words.end(), 0.0);
        if (total > 0.0) {
            for (double& x : words) {
                x /= total;
            }
        } else {
            std::fill(words.begin(), words.end(), 1.0 / static_cast<double>(words.size()));
        }
    }
    return words;
}

void check_attention(const model::AttentionRecord& attention, const TokenSequence& seq) {
    seq.validate();
    if (attention.n_layers() == 0 || attention.n_heads() == 0) {
        fail(ErrorKind::input, "attention record is empty");
    }
    if (attention.length() != seq.length()) {
        fail(ErrorKind::dimension, "attention length does not match the token sequence");
    }
}

// Target-class probability of the text with only the words in `keep` visible.
class CoalitionValue {
public:
    CoalitionValue(const Classifier& clf, const TokenSequence& seq, int target,
                   model::TokenId mask_token)
        : clf_(clf), seq_(seq), target_(static_cast<std::size_t>(target)), mask_(mask_token) {}

    double operator()(const std::vector<bool>& keep) {
        std::string key(keep.size(), '0');
        for (std::size_t i = 0; i < keep.size(); ++i) {
            if (keep[i]) {
                key[i] = '1';
            }
        }
        auto it = cache_.find(key);
        if (it != cache_.end()) {
            return it->second;
        }
        const double v = clf_.predict_proba(model::mask_words(seq_, keep, mask_))[target_];
        cache_.emplace(std::move(key), v);
        return v;
    }

private:
    const Classifier& clf_;
    const TokenSequence& seq_;
    std::size_t target_;
    model::TokenId mask_;
    std::unordered_map<std::string, double> cache_;
};

std::vector<double> ranks(const std::vector<double>& x) {
    std::vector<std::size_t> idx(x.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> r(x.size());
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) {
            ++j;
        }
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t t = i; t <= j; ++t) {
            r[idx[t]] = avg;
        }
        i = j + 1;
    }
    return r;
}

std::optional<double> pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) {
        return std::nullopt;
    }
    return sab / std::sqrt(saa * sbb);
}

} // namespace

std::string_view to_string(Method m) {
    switch (m) {
    case Method::cls_a: return "CLS_A";
    case Method::lime: return "LIME";
    case Method::shap: return "SHAP";
    case Method::shap_exact: return "SHAP_EXACT";
    case Method::random: return "RANDOM";
    }
    return "UNKNOWN";
}

Method method_from_string(std::string_view name) {
    std::string key;
    for (char c : name) {
        key.push_back(c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    }
    for (Method m : {Method::cls_a, Method::lime, Method::shap, Method::shap_exact, Method::random}) {
        if (key == to_string(m)) {
            return m;
        }
    }
    fail(ErrorKind::input, "unknown method '" + std::string(name) + "'");
}

ImportanceVector cls_a_from_attention(const model::AttentionRecord& attention,
                                      const TokenSequence& seq, int target_class,
                                      ClsAOptions opts) {
    check_attention(attention, seq);
    require_words(seq);
    const std::size_t last = attention.n_layers() - 1;
    const std::size_t L = attention.length();
    std::vector<double> mean(L, 0.0);
    for (std::size_t h = 0; h < attention.n_heads(); ++h) {
        const auto row = attention.row(last, h, 0);
        for (std::size_t j = 0; j < L; ++j) {
            mean[j] += row[j];
        }
    }
    for (double& x : mean) {
        x /= static_cast<double>(attention.n_heads());
    }
    return {Method::cls_a, aggregate_to_words(mean, seq, opts.renormalize), false, target_class};
}

ImportanceVector cls_a(const Transformer& model, const TokenSequence& seq, ClsAOptions opts) {
    require_words(seq);
    const auto out = model.forward(seq);
    return cls_a_from_attention(out.attention, seq, out.predicted_class, opts);
}

ImportanceVector cls_a_fallback_from_attention(const model::AttentionRecord& attention,
                                               const TokenSequence& seq, int target_class,
                                               ClsAOptions opts) {
    check_attention(attention, seq);
    require_words(seq);
    const std::size_t last = attention.n_layers() - 1;
    const std::size_t L = attention.length();
    std::vector<double> received(L, 0.0);
    for (std::size_t h = 0; h < attention.n_heads(); ++h) {
        for (std::size_t i = 0; i < L; ++i) {
            const auto row = attention.row(last, h, i);
            for (std::size_t j = 0; j < L; ++j) {
                received[j] += row[j];
            }
        }
    }
    const double denom = static_cast<double>(attention.n_heads() * L);
    for (double& x : received) {
        x /= denom;
    }
    return {Method::cls_a, aggregate_to_words(received, seq, opts.renormalize), false,
            target_class};
}

ImportanceVector cls_a_fallback(const Transformer& model, const TokenSequence& seq,
                                ClsAOptions opts) {
    require_words(seq);
    const auto out = model.forward(seq);
    return cls_a_fallback_from_attention(out.attention, seq, out.predicted_class, opts);
}

ImportanceVector lime_explain(const Classifier& clf, const TokenSequence& seq,
                              const LimeConfig& cfg, std::optional<int> target_class) {
    require_words(seq);
    const std::size_t n = seq.word_count();
    if (cfg.n_samples < n + 1) {
        fail(ErrorKind::input, "LIME needs at least word count + 1 samples");
    }
    const double width = cfg.kernel_width.value_or(0.25 * std::sqrt(static_cast<double>(n)));
    if (!(width > 0.0)) {
        fail(ErrorKind::input, "LIME kernel width must be positive");
    }
    if (cfg.ridge_lambda < 0.0) {
        fail(ErrorKind::input, "ridge lambda must be nonnegative");
    }
    const int target = resolve_target(clf, seq, target_class);
    CoalitionValue value(clf, seq, target, cfg.mask_token);

    Rng rng(cfg.seed);
    const std::size_t m = cfg.n_samples;
    Eigen::MatrixXd X(m, n + 1);
    Eigen::VectorXd y(m);
    Eigen::VectorXd w(m);
    std::vector<bool> keep(n, true);
    bool all_same = true;
    std::vector<bool> first;
    for (std::size_t s = 0; s < m; ++s) {
        std::size_t kept = 0;
        for (std::size_t j = 0; j < n; ++j) {
            keep[j] = s == 0 ? true : rng.bernoulli(0.5);
            kept += keep[j] ? 1 : 0;
        }
        if (s == 0) {
            first = keep;
        } else if (keep != first) {
            all_same = false;
        }
        X(static_cast<Eigen::Index>(s), 0) = 1.0;
        for (std::size_t j = 0; j < n; ++j) {
            X(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(j + 1)) = keep[j] ? 1.0 : 0.0;
        }
        // Cosine distance between the mask and the all-ones vector.
        const double distance =
            kept == 0 ? 1.0 : 1.0 - std::sqrt(static_cast<double>(kept) / static_cast<double>(n));
        w(static_cast<Eigen::Index>(s)) = std::exp(-(distance * distance) / (width * width));
        y(static_cast<Eigen::Index>(s)) = value(keep);
    }
    if (all_same) {
        fail(ErrorKind::estimation, "LIME design is degenerate: every sampled mask is identical");
    }

    Eigen::MatrixXd gram = X.transpose() * w.asDiagonal() * X;
    for (std::size_t j = 1; j <= n; ++j) {
        gram(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)) += cfg.ridge_lambda;
    }
    const Eigen::VectorXd rhs = X.transpose() * (w.asDiagonal() * y);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
        fail(ErrorKind::estimation, "LIME surrogate system is singular");
    }
    const Eigen::VectorXd beta = ldlt.solve(rhs);
    if (!beta.allFinite()) {
        fail(ErrorKind::estimation, "LIME surrogate system is singular");
    }
    std::vector<double> scores(n);
    for (std::size_t j = 0; j < n; ++j) {
        scores[j] = beta(static_cast<Eigen::Index>(j + 1));
    }
    return {Method::lime, std::move(scores), true, target};
}

ImportanceVector shap_permutation(const Classifier& clf, const TokenSequence& seq,
                                  const ShapConfig& cfg, std::optional<int> target_class) {
    require_words(seq);
    if (cfg.n_permutations < 1) {
        fail(ErrorKind::input, "n_permutations must be at least 1");
    }
    const std::size_t n = seq.word_count();
    const int target = resolve_target(clf, seq, target_class);
    CoalitionValue value(clf, seq, target, cfg.mask_token);

    Rng rng(cfg.seed);
    std::vector<double> phi(n, 0.0);
    std::vector<std::size_t> order(n);
    std::vector<bool> keep(n);
    for (std::size_t p = 0; p < cfg.n_permutations; ++p) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        rng.shuffle(std::span<std::size_t>(order));
        std::fill(keep.begin(), keep.end(), false);
        double prev = value(keep);
        for (std::size_t idx : order) {
            keep[idx] = true;
            const double cur = value(keep);
            phi[idx] += cur - prev;
            prev = cur;
        }
    }
    for (double& x : phi) {
        x /= static_cast<double>(cfg.n_permutations);
    }
    return {Method::shap, std::move(phi), true, target};
}

ImportanceVector shap_exact(const Classifier& clf, const TokenSequence& seq,
                            std::optional<int> target_class, model::TokenId mask_token) {
    require_words(seq);
    const std::size_t n = seq.word_count();
    if (n > kMaxExactShapWords) {
        fail(ErrorKind::size, "exact Shapley is limited to " + std::to_string(kMaxExactShapWords) +
                                  " words, got " + std::to_string(n));
    }
    const int target = resolve_target(clf, seq, target_class);
    CoalitionValue value(clf, seq, target, mask_token);

    const std::size_t count = std::size_t{1} << n;
    std::vector<double> f(count);
    std::vector<bool> keep(n);
    for (std::size_t s = 0; s < count; ++s) {
        for (std::size_t j = 0; j < n; ++j) {
            keep[j] = ((s >> j) & 1U) != 0;
        }
        f[s] = value(keep);
    }
    // weight(|S|) = |S|! (n - |S| - 1)! / n!
    std::vector<double> weight(n);
    for (std::size_t s = 0; s < n; ++s) {
        weight[s] = std::exp(std::lgamma(static_cast<double>(s) + 1.0) +
                             std::lgamma(static_cast<double>(n - s)) -
                             std::lgamma(static_cast<double>(n) + 1.0));
    }
    std::vector<double> phi(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t bit = std::size_t{1} << i;
        for (std::size_t s = 0; s < count; ++s) {
            if ((s & bit) != 0) {
                continue;
            }
            const auto size = static_cast<std::size_t>(std::popcount(s));
            phi[i] += weight[size] * (f[s | bit] - f[s]);
        }
    }
    return {Method::shap_exact, std::move(phi), true, target};
}

ImportanceVector random_baseline(const TokenSequence& seq, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> scores(seq.word_count());
    for (double& s : scores) {
        s = rng.uniform();
    }
    return {Method::random, std::move(scores), false, -1};
}

ImportanceVector truncate_nonnegative(ImportanceVector v) {
    for (double& s : v.scores) {
        if (s < 0.0) {
            s = 0.0;
        }
    }
    v.is_signed = false;
    return v;
}

std::vector<std::size_t> top_k_indices(const std::vector<double>& scores, std::size_t k) {
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    idx.resize(std::min(k, idx.size()));
    return idx;
}

Agreement method_agreement(const ImportanceVector& a, const ImportanceVector& b) {
    if (a.scores.size() != b.scores.size()) {
        fail(ErrorKind::dimension, "importance vectors differ in length");
    }
    if (a.scores.size() < 2) {
        fail(ErrorKind::input, "agreement needs at least two words");
    }
    Agreement out;
    out.pearson = pearson(a.scores, b.scores);
    out.spearman = pearson(ranks(a.scores), ranks(b.scores));
    out.k = std::min<std::size_t>(3, a.scores.size());
    auto ta = top_k_indices(a.scores, out.k);
    auto tb = top_k_indices(b.scores, out.k);
    std::sort(ta.begin(), ta.end());
    std::sort(tb.begin(), tb.end());
    std::vector<std::size_t> common;
    std::set_intersection(ta.begin(), ta.end(), tb.begin(), tb.end(), std::back_inserter(common));
    out.top_k_overlap = static_cast<double>(common.size()) / static_cast<double>(out.k);
    return out;
}

} // namespace attnlens::explain
