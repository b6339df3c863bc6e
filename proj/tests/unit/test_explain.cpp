#include <doctest.h>

#include "attnlens/error.hpp"
#include "attnlens/explain/explainers.hpp"
#include "attnlens/model/corpus.hpp"
#include "attnlens/model/training.hpp"
#include "attnlens/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

using namespace attnlens;
using namespace attnlens::explain;
using model::AttentionRecord;
using model::TokenSequence;

namespace {

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an attnlens::Error");
    return ErrorKind::io;
}

// One token per word, ids 10.. so they never collide with the mask id.
TokenSequence words_seq(std::size_t n) {
    TokenSequence s;
    s.token_ids.push_back(model::kClsId);
    for (std::size_t i = 0; i < n; ++i) {
        s.token_ids.push_back(static_cast<model::TokenId>(10 + i));
        s.word_spans.push_back({i + 1, i + 1});
        s.raw_words.push_back("w" + std::to_string(i));
    }
    return s;
}

std::vector<bool> visible(const TokenSequence& s) {
    std::vector<bool> keep;
    for (const auto& span : s.word_spans) keep.push_back(s.token_ids[span.first] != model::kMaskId);
    return keep;
}

// Class-1 probability is an arbitrary set function of the visible words.
class GameClassifier : public model::Classifier {
public:
    explicit GameClassifier(std::function<double(const std::vector<bool>&)> v) : v_(std::move(v)) {}
    std::array<double, 2> predict_proba(const TokenSequence& seq) const override {
        const double p = v_(visible(seq));
        return {1.0 - p, p};
    }

private:
    std::function<double(const std::vector<bool>&)> v_;
};

GameClassifier linear_game(double bias, std::vector<double> c) {
    return GameClassifier([bias, c](const std::vector<bool>& keep) {
        double v = bias;
        for (std::size_t i = 0; i < keep.size(); ++i) v += keep[i] ? c[i] : 0.0;
        return v;
    });
}

AttentionRecord record(std::size_t layers, std::size_t heads, std::size_t L, std::vector<double> w) {
    return AttentionRecord(layers, heads, L, std::move(w));
}

ImportanceVector scores(std::vector<double> s) { return {Method::lime, std::move(s), true, 1}; }

} // namespace

TEST_CASE("method names round trip") {
    for (Method m : {Method::cls_a, Method::lime, Method::shap, Method::shap_exact, Method::random}) {
        CHECK(method_from_string(to_string(m)) == m);
    }
    CHECK(method_from_string("cls-a") == Method::cls_a);
    CHECK(kind_of([] { method_from_string("gradcam"); }) == ErrorKind::input);
}

TEST_CASE("CLS-A hand example") {
    // Two heads whose CLS rows average to [0.3, 0.45, 0.25].
    std::vector<double> w(2 * 3 * 3, 1.0 / 3.0);
    const double h0[3] = {0.2, 0.5, 0.3};
    const double h1[3] = {0.4, 0.4, 0.2};
    for (int j = 0; j < 3; ++j) {
        w[j] = h0[j];
        w[9 + j] = h1[j];
    }
    const auto v = cls_a_from_attention(record(1, 2, 3, w), words_seq(2), 1);
    REQUIRE(v.scores.size() == 2);
    CHECK(std::abs(v.scores[0] - 0.45 / 0.7) <= 1e-9);
    CHECK(std::abs(v.scores[1] - 0.25 / 0.7) <= 1e-9);
    CHECK_FALSE(v.is_signed);

    const auto raw = cls_a_from_attention(record(1, 1, 2, {0.55, 0.45, 0.5, 0.5}), words_seq(1), 0,
                                          {.renormalize = false});
    CHECK(raw.scores[0] == doctest::Approx(0.45).epsilon(1e-12));
    const auto one = cls_a_from_attention(record(1, 1, 2, {0.55, 0.45, 0.5, 0.5}), words_seq(1), 0);
    CHECK(one.scores == std::vector<double>{1.0});
}

TEST_CASE("CLS-A reads only the last layer") {
    std::vector<double> w(2 * 1 * 3 * 3, 0.0);
    // layer 0 CLS row favours word 0, layer 1 favours word 1
    w[0] = 0.1, w[1] = 0.8, w[2] = 0.1;
    w[9] = 0.1, w[10] = 0.1, w[11] = 0.8;
    const auto v = cls_a_from_attention(record(2, 1, 3, w), words_seq(2), 1);
    CHECK(v.scores[1] == doctest::Approx(0.8 / 0.9));
}

TEST_CASE("CLS-A identical heads equal one head, and head order is irrelevant") {
    Rng rng(5);
    const std::size_t L = 6, H = 4;
    std::vector<double> w(H * L * L);
    for (std::size_t r = 0; r < H * L; ++r) {
        double s = 0;
        for (std::size_t j = 0; j < L; ++j) s += (w[r * L + j] = rng.uniform(0.01, 1.0));
        for (std::size_t j = 0; j < L; ++j) w[r * L + j] /= s;
    }
    const auto seq = words_seq(L - 1);
    const auto base = cls_a_from_attention(record(1, H, L, w), seq, 0);
    std::vector<double> perm(w.size());
    const std::size_t order[H] = {2, 0, 3, 1};
    for (std::size_t h = 0; h < H; ++h) {
        std::copy_n(w.begin() + static_cast<long>(order[h] * L * L), L * L,
                    perm.begin() + static_cast<long>(h * L * L));
    }
    const auto permuted = cls_a_from_attention(record(1, H, L, perm), seq, 0);
    for (std::size_t i = 0; i < base.scores.size(); ++i) {
        CHECK(std::abs(base.scores[i] - permuted.scores[i]) <= 1e-12);
    }

    std::vector<double> same(H * L * L);
    for (std::size_t h = 0; h < H; ++h) std::copy_n(w.begin(), L * L, same.begin() + static_cast<long>(h * L * L));
    const auto single = cls_a_from_attention(record(1, 1, L, std::vector<double>(w.begin(), w.begin() + L * L)), seq, 0);
    const auto replicated = cls_a_from_attention(record(1, H, L, same), seq, 0);
    for (std::size_t i = 0; i < single.scores.size(); ++i) {
        CHECK(std::abs(single.scores[i] - replicated.scores[i]) <= 1e-12);
    }
    CHECK(std::accumulate(base.scores.begin(), base.scores.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("CLS-A fallback averages attention received") {
    const auto v = cls_a_fallback_from_attention(
        record(1, 1, 3, {0.5, 0.3, 0.2, 0.2, 0.2, 0.6, 0.1, 0.7, 0.2}), words_seq(2), 1);
    CHECK(v.scores[0] == doctest::Approx(1.2 / 2.2).epsilon(1e-12));
    CHECK(v.scores[1] == doctest::Approx(1.0 / 2.2).epsilon(1e-12));
}

TEST_CASE("CLS-A multi-token words sum their tokens") {
    TokenSequence s;
    s.token_ids = {model::kClsId, 10, 11, 12};
    s.word_spans = {{1, 2}, {3, 3}};
    s.raw_words = {"a", "b"};
    const auto v = cls_a_from_attention(
        record(1, 1, 4, {0.2, 0.2, 0.2, 0.4, 0.25, 0.25, 0.25, 0.25, 0.25, 0.25, 0.25, 0.25, 0.25, 0.25, 0.25, 0.25}),
        s, 0);
    CHECK(v.scores[0] == doctest::Approx(0.5));
    CHECK(v.scores[1] == doctest::Approx(0.5));
}

TEST_CASE("CLS-A rejects mismatched attention") {
    CHECK(kind_of([] { cls_a_from_attention(record(1, 1, 2, {1, 0, 0, 1}), words_seq(3), 0); }) ==
          ErrorKind::dimension);
}

TEST_CASE("CLS-A on a trained-shape model is a distribution over words") {
    const auto corpus = model::keyword_corpus(40, 1);
    std::vector<std::string> texts;
    for (const auto& t : corpus) texts.push_back(t.text);
    model::ModelConfig cfg;
    cfg.n_layers = 2;
    cfg.n_heads = 2;
    cfg.d_model = 8;
    cfg.d_k = 4;
    cfg.d_ff = 16;
    cfg.max_seq_len = 32;
    const auto vocab = model::Vocabulary::build(texts);
    cfg.vocab_size = vocab.size();
    const model::Transformer m(cfg, vocab, 4);
    const auto seq = m.tokenize(corpus[3].text);
    const auto v = cls_a(m, seq);
    CHECK(v.scores.size() == seq.word_count());
    CHECK(std::all_of(v.scores.begin(), v.scores.end(), [](double x) { return x >= 0; }));
    CHECK(std::accumulate(v.scores.begin(), v.scores.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(v.target_class == m.forward(seq).predicted_class);
    const auto fb = cls_a_fallback(m, seq);
    CHECK(std::accumulate(fb.scores.begin(), fb.scores.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("LIME recovers a linear-in-mask classifier") {
    const std::vector<double> c = {0.3, -0.1, 0.0, 0.25, -0.05, 0.1};
    const auto clf = linear_game(0.2, c);
    LimeConfig cfg;
    cfg.n_samples = 2000;
    cfg.seed = 7;
    const auto v = lime_explain(clf, words_seq(c.size()), cfg, 1);
    CHECK(v.is_signed);
    for (std::size_t i = 0; i < c.size(); ++i) CHECK(std::abs(v.scores[i] - c[i]) <= 0.05);

    const auto again = lime_explain(clf, words_seq(c.size()), cfg, 1);
    CHECK(again == v);
}

TEST_CASE("LIME on a constant model gives zero weights") {
    const auto clf = GameClassifier([](const std::vector<bool>&) { return 0.7; });
    LimeConfig cfg;
    cfg.n_samples = 500;
    const auto v = lime_explain(clf, words_seq(5), cfg);
    CHECK(v.target_class == 1);
    for (double x : v.scores) CHECK(std::abs(x) <= 1e-3);
}

TEST_CASE("LIME validates its budget") {
    const auto clf = linear_game(0.5, {0.1, 0.1, 0.1});
    LimeConfig cfg;
    cfg.n_samples = 3;
    CHECK(kind_of([&] { lime_explain(clf, words_seq(3), cfg); }) == ErrorKind::input);
}

TEST_CASE("exact Shapley satisfies the axioms") {
    const auto both = GameClassifier([](const std::vector<bool>& k) { return k[0] && k[1] ? 1.0 : 0.0; });
    const auto and_game = shap_exact(both, words_seq(2), 1);
    CHECK(and_game.scores[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(and_game.scores[1] == doctest::Approx(0.5).epsilon(1e-12));

    const std::vector<double> c = {0.1, -0.2, 0.05, 0.3};
    const auto additive = shap_exact(linear_game(0.4, c), words_seq(4), 1);
    for (std::size_t i = 0; i < c.size(); ++i) CHECK(std::abs(additive.scores[i] - c[i]) <= 1e-12);

    const auto majority = GameClassifier([](const std::vector<bool>& k) {
        return std::count(k.begin(), k.end(), true) >= 2 ? 1.0 : 0.0;
    });
    const auto maj = shap_exact(majority, words_seq(3), 1);
    for (double x : maj.scores) CHECK(x == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

    // word 2 never matters
    const auto dummy = GameClassifier([](const std::vector<bool>& k) {
        return 0.1 + 0.4 * (k[0] ? 1.0 : 0.0) * (k[1] ? 1.0 : 0.0) + 0.2 * (k[3] ? 1.0 : 0.0);
    });
    const auto d = shap_exact(dummy, words_seq(4), 1);
    CHECK(std::abs(d.scores[2]) <= 1e-15);
}

TEST_CASE("exact Shapley efficiency on a random game") {
    Rng rng(21);
    std::vector<double> table(1 << 7);
    for (auto& x : table) x = rng.uniform();
    const auto game = GameClassifier([&](const std::vector<bool>& k) {
        std::size_t key = 0;
        for (std::size_t i = 0; i < k.size(); ++i) key |= (k[i] ? 1u : 0u) << i;
        return table[key];
    });
    const auto v = shap_exact(game, words_seq(7), 1);
    const double total = std::accumulate(v.scores.begin(), v.scores.end(), 0.0);
    CHECK(std::abs(total - (table.back() - table.front())) <= 1e-8);

    // permutation sampling telescopes, so it is efficient too and converges
    ShapConfig cfg;
    cfg.n_permutations = 2000;
    cfg.seed = 3;
    const auto mc = shap_permutation(game, words_seq(7), cfg, 1);
    CHECK(std::abs(std::accumulate(mc.scores.begin(), mc.scores.end(), 0.0) - total) <= 1e-9);
    double mad = 0;
    for (std::size_t i = 0; i < 7; ++i) mad += std::abs(mc.scores[i] - v.scores[i]) / 7.0;
    CHECK(mad <= 0.02);
}

TEST_CASE("exact Shapley refuses long texts") {
    const auto clf = linear_game(0.5, std::vector<double>(13, 0.01));
    CHECK(kind_of([&] { shap_exact(clf, words_seq(13), 1); }) == ErrorKind::size);
    CHECK_NOTHROW(shap_exact(clf, words_seq(12), 1));
}

TEST_CASE("random baseline") {
    const auto seq = words_seq(10000);
    const auto a = random_baseline(seq, 11);
    CHECK(a == random_baseline(seq, 11));
    CHECK(a != random_baseline(seq, 12));
    CHECK(std::all_of(a.scores.begin(), a.scores.end(), [](double x) { return x >= 0 && x < 1; }));
    const double mean = std::accumulate(a.scores.begin(), a.scores.end(), 0.0) / 10000.0;
    CHECK(mean >= 0.48);
    CHECK(mean <= 0.52);
}

TEST_CASE("truncation clips negatives and is idempotent") {
    const auto t = truncate_nonnegative(scores({-0.2, 0.3, 0.0, -1e-12}));
    CHECK(t.scores == std::vector<double>{0.0, 0.3, 0.0, 0.0});
    CHECK_FALSE(t.is_signed);
    CHECK(truncate_nonnegative(t) == t);
}

TEST_CASE("agreement metrics") {
    // reference values from scipy.stats.pearsonr / spearmanr
    const auto ag = method_agreement(scores({0.1, 0.4, 0.35, 0.05, 0.9, 0.2}),
                                     scores({0.2, 0.3, 0.5, 0.1, 0.7, 0.05}));
    CHECK(*ag.pearson == doctest::Approx(0.8886185170098388).epsilon(1e-12));
    CHECK(*ag.spearman == doctest::Approx(0.7714285714285715).epsilon(1e-12));
    CHECK(ag.k == 3);
    CHECK(ag.top_k_overlap == 1.0); // both top-3 sets are {1, 2, 4}

    const auto ties = method_agreement(scores({1, 2, 2, 3, 5}), scores({2, 1, 3, 3, 4}));
    CHECK(*ties.spearman == doctest::Approx(0.7631578947368421).epsilon(1e-12));

    const std::vector<double> x = {0.3, 0.1, 0.5, 0.2};
    CHECK(*method_agreement(scores(x), scores(x)).spearman == doctest::Approx(1.0));
    const std::vector<double> r = {0.2, 0.5, 0.1, 0.3};
    CHECK(*method_agreement(scores(x), scores(r)).spearman == doctest::Approx(-1.0));
    CHECK_FALSE(method_agreement(scores({1, 1, 1}), scores({1, 2, 3})).pearson.has_value());
    CHECK(kind_of([] { method_agreement(scores({1, 2}), scores({1, 2, 3})); }) == ErrorKind::dimension);
}

TEST_CASE("top-k prefers earlier words on ties") {
    CHECK(top_k_indices({0.5, 0.9, 0.5, 0.1}, 3) == std::vector<std::size_t>{1, 0, 2});
}

TEST_CASE("explanation JSON") {
    const auto v = scores({0.25, -0.5});
    const auto j = nlohmann::json::parse(explanation_to_json(v, {"great", "plot"}, std::array<double, 2>{0.3, 0.7}));
    CHECK(j["version"] == "attnlens-expl/1");
    CHECK(j["method"] == "LIME");
    CHECK(j["signed"] == true);
    CHECK(j["words"][1]["word"] == "plot");
    CHECK(j["words"][1]["score"] == -0.5);
    CHECK(j["probabilities"][1] == 0.7);
    CHECK(kind_of([&] { explanation_to_json(v, {"one"}); }) == ErrorKind::dimension);
}
