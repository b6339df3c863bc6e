#include <doctest.h>

#include "attnlens/error.hpp"
#include "attnlens/model/attention.hpp"
#include "attnlens/model/checkpoint.hpp"
#include "attnlens/model/corpus.hpp"
#include "attnlens/model/tokenizer.hpp"
#include "attnlens/model/training.hpp"
#include "attnlens/model/transformer.hpp"
#include "attnlens/rng.hpp"

#include <cmath>
#include <filesystem>
#include <limits>
#include <numeric>

using namespace attnlens;
using namespace attnlens::model;

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

Tensor random_matrix(Rng& rng, std::size_t r, std::size_t c, double scale = 2.0) {
    std::vector<double> v(r * c);
    for (auto& x : v) x = rng.uniform(-scale, scale);
    return Tensor::matrix(r, c, std::move(v));
}

Vocabulary small_vocab() { return Vocabulary::from_words({"[PAD]", "[CLS]", "[UNK]", "[MASK]", "good", "bad", "movie", "plot", "great"}); }

ModelConfig tiny_config(std::size_t vocab_size) {
    ModelConfig c;
    c.n_layers = 2;
    c.n_heads = 2;
    c.d_model = 8;
    c.d_k = 4;
    c.d_ff = 16;
    c.vocab_size = vocab_size;
    c.max_seq_len = 16;
    return c;
}

} // namespace

TEST_CASE("tensor validates shape and values") {
    CHECK(kind_of([] { Tensor({2, 2}, {1, 2, 3}); }) == ErrorKind::dimension);
    CHECK(kind_of([] { Tensor({1, 2}, {1, std::numeric_limits<double>::quiet_NaN()}); }) ==
          ErrorKind::numeric);
    const auto t = Tensor::from_rows({{1, 2}, {3, 4}});
    CHECK(t.rows() == 2);
    CHECK(t(1, 0) == 3);
}

TEST_CASE("attention of a single position is the identity") {
    const auto r = attention(Tensor::matrix(1, 2, {0.3, -1}), Tensor::matrix(1, 2, {5, 2}),
                             Tensor::matrix(1, 1, {3.0}), 2);
    CHECK(r.weights(0, 0) == 1.0);
    CHECK(r.output(0, 0) == 3.0);
}

TEST_CASE("identical keys share attention equally") {
    const auto r = attention(Tensor::from_rows({{1, 2}, {-3, 0.5}}), Tensor::from_rows({{0.7, 0.1}, {0.7, 0.1}}),
                             Tensor::from_rows({{1, 0}, {0, 1}}), 2);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(r.weights(i, 0) == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(r.weights(i, 1) == doctest::Approx(0.5).epsilon(1e-15));
    }
}

TEST_CASE("identity triple matches the softmax oracle") {
    const auto eye = Tensor::from_rows({{1, 0}, {0, 1}});
    const auto r = attention(eye, eye, eye, 2);
    const double hi = 1.0 / (1.0 + std::exp(-1.0 / std::sqrt(2.0)));
    CHECK(r.weights(0, 0) == doctest::Approx(hi).epsilon(1e-12));
    CHECK(r.weights(0, 1) == doctest::Approx(1 - hi).epsilon(1e-12));
    CHECK(r.weights(1, 1) == doctest::Approx(hi).epsilon(1e-12));
    CHECK(r.output(0, 0) == doctest::Approx(0.670).epsilon(1e-3));
    CHECK(r.output(0, 1) == doctest::Approx(0.330).epsilon(1e-3));
}

TEST_CASE("attention rows are stochastic for random inputs") {
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t L = 1 + rng.index(9);
        const std::size_t dk = 1 + rng.index(6);
        const auto r = attention(random_matrix(rng, L, dk), random_matrix(rng, L, dk),
                                 random_matrix(rng, L, 3), dk);
        for (std::size_t i = 0; i < L; ++i) {
            const auto row = r.weights.row(i);
            CHECK(std::accumulate(row.begin(), row.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("softmax is shift invariant") {
    const std::vector<double> a = {0.3, -2.0, 4.5, 1.0};
    std::vector<double> b = a;
    for (auto& x : b) x += 123.25;
    const auto sa = softmax(a);
    const auto sb = softmax(b);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(sa[i] - sb[i]) <= 1e-9);
}

TEST_CASE("attention rejects bad shapes and values") {
    const auto a = Tensor::from_rows({{1, 0}, {0, 1}});
    const auto b = Tensor::from_rows({{1, 0, 0}, {0, 1, 0}});
    CHECK(kind_of([&] { attention(a, b, a, 2); }) == ErrorKind::dimension);
    CHECK(kind_of([&] { attention(a, a, a, 3); }) == ErrorKind::dimension);
    CHECK(kind_of([&] { attention(a, a, Tensor::from_rows({{1, 0}}), 2); }) == ErrorKind::dimension);
}

TEST_CASE("tokenizer spans, unknowns and truncation") {
    const auto vocab = small_vocab();
    const auto seq = tokenize("Good movie", vocab, 128);
    REQUIRE(seq.length() == 3);
    CHECK(seq.token_ids[0] == kClsId);
    CHECK(seq.word_spans[0].first == 1);
    CHECK(seq.word_spans[0].last == 1);
    CHECK(seq.word_spans[1].first == 2);
    CHECK(seq.word_spans[1].last == 2);

    const auto unk = tokenize("good zebra", vocab, 128);
    CHECK(unk.token_ids[2] == kUnkId);
    CHECK(unk.raw_words[1] == "zebra");

    std::string long_text;
    for (int i = 0; i < 200; ++i) long_text += "plot ";
    const auto cut = tokenize(long_text, vocab, 128);
    CHECK(cut.length() == 128);
    CHECK(cut.word_count() == 127);

    const std::string raw = "It's a GOOD, good... movie!";
    const auto s = tokenize(raw, vocab, 128);
    std::string joined;
    for (const auto& w : s.raw_words) joined += (joined.empty() ? "" : " ") + w;
    CHECK(joined == normalize_text(raw));

    CHECK(kind_of([&] { tokenize("  ...  ", vocab, 128); }) == ErrorKind::input);
}

TEST_CASE("vocabulary orders by frequency then alphabetically") {
    const auto v = Vocabulary::build({"b a c b", "c b"}, 0, 1);
    // b: 3, c: 2, a: 1 after the four reserved entries
    CHECK(v.word(4) == "b");
    CHECK(v.word(5) == "c");
    CHECK(v.word(6) == "a");
    CHECK(v.id("zzz") == kUnkId);
}

TEST_CASE("forward produces normalized probabilities and attention") {
    const auto vocab = small_vocab();
    Transformer m(tiny_config(vocab.size()), vocab, 11);
    const auto seq = m.tokenize("good movie bad plot");
    const auto out = m.forward(seq);
    CHECK(out.probabilities[0] + out.probabilities[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(out.attention.n_layers() == 2);
    CHECK(out.attention.n_heads() == 2);
    CHECK(out.attention.length() == 5);
    for (std::size_t l = 0; l < 2; ++l)
        for (std::size_t h = 0; h < 2; ++h)
            for (std::size_t q = 0; q < 5; ++q) {
                const auto row = out.attention.row(l, h, q);
                CHECK(std::accumulate(row.begin(), row.end(), 0.0) ==
                      doctest::Approx(1.0).epsilon(1e-12));
            }
    const auto again = m.forward(seq);
    CHECK(again.probabilities == out.probabilities);
    CHECK(again.cls_embedding == out.cls_embedding);
}

TEST_CASE("zero classification head gives even odds") {
    const auto vocab = small_vocab();
    Transformer m(tiny_config(vocab.size()), vocab, 5);
    for (auto& w : m.mutable_block("head.weight")) w = 0.0;
    for (auto& b : m.mutable_block("head.bias")) b = 0.0;
    const auto p = m.predict_proba(m.tokenize("great plot"));
    CHECK(p[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(p[1] == doctest::Approx(0.5).epsilon(1e-15));

    // Opposite labels give opposite head gradients at even odds.
    const auto seq = m.tokenize("great plot");
    std::vector<double> g0(m.params().size(), 0.0), g1(m.params().size(), 0.0);
    m.loss_and_gradient(seq, 0, g0);
    m.loss_and_gradient(seq, 1, g1);
    const auto& hb = m.block("head.weight");
    for (std::size_t i = hb.offset; i < hb.offset + hb.size(); ++i) {
        CHECK(std::abs(g0[i] + g1[i]) <= 1e-12);
    }
}

TEST_CASE("forward rejects out-of-vocabulary ids and long inputs") {
    const auto vocab = small_vocab();
    Transformer m(tiny_config(vocab.size()), vocab, 5);
    auto seq = m.tokenize("good movie");
    seq.token_ids[1] = static_cast<TokenId>(vocab.size() + 3);
    CHECK(kind_of([&] { m.forward(seq); }) == ErrorKind::input);
}

TEST_CASE("analytic gradients agree with central differences") {
    const auto vocab = small_vocab();
    Transformer m(tiny_config(vocab.size()), vocab, 21);
    const auto seq = m.tokenize("good movie great plot bad");
    GradientCheckConfig cfg;
    cfg.n_params = 150;
    cfg.seed = 4;
    const auto r = gradient_check(m, seq, 1, cfg);
    CHECK(r.checked.size() >= 100);
    CHECK(r.max_relative_error <= 1e-4);
}

TEST_CASE("doubling the difference step roughly quadruples its error") {
    const auto vocab = small_vocab();
    Transformer m(tiny_config(vocab.size()), vocab, 8);
    const auto seq = m.tokenize("good plot");
    std::vector<double> g(m.params().size(), 0.0);
    m.loss_and_gradient(seq, 0, g);
    const auto& w1 = m.block("layer0.ffn.w1");
    // Pick the parameter of this block with the largest gradient.
    std::size_t idx = w1.offset;
    for (std::size_t i = w1.offset; i < w1.offset + w1.size(); ++i) {
        if (std::abs(g[i]) > std::abs(g[idx])) idx = i;
    }
    const double h = 0.05;
    const double e1 = std::abs(finite_difference(m, seq, 0, idx, h) - g[idx]);
    const double e2 = std::abs(finite_difference(m, seq, 0, idx, 2 * h) - g[idx]);
    REQUIRE(e1 > 1e-10);
    CHECK(e2 / e1 == doctest::Approx(4.0).epsilon(0.25));
}

TEST_CASE("training is deterministic and zero epochs is a no-op") {
    const auto corpus = keyword_corpus(60, 2);
    std::vector<std::string> texts;
    for (const auto& t : corpus) texts.push_back(t.text);
    const auto vocab = Vocabulary::build(texts);
    auto cfg = tiny_config(vocab.size());
    const auto seqs = to_sequences(corpus, vocab, cfg.max_seq_len);

    Transformer a(cfg, vocab, 1);
    const std::vector<double> init(a.params().begin(), a.params().end());
    TrainConfig none;
    none.epochs = 0;
    const auto r0 = train(a, seqs, none);
    CHECK(r0.loss_history.empty());
    CHECK(std::equal(init.begin(), init.end(), a.params().begin()));

    TrainConfig tc;
    tc.epochs = 2;
    tc.seed = 9;
    Transformer b(cfg, vocab, 1);
    Transformer c(cfg, vocab, 1);
    const auto rb = train(b, seqs, tc);
    const auto rc = train(c, seqs, tc);
    CHECK(rb.loss_history.size() == 2);
    CHECK(rb.loss_history == rc.loss_history);
    CHECK(std::equal(b.params().begin(), b.params().end(), c.params().begin()));
}

TEST_CASE("training refuses degenerate corpora") {
    const auto vocab = small_vocab();
    Transformer m(tiny_config(vocab.size()), vocab, 1);
    std::vector<LabeledSequence> one_class = {{m.tokenize("good"), 1}, {m.tokenize("bad"), 1}};
    CHECK(kind_of([&] { train(m, one_class, {}); }) == ErrorKind::training);
    CHECK(kind_of([&] { train(m, {}, {}); }) == ErrorKind::training);
}

TEST_CASE("keyword corpus is learned with a falling loss") {
    const auto corpus = keyword_corpus(500, 6);
    std::vector<std::string> texts;
    for (const auto& t : corpus) texts.push_back(t.text);
    const auto vocab = Vocabulary::build(texts);
    ModelConfig cfg;
    cfg.vocab_size = vocab.size();
    Transformer m(cfg, vocab, 2);
    const auto seqs = to_sequences(corpus, vocab, cfg.max_seq_len);
    TrainConfig tc;
    tc.seed = 2;
    const auto r = train(m, seqs, tc);
    for (std::size_t e = 1; e < r.loss_history.size(); ++e) {
        CHECK(r.loss_history[e] <= r.loss_history[e - 1]);
    }
    CHECK(accuracy(m, seqs) >= 0.95);
}

TEST_CASE("checkpoint round trip preserves predictions exactly") {
    const auto vocab = small_vocab();
    Transformer m(tiny_config(vocab.size()), vocab, 17);
    const auto back = checkpoint_from_json(checkpoint_to_json(m));
    CHECK(back.config() == m.config());
    CHECK(std::equal(m.params().begin(), m.params().end(), back.params().begin()));
    const auto seq = m.tokenize("bad movie great");
    CHECK(back.predict_proba(seq) == m.predict_proba(seq));
    CHECK(kind_of([] { checkpoint_from_json("{\"version\": \"other\"}"); }) != ErrorKind::dimension);
    CHECK(kind_of([] { load_checkpoint("/nonexistent/model.json"); }) == ErrorKind::io);
}

TEST_CASE("corpus jsonl round trip") {
    const auto path = std::filesystem::temp_directory_path() / "attnlens_corpus_test.jsonl";
    const auto corpus = cue_corpus(task_lexicon("exp2"), 12, 19, 30, 4);
    write_corpus(path, corpus);
    CHECK(read_corpus(path) == corpus);
    std::filesystem::remove(path);
    for (std::size_t i = 0; i < corpus.size(); ++i) CHECK(corpus[i].label == static_cast<int>(i % 2));
}
