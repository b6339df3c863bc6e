#include "attnlens/model/transformer.hpp"

#include "attnlens/error.hpp"
#include "attnlens/model/attention.hpp"
#include "attnlens/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace attnlens::model {

namespace {

constexpr double kLayerNormEps = 1e-5;
constexpr double kGeluC = 0.7978845608028654; // sqrt(2/pi)
constexpr double kGeluA = 0.044715;

// Y[L x out] = X[L x in] * W[in x out] + b
void linear(const double* x, const double* w, const double* b, double* y, std::size_t rows,
            std::size_t in, std::size_t out) {
    for (std::size_t i = 0; i < rows; ++i) {
        double* yi = y + i * out;
        std::copy(b, b + out, yi);
        const double* xi = x + i * in;
        for (std::size_t k = 0; k < in; ++k) {
            const double xv = xi[k];
            const double* wk = w + k * out;
            for (std::size_t j = 0; j < out; ++j) {
                yi[j] += xv * wk[j];
            }
        }
    }
}

// Accumulates dX += dY W^T, dW += X^T dY, db += colsum(dY). dx may be null.
void linear_backward(const double* x, const double* w, const double* dy, double* dx, double* dw,
                     double* db, std::size_t rows, std::size_t in, std::size_t out) {
    for (std::size_t i = 0; i < rows; ++i) {
        const double* dyi = dy + i * out;
        const double* xi = x + i * in;
        for (std::size_t j = 0; j < out; ++j) {
            db[j] += dyi[j];
        }
        for (std::size_t k = 0; k < in; ++k) {
            const double* wk = w + k * out;
            double* dwk = dw + k * out;
            const double xv = xi[k];
            double acc = 0.0;
            for (std::size_t j = 0; j < out; ++j) {
                acc += dyi[j] * wk[j];
                dwk[j] += xv * dyi[j];
            }
            if (dx != nullptr) {
                dx[i * in + k] += acc;
            }
        }
    }
}

void layer_norm(const double* x, const double* gamma, const double* beta, double* y, double* xhat,
                double* rstd, std::size_t rows, std::size_t width) {
    for (std::size_t i = 0; i < rows; ++i) {
        const double* xi = x + i * width;
        double mean = 0.0;
        for (std::size_t c = 0; c < width; ++c) {
            mean += xi[c];
        }
        mean /= static_cast<double>(width);
        double var = 0.0;
        for (std::size_t c = 0; c < width; ++c) {
            const double d = xi[c] - mean;
            var += d * d;
        }
        var /= static_cast<double>(width);
        const double r = 1.0 / std::sqrt(var + kLayerNormEps);
        rstd[i] = r;
        for (std::size_t c = 0; c < width; ++c) {
            const double h = (xi[c] - mean) * r;
            xhat[i * width + c] = h;
            y[i * width + c] = h * gamma[c] + beta[c];
        }
    }
}

// dx (overwritten) from dy; accumulates dgamma/dbeta.
void layer_norm_backward(const double* dy, const double* xhat, const double* rstd,
                         const double* gamma, double* dx, double* dgamma, double* dbeta,
                         std::size_t rows, std::size_t width) {
    const double inv_w = 1.0 / static_cast<double>(width);
    for (std::size_t i = 0; i < rows; ++i) {
        const double* dyi = dy + i * width;
        const double* hi = xhat + i * width;
        double mean_g = 0.0;
        double mean_gh = 0.0;
        for (std::size_t c = 0; c < width; ++c) {
            const double g = dyi[c] * gamma[c];
            mean_g += g;
            mean_gh += g * hi[c];
            dgamma[c] += dyi[c] * hi[c];
            dbeta[c] += dyi[c];
        }
        mean_g *= inv_w;
        mean_gh *= inv_w;
        for (std::size_t c = 0; c < width; ++c) {
            const double g = dyi[c] * gamma[c];
            dx[i * width + c] = rstd[i] * (g - mean_g - hi[c] * mean_gh);
        }
    }
}

double gelu(double x) {
    return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + kGeluA * x * x * x)));
}

double gelu_grad(double x) {
    const double t = std::tanh(kGeluC * (x + kGeluA * x * x * x));
    return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * kGeluA * x * x);
}

} // namespace

void ModelConfig::validate() const {
    if (n_layers < 1) {
        fail(ErrorKind::input, "n_layers must be at least 1");
    }
    if (n_heads < 1) {
        fail(ErrorKind::input, "n_heads must be at least 1");
    }
    if (d_k < 1 || d_model != n_heads * d_k) {
        fail(ErrorKind::input, "d_model must equal n_heads * d_k");
    }
    if (d_ff < 1) {
        fail(ErrorKind::input, "d_ff must be positive");
    }
    if (n_classes != 2) {
        fail(ErrorKind::input, "only binary classifiers are supported (n_classes = 2)");
    }
    if (max_seq_len < 2) {
        fail(ErrorKind::input, "max_seq_len must be at least 2");
    }
    if (vocab_size <= kNumSpecialTokens) {
        fail(ErrorKind::input, "vocabulary has no regular words");
    }
}

AttentionRecord::AttentionRecord(std::size_t n_layers, std::size_t n_heads, std::size_t length,
                                 std::vector<double> weights)
    : n_layers_(n_layers), n_heads_(n_heads), length_(length), weights_(std::move(weights)) {
    if (weights_.size() != n_layers * n_heads * length * length) {
        fail(ErrorKind::dimension, "attention record size does not match its shape");
    }
}

std::span<const double> AttentionRecord::matrix(std::size_t layer, std::size_t head) const {
    if (layer >= n_layers_ || head >= n_heads_) {
        fail(ErrorKind::dimension, "attention layer/head index out of range");
    }
    const std::size_t block = length_ * length_;
    return std::span<const double>(weights_).subspan((layer * n_heads_ + head) * block, block);
}

std::span<const double> AttentionRecord::row(std::size_t layer, std::size_t head,
                                             std::size_t query) const {
    if (query >= length_) {
        fail(ErrorKind::dimension, "attention query index out of range");
    }
    return matrix(layer, head).subspan(query * length_, length_);
}

Tensor AttentionRecord::tensor(std::size_t layer, std::size_t head) const {
    auto m = matrix(layer, head);
    return Tensor::matrix(length_, length_, std::vector<double>(m.begin(), m.end()));
}

struct Transformer::Cache {
    struct Layer {
        std::vector<double> x_in, q, k, v, attn, ctx, x1_hat, x1_rstd, x1, h_pre, h_act, x2_hat,
            x2_rstd, x2;
    };
    std::size_t length = 0;
    std::vector<double> emb_hat, emb_rstd, x0;
    std::vector<Layer> layers;
    std::array<double, 2> probs{};
};

Transformer::Transformer(ModelConfig config, Vocabulary vocab, std::uint64_t seed)
    : config_(config), vocab_(std::move(vocab)) {
    if (config_.vocab_size == 0) {
        config_.vocab_size = vocab_.size();
    }
    if (config_.vocab_size != vocab_.size()) {
        fail(ErrorKind::input, "config vocab_size does not match the vocabulary");
    }
    config_.validate();
    build_layout();
    initialize(seed);
}

Transformer::Transformer(ModelConfig config, Vocabulary vocab, std::vector<double> params)
    : config_(config), vocab_(std::move(vocab)) {
    if (config_.vocab_size != vocab_.size()) {
        fail(ErrorKind::input, "config vocab_size does not match the vocabulary");
    }
    config_.validate();
    build_layout();
    if (params.size() != params_.size()) {
        fail(ErrorKind::input, "parameter count " + std::to_string(params.size()) +
                                   " does not match the configuration (" +
                                   std::to_string(params_.size()) + ")");
    }
    for (double p : params) {
        if (!std::isfinite(p)) {
            fail(ErrorKind::numeric, "non-finite model parameter");
        }
    }
    params_ = std::move(params);
}

void Transformer::build_layout() {
    std::size_t offset = 0;
    auto add = [&](std::string name, std::size_t rows, std::size_t cols) {
        blocks_.push_back({std::move(name), offset, rows, cols});
        offset += rows * cols;
        return blocks_.back().offset;
    };
    const std::size_t d = config_.d_model;
    tok_emb_ = add("embed.token", config_.vocab_size, d);
    pos_emb_ = add("embed.position", config_.max_seq_len, d);
    emb_ln_g_ = add("embed.ln.gamma", 1, d);
    emb_ln_b_ = add("embed.ln.beta", 1, d);
    for (std::size_t l = 0; l < config_.n_layers; ++l) {
        const std::string p = "layer" + std::to_string(l) + ".";
        LayerOffsets o{};
        o.wq = add(p + "attn.wq", d, d);
        o.bq = add(p + "attn.bq", 1, d);
        o.wk = add(p + "attn.wk", d, d);
        o.wv = add(p + "attn.wv", d, d);
        o.bv = add(p + "attn.bv", 1, d);
        o.wo = add(p + "attn.wo", d, d);
        o.bo = add(p + "attn.bo", 1, d);
        o.ln1_g = add(p + "ln1.gamma", 1, d);
        o.ln1_b = add(p + "ln1.beta", 1, d);
        o.w1 = add(p + "ffn.w1", d, config_.d_ff);
        o.b1 = add(p + "ffn.b1", 1, config_.d_ff);
        o.w2 = add(p + "ffn.w2", config_.d_ff, d);
        o.b2 = add(p + "ffn.b2", 1, d);
        o.ln2_g = add(p + "ln2.gamma", 1, d);
        o.ln2_b = add(p + "ln2.beta", 1, d);
        layers_.push_back(o);
    }
    head_w_ = add("head.weight", d, config_.n_classes);
    head_b_ = add("head.bias", 1, config_.n_classes);
    params_.assign(offset, 0.0);
}

void Transformer::initialize(std::uint64_t seed) {
    Rng rng(seed);
    for (const auto& b : blocks_) {
        double* p = params_.data() + b.offset;
        const bool is_gamma = b.name.ends_with(".gamma");
        if (is_gamma) {
            std::fill(p, p + b.size(), 1.0);
        } else if (b.rows == 1) {
            std::fill(p, p + b.size(), 0.0);
        } else {
            // Embedding tables are scaled by their row width only.
            const bool is_embedding = b.name.starts_with("embed.");
            const double fan = is_embedding ? static_cast<double>(b.cols)
                                            : static_cast<double>(b.rows + b.cols) / 2.0;
            const double limit = std::sqrt(3.0 / fan);
            for (std::size_t i = 0; i < b.size(); ++i) {
                p[i] = rng.uniform(-limit, limit);
            }
        }
    }
}

const ParamBlock& Transformer::block(std::string_view name) const {
    for (const auto& b : blocks_) {
        if (b.name == name) {
            return b;
        }
    }
    fail(ErrorKind::not_found, "no parameter block named '" + std::string(name) + "'");
}

std::span<double> Transformer::mutable_block(std::string_view name) {
    const auto& b = block(name);
    return std::span<double>(params_).subspan(b.offset, b.size());
}

TokenSequence Transformer::tokenize(std::string_view text) const {
    return model::tokenize(text, vocab_, config_.max_seq_len);
}

void Transformer::check_input(const TokenSequence& seq) const {
    if (seq.token_ids.empty()) {
        fail(ErrorKind::input, "empty token sequence");
    }
    if (seq.length() > config_.max_seq_len) {
        fail(ErrorKind::input, "sequence length " + std::to_string(seq.length()) +
                                   " exceeds max_seq_len " + std::to_string(config_.max_seq_len));
    }
    for (TokenId id : seq.token_ids) {
        if (id < 0 || static_cast<std::size_t>(id) >= config_.vocab_size) {
            fail(ErrorKind::input, "token id " + std::to_string(id) + " out of vocabulary");
        }
    }
}

void Transformer::run_forward(const TokenSequence& seq, Cache& cache) const {
    const std::size_t L = seq.length();
    const std::size_t d = config_.d_model;
    const std::size_t dk = config_.d_k;
    const std::size_t H = config_.n_heads;
    const std::size_t ff = config_.d_ff;
    const double* P = params_.data();
    cache.length = L;

    std::vector<double> e(L * d);
    for (std::size_t i = 0; i < L; ++i) {
        const double* te = P + tok_emb_ + static_cast<std::size_t>(seq.token_ids[i]) * d;
        const double* pe = P + pos_emb_ + i * d;
        for (std::size_t c = 0; c < d; ++c) {
            e[i * d + c] = te[c] + pe[c];
        }
    }
    cache.emb_hat.resize(L * d);
    cache.emb_rstd.resize(L);
    cache.x0.resize(L * d);
    layer_norm(e.data(), P + emb_ln_g_, P + emb_ln_b_, cache.x0.data(), cache.emb_hat.data(),
               cache.emb_rstd.data(), L, d);

    cache.layers.resize(config_.n_layers);
    const std::vector<double>* x = &cache.x0;
    std::vector<double> tmp(L * std::max(d, ff));
    const std::vector<double> zero_bias(d, 0.0);
    for (std::size_t l = 0; l < config_.n_layers; ++l) {
        const LayerOffsets& o = layers_[l];
        auto& c = cache.layers[l];
        c.x_in = *x;
        c.q.resize(L * d);
        c.k.resize(L * d);
        c.v.resize(L * d);
        linear(c.x_in.data(), P + o.wq, P + o.bq, c.q.data(), L, d, d);
        linear(c.x_in.data(), P + o.wk, zero_bias.data(), c.k.data(), L, d, d);
        linear(c.x_in.data(), P + o.wv, P + o.bv, c.v.data(), L, d, d);
        c.attn.resize(H * L * L);
        c.ctx.resize(L * d);
        for (std::size_t h = 0; h < H; ++h) {
            kernels::scaled_dot_product({c.q.data(), d, h * dk}, {c.k.data(), d, h * dk},
                                        {c.v.data(), d, h * dk}, L, dk, dk,
                                        c.attn.data() + h * L * L, c.ctx.data(), d, h * dk);
        }
        // r1 = x + ctx Wo + bo
        linear(c.ctx.data(), P + o.wo, P + o.bo, tmp.data(), L, d, d);
        for (std::size_t i = 0; i < L * d; ++i) {
            tmp[i] += c.x_in[i];
        }
        c.x1_hat.resize(L * d);
        c.x1_rstd.resize(L);
        c.x1.resize(L * d);
        layer_norm(tmp.data(), P + o.ln1_g, P + o.ln1_b, c.x1.data(), c.x1_hat.data(),
                   c.x1_rstd.data(), L, d);

        c.h_pre.resize(L * ff);
        c.h_act.resize(L * ff);
        linear(c.x1.data(), P + o.w1, P + o.b1, c.h_pre.data(), L, d, ff);
        for (std::size_t i = 0; i < L * ff; ++i) {
            c.h_act[i] = gelu(c.h_pre[i]);
        }
        linear(c.h_act.data(), P + o.w2, P + o.b2, tmp.data(), L, ff, d);
        for (std::size_t i = 0; i < L * d; ++i) {
            tmp[i] += c.x1[i];
        }
        c.x2_hat.resize(L * d);
        c.x2_rstd.resize(L);
        c.x2.resize(L * d);
        layer_norm(tmp.data(), P + o.ln2_g, P + o.ln2_b, c.x2.data(), c.x2_hat.data(),
                   c.x2_rstd.data(), L, d);
        x = &c.x2;
    }

    // Classification reads the CLS row only.
    std::array<double, 2> logits{};
    linear(x->data(), P + head_w_, P + head_b_, logits.data(), 1, d, config_.n_classes);
    softmax(logits, cache.probs);
}

ClassifierOutput Transformer::forward(const TokenSequence& seq) const {
    check_input(seq);
    Cache cache;
    run_forward(seq, cache);
    const std::size_t L = cache.length;
    const std::size_t H = config_.n_heads;
    std::vector<double> weights;
    weights.reserve(config_.n_layers * H * L * L);
    for (const auto& layer : cache.layers) {
        weights.insert(weights.end(), layer.attn.begin(), layer.attn.end());
    }
    ClassifierOutput out;
    out.probabilities = cache.probs;
    out.predicted_class = cache.probs[1] > cache.probs[0] ? 1 : 0;
    out.attention = AttentionRecord(config_.n_layers, H, L, std::move(weights));
    const auto& last = cache.layers.back().x2;
    out.cls_embedding.assign(last.begin(), last.begin() + static_cast<std::ptrdiff_t>(config_.d_model));
    return out;
}

std::array<double, 2> Transformer::predict_proba(const TokenSequence& seq) const {
    check_input(seq);
    Cache cache;
    run_forward(seq, cache);
    return cache.probs;
}

double Transformer::loss(const TokenSequence& seq, int label) const {
    return loss_and_gradient(seq, label, {});
}

double Transformer::loss_and_gradient(const TokenSequence& seq, int label,
                                      std::span<double> grad) const {
    if (label < 0 || static_cast<std::size_t>(label) >= config_.n_classes) {
        fail(ErrorKind::input, "label out of range");
    }
    check_input(seq);
    Cache cache;
    run_forward(seq, cache);
    const double p = std::max(cache.probs[static_cast<std::size_t>(label)], 1e-300);
    if (!grad.empty()) {
        if (grad.size() != params_.size()) {
            fail(ErrorKind::dimension, "gradient buffer size mismatch");
        }
        run_backward(seq, cache, label, grad);
    }
    return -std::log(p);
}

void Transformer::run_backward(const TokenSequence& seq, const Cache& cache, int label,
                               std::span<double> grad) const {
    const std::size_t L = cache.length;
    const std::size_t d = config_.d_model;
    const std::size_t dk = config_.d_k;
    const std::size_t H = config_.n_heads;
    const std::size_t ff = config_.d_ff;
    const double* P = params_.data();
    double* G = grad.data();
    const double scale = 1.0 / std::sqrt(static_cast<double>(dk));

    std::array<double, 2> dlogits = cache.probs;
    dlogits[static_cast<std::size_t>(label)] -= 1.0;

    std::vector<double> dx(L * d, 0.0);
    linear_backward(cache.layers.back().x2.data(), P + head_w_, dlogits.data(), dx.data(),
                    G + head_w_, G + head_b_, 1, d, config_.n_classes);

    std::vector<double> dr(L * d), dx1(L * d), dh(L * ff), dctx(L * d), dq(L * d), dk_(L * d),
        dv(L * d), dA(L), key_bias_sink(d);
    for (std::size_t li = config_.n_layers; li-- > 0;) {
        const LayerOffsets& o = layers_[li];
        const auto& c = cache.layers[li];

        // x2 = LN2(x1 + FFN(x1))
        layer_norm_backward(dx.data(), c.x2_hat.data(), c.x2_rstd.data(), P + o.ln2_g, dr.data(),
                            G + o.ln2_g, G + o.ln2_b, L, d);
        dx1 = dr;
        std::fill(dh.begin(), dh.end(), 0.0);
        linear_backward(c.h_act.data(), P + o.w2, dr.data(), dh.data(), G + o.w2, G + o.b2, L, ff,
                        d);
        for (std::size_t i = 0; i < L * ff; ++i) {
            dh[i] *= gelu_grad(c.h_pre[i]);
        }
        linear_backward(c.x1.data(), P + o.w1, dh.data(), dx1.data(), G + o.w1, G + o.b1, L, d,
                        ff);

        // x1 = LN1(x_in + Attn(x_in))
        layer_norm_backward(dx1.data(), c.x1_hat.data(), c.x1_rstd.data(), P + o.ln1_g, dr.data(),
                            G + o.ln1_g, G + o.ln1_b, L, d);
        dx = dr;
        std::fill(dctx.begin(), dctx.end(), 0.0);
        linear_backward(c.ctx.data(), P + o.wo, dr.data(), dctx.data(), G + o.wo, G + o.bo, L, d,
                        d);

        std::fill(dq.begin(), dq.end(), 0.0);
        std::fill(dk_.begin(), dk_.end(), 0.0);
        std::fill(dv.begin(), dv.end(), 0.0);
        for (std::size_t h = 0; h < H; ++h) {
            const double* A = c.attn.data() + h * L * L;
            const std::size_t off = h * dk;
            for (std::size_t i = 0; i < L; ++i) {
                const double* dci = dctx.data() + i * d + off;
                const double* Ai = A + i * L;
                double dot = 0.0;
                for (std::size_t j = 0; j < L; ++j) {
                    const double* vj = c.v.data() + j * d + off;
                    double* dvj = dv.data() + j * d + off;
                    double s = 0.0;
                    for (std::size_t t = 0; t < dk; ++t) {
                        s += dci[t] * vj[t];
                        dvj[t] += Ai[j] * dci[t];
                    }
                    dA[j] = s;
                    dot += s * Ai[j];
                }
                const double* qi = c.q.data() + i * d + off;
                double* dqi = dq.data() + i * d + off;
                for (std::size_t j = 0; j < L; ++j) {
                    const double ds = Ai[j] * (dA[j] - dot) * scale;
                    if (ds == 0.0) {
                        continue;
                    }
                    const double* kj = c.k.data() + j * d + off;
                    double* dkj = dk_.data() + j * d + off;
                    for (std::size_t t = 0; t < dk; ++t) {
                        dqi[t] += ds * kj[t];
                        dkj[t] += ds * qi[t];
                    }
                }
            }
        }
        linear_backward(c.x_in.data(), P + o.wq, dq.data(), dx.data(), G + o.wq, G + o.bq, L, d, d);
        linear_backward(c.x_in.data(), P + o.wk, dk_.data(), dx.data(), G + o.wk,
                        key_bias_sink.data(), L, d, d);
        linear_backward(c.x_in.data(), P + o.wv, dv.data(), dx.data(), G + o.wv, G + o.bv, L, d, d);
    }

    layer_norm_backward(dx.data(), cache.emb_hat.data(), cache.emb_rstd.data(), P + emb_ln_g_,
                        dr.data(), G + emb_ln_g_, G + emb_ln_b_, L, d);
    for (std::size_t i = 0; i < L; ++i) {
        double* gt = G + tok_emb_ + static_cast<std::size_t>(seq.token_ids[i]) * d;
        double* gp = G + pos_emb_ + i * d;
        for (std::size_t c = 0; c < d; ++c) {
            gt[c] += dr[i * d + c];
            gp[c] += dr[i * d + c];
        }
    }
}

} // namespace attnlens::model
