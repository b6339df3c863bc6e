#pragma once

#include "attnlens/model/tensor.hpp"
#include "attnlens/model/tokenizer.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace attnlens::model {

struct ModelConfig {
    std::size_t n_layers = 2;
    std::size_t n_heads = 4;
    std::size_t d_model = 64;
    std::size_t d_k = 16;
    std::size_t d_ff = 128;
    std::size_t vocab_size = 0;
    std::size_t max_seq_len = 128;
    std::size_t n_classes = 2;

    // Throws Error{input} unless d_model == n_heads * d_k, n_layers >= 1,
    // n_heads >= 1 and n_classes == 2.
    void validate() const;
    bool operator==(const ModelConfig&) const = default;
};

// Attention probabilities of every layer and head for one forward pass,
// stored as [layer][head][query][key].
class AttentionRecord {
public:
    AttentionRecord() = default;
    AttentionRecord(std::size_t n_layers, std::size_t n_heads, std::size_t length,
                    std::vector<double> weights);

    std::size_t n_layers() const noexcept { return n_layers_; }
    std::size_t n_heads() const noexcept { return n_heads_; }
    std::size_t length() const noexcept { return length_; }

    std::span<const double> matrix(std::size_t layer, std::size_t head) const;
    std::span<const double> row(std::size_t layer, std::size_t head, std::size_t query) const;
    double at(std::size_t layer, std::size_t head, std::size_t query, std::size_t key) const {
        return weights_[((layer * n_heads_ + head) * length_ + query) * length_ + key];
    }
    Tensor tensor(std::size_t layer, std::size_t head) const;

private:
    std::size_t n_layers_ = 0;
    std::size_t n_heads_ = 0;
    std::size_t length_ = 0;
    std::vector<double> weights_;
};

struct ClassifierOutput {
    std::array<double, 2> probabilities{};
    int predicted_class = 0;
    AttentionRecord attention;
    std::vector<double> cls_embedding;
};

// Anything that maps a token sequence to two class probabilities. Explainers
// that only need black-box access take this interface.
class Classifier {
public:
    virtual ~Classifier() = default;
    virtual std::array<double, 2> predict_proba(const TokenSequence& seq) const = 0;
};

struct ParamBlock {
    std::string name;
    std::size_t offset = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;

    std::size_t size() const noexcept { return rows * cols; }
};

// Post-LayerNorm transformer encoder whose classification head reads only the
// final hidden state of the CLS position. Keys carry no bias: a key bias shifts
// every logit of a query row equally and cancels in the softmax. All parameters live in one flat
// vector so optimizers and checkpoints can treat them uniformly.
class Transformer : public Classifier {
public:
    Transformer(ModelConfig config, Vocabulary vocab, std::uint64_t seed);
    Transformer(ModelConfig config, Vocabulary vocab, std::vector<double> params);

    const ModelConfig& config() const noexcept { return config_; }
    const Vocabulary& vocab() const noexcept { return vocab_; }
    const std::vector<ParamBlock>& blocks() const noexcept { return blocks_; }
    const ParamBlock& block(std::string_view name) const;

    std::span<const double> params() const noexcept { return params_; }
    std::span<double> mutable_params() noexcept { return params_; }
    std::span<double> mutable_block(std::string_view name);

    TokenSequence tokenize(std::string_view text) const;

    // Throws Error{input} for out-of-vocabulary ids or over-long sequences.
    ClassifierOutput forward(const TokenSequence& seq) const;
    std::array<double, 2> predict_proba(const TokenSequence& seq) const override;

    // Cross-entropy of `label`; when `grad` is nonempty the parameter gradient
    // is added into it (it must have params().size() entries).
    double loss(const TokenSequence& seq, int label) const;
    double loss_and_gradient(const TokenSequence& seq, int label, std::span<double> grad) const;

private:
    struct LayerOffsets {
        std::size_t wq, bq, wk, wv, bv, wo, bo, ln1_g, ln1_b, w1, b1, w2, b2, ln2_g, ln2_b;
    };
    struct Cache;

    void build_layout();
    void initialize(std::uint64_t seed);
    void check_input(const TokenSequence& seq) const;
    void run_forward(const TokenSequence& seq, Cache& cache) const;
    void run_backward(const TokenSequence& seq, const Cache& cache, int label,
                      std::span<double> grad) const;

    ModelConfig config_;
    Vocabulary vocab_;
    std::vector<ParamBlock> blocks_;
    std::vector<double> params_;

    std::size_t tok_emb_ = 0, pos_emb_ = 0, emb_ln_g_ = 0, emb_ln_b_ = 0;
    std::vector<LayerOffsets> layers_;
    std::size_t head_w_ = 0, head_b_ = 0;
};

} // namespace attnlens::model
