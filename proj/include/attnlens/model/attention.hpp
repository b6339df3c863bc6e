#pragma once

#include "attnlens/model/tensor.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace attnlens::model {

struct AttentionResult {
    Tensor weights; // L x L, row-stochastic
    Tensor output;  // L x d_v
};

// softmax(Q K^T / sqrt(d_k)) V with the weight matrix returned alongside the
// output. Throws Error{dimension} on shape mismatch and Error{numeric} on
// non-finite input.
AttentionResult attention(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t d_k);

// Max-shifted softmax of one row of logits, written into `out`.
void softmax(std::span<const double> logits, std::span<double> out);
std::vector<double> softmax(std::span<const double> logits);

namespace kernels {

// Strided views used by the encoder, which keeps all heads of Q/K/V in one
// L x d_model buffer. Each head reads `width` columns starting at `offset`.
struct HeadView {
    const double* data;
    std::size_t stride;
    std::size_t offset;
};

// Scaled dot-product attention for a single head. `weights` receives L*L
// row-major probabilities; `out` receives L rows of `width` values written at
// out_stride/out_offset.
void scaled_dot_product(HeadView q, HeadView k, HeadView v, std::size_t length, std::size_t d_k,
                        std::size_t d_v, double* weights, double* out, std::size_t out_stride,
                        std::size_t out_offset);

} // namespace kernels

} // namespace attnlens::model
