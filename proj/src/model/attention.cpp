#include "attnlens/model/attention.hpp"

#include "attnlens/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

namespace attnlens::model {

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
    const std::size_t expected =
        std::accumulate(shape_.begin(), shape_.end(), std::size_t{1}, std::multiplies<>());
    if (expected != values_.size()) {
        fail(ErrorKind::dimension, "tensor shape implies " + std::to_string(expected) +
                                       " values, got " + std::to_string(values_.size()));
    }
    for (double x : values_) {
        if (!std::isfinite(x)) {
            fail(ErrorKind::numeric, "tensor contains a non-finite value");
        }
    }
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
    const std::size_t n =
        std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
    return Tensor(std::move(shape), std::vector<double>(n, 0.0));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
    return Tensor({rows, cols}, std::move(values));
}

Tensor Tensor::from_rows(const std::vector<std::vector<double>>& rows) {
    const std::size_t cols = rows.empty() ? 0 : rows.front().size();
    std::vector<double> flat;
    flat.reserve(rows.size() * cols);
    for (const auto& r : rows) {
        if (r.size() != cols) {
            fail(ErrorKind::dimension, "ragged rows");
        }
        flat.insert(flat.end(), r.begin(), r.end());
    }
    return Tensor({rows.size(), cols}, std::move(flat));
}

std::size_t Tensor::rows() const {
    if (shape_.size() != 2) {
        fail(ErrorKind::dimension, "rows() on a tensor of rank " + std::to_string(shape_.size()));
    }
    return shape_[0];
}

std::size_t Tensor::cols() const {
    if (shape_.size() != 2) {
        fail(ErrorKind::dimension, "cols() on a tensor of rank " + std::to_string(shape_.size()));
    }
    return shape_[1];
}

std::span<const double> Tensor::row(std::size_t r) const {
    const std::size_t c = cols();
    return std::span<const double>(values_).subspan(r * c, c);
}

void softmax(std::span<const double> logits, std::span<double> out) {
    if (logits.empty()) {
        return;
    }
    const double m = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - m);
        sum += out[i];
    }
    const double inv = 1.0 / sum;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] *= inv;
    }
}

std::vector<double> softmax(std::span<const double> logits) {
    std::vector<double> out(logits.size());
    softmax(logits, out);
    return out;
}

namespace kernels {

void scaled_dot_product(HeadView q, HeadView k, HeadView v, std::size_t length, std::size_t d_k,
                        std::size_t d_v, double* weights, double* out, std::size_t out_stride,
                        std::size_t out_offset) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(d_k));
    for (std::size_t i = 0; i < length; ++i) {
        const double* qi = q.data + i * q.stride + q.offset;
        double* wi = weights + i * length;
        for (std::size_t j = 0; j < length; ++j) {
            const double* kj = k.data + j * k.stride + k.offset;
            double s = 0.0;
            for (std::size_t c = 0; c < d_k; ++c) {
                s += qi[c] * kj[c];
            }
            wi[j] = s * scale;
        }
        softmax(std::span<const double>(wi, length), std::span<double>(wi, length));

        double* oi = out + i * out_stride + out_offset;
        std::fill(oi, oi + d_v, 0.0);
        for (std::size_t j = 0; j < length; ++j) {
            const double w = wi[j];
            const double* vj = v.data + j * v.stride + v.offset;
            for (std::size_t c = 0; c < d_v; ++c) {
                oi[c] += w * vj[c];
            }
        }
    }
}

} // namespace kernels

AttentionResult attention(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t d_k) {
    if (q.rank() != 2 || k.rank() != 2 || v.rank() != 2) {
        fail(ErrorKind::dimension, "attention expects rank-2 Q, K and V");
    }
    const std::size_t length = q.rows();
    if (length == 0) {
        fail(ErrorKind::dimension, "attention over an empty sequence");
    }
    if (d_k == 0 || q.cols() != d_k || k.cols() != d_k) {
        fail(ErrorKind::dimension, "Q and K width must equal d_k=" + std::to_string(d_k));
    }
    if (k.rows() != length || v.rows() != length) {
        fail(ErrorKind::dimension, "Q, K and V must have the same number of rows");
    }
    // Tensor construction already rejects non-finite values, but a
    // default-constructed tensor could be empty; the checks above cover that.
    const std::size_t d_v = v.cols();
    std::vector<double> weights(length * length);
    std::vector<double> out(length * d_v);
    kernels::scaled_dot_product({q.values().data(), d_k, 0}, {k.values().data(), d_k, 0},
                                {v.values().data(), d_v, 0}, length, d_k, d_v, weights.data(),
                                out.data(), d_v, 0);
    for (double x : out) {
        if (!std::isfinite(x)) {
            fail(ErrorKind::numeric, "attention produced a non-finite output");
        }
    }
    return {Tensor::matrix(length, length, std::move(weights)),
            Tensor::matrix(length, d_v, std::move(out))};
}

} // namespace attnlens::model
