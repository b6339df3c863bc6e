#include "attnlens/model/training.hpp"

#include "attnlens/error.hpp"
#include "attnlens/rng.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <numeric>

namespace attnlens::model {

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) {
        fail(ErrorKind::input, "learning_rate must be positive");
    }
    if (batch_size < 1) {
        fail(ErrorKind::input, "batch_size must be at least 1");
    }
    if (!(plateau_factor > 0.0 && plateau_factor <= 1.0)) {
        fail(ErrorKind::input, "plateau_factor must lie in (0, 1]");
    }
}

TrainResult train(Transformer& model, const std::vector<LabeledSequence>& corpus,
                  const TrainConfig& cfg) {
    cfg.validate();
    if (corpus.empty()) {
        fail(ErrorKind::training, "training corpus is empty");
    }
    std::array<std::size_t, 2> per_class{};
    for (const auto& ex : corpus) {
        if (ex.label < 0 || ex.label > 1) {
            fail(ErrorKind::training, "label out of range: " + std::to_string(ex.label));
        }
        ++per_class[static_cast<std::size_t>(ex.label)];
    }
    if (per_class[0] == 0 || per_class[1] == 0) {
        fail(ErrorKind::training, "training corpus contains a single class");
    }

    TrainResult result;
    auto params = model.mutable_params();
    const std::size_t n = params.size();
    std::vector<double> grad(n), m(n, 0.0), v(n, 0.0);
    std::vector<std::size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(cfg.seed);

    double lr = cfg.learning_rate;
    double best = std::numeric_limits<double>::infinity();
    std::size_t stale = 0;
    std::uint64_t step = 0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            std::fill(grad.begin(), grad.end(), 0.0);
            for (std::size_t i = start; i < end; ++i) {
                const auto& ex = corpus[order[i]];
                epoch_loss += model.loss_and_gradient(ex.sequence, ex.label, grad);
            }
            const double inv = 1.0 / static_cast<double>(end - start);
            ++step;
            const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(step));
            const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(step));
            for (std::size_t j = 0; j < n; ++j) {
                const double g = grad[j] * inv;
                m[j] = cfg.adam_beta1 * m[j] + (1.0 - cfg.adam_beta1) * g;
                v[j] = cfg.adam_beta2 * v[j] + (1.0 - cfg.adam_beta2) * g * g;
                params[j] -= lr * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + cfg.adam_eps);
            }
        }
        epoch_loss /= static_cast<double>(corpus.size());
        result.loss_history.push_back(epoch_loss);
        result.learning_rate_history.push_back(lr);
        if (!std::isfinite(epoch_loss)) {
            fail(ErrorKind::numeric, "training diverged at epoch " + std::to_string(epoch));
        }
        if (epoch_loss < best) {
            best = epoch_loss;
            stale = 0;
        } else if (++stale >= cfg.plateau_patience) {
            lr *= cfg.plateau_factor;
            stale = 0;
        }
    }
    return result;
}

double accuracy(const Transformer& model, const std::vector<LabeledSequence>& corpus) {
    if (corpus.empty()) {
        return 0.0;
    }
    std::size_t correct = 0;
    for (const auto& ex : corpus) {
        const auto p = model.predict_proba(ex.sequence);
        const int predicted = p[1] > p[0] ? 1 : 0;
        correct += predicted == ex.label ? 1 : 0;
    }
    return static_cast<double>(correct) / static_cast<double>(corpus.size());
}

double mean_loss(const Transformer& model, const std::vector<LabeledSequence>& corpus) {
    double total = 0.0;
    for (const auto& ex : corpus) {
        total += model.loss(ex.sequence, ex.label);
    }
    return corpus.empty() ? 0.0 : total / static_cast<double>(corpus.size());
}

double finite_difference(const Transformer& model, const TokenSequence& seq, int label,
                         std::size_t param_index, double step) {
    if (param_index >= model.params().size()) {
        fail(ErrorKind::input, "parameter index out of range");
    }
    Transformer probe = model;
    auto p = probe.mutable_params();
    const double original = p[param_index];
    p[param_index] = original + step;
    const double up = probe.loss(seq, label);
    p[param_index] = original - step;
    const double down = probe.loss(seq, label);
    return (up - down) / (2.0 * step);
}

GradientCheckResult gradient_check(const Transformer& model, const TokenSequence& seq, int label,
                                   const GradientCheckConfig& cfg) {
    std::vector<double> analytic(model.params().size(), 0.0);
    model.loss_and_gradient(seq, label, analytic);

    // Only embedding rows touched by this input can have a nonzero gradient;
    // restrict sampling to parameters that actually enter the loss.
    std::vector<std::size_t> candidates;
    std::vector<bool> used_token(model.config().vocab_size, false);
    for (TokenId id : seq.token_ids) {
        used_token[static_cast<std::size_t>(id)] = true;
    }
    for (const auto& b : model.blocks()) {
        for (std::size_t r = 0; r < b.rows; ++r) {
            if (b.name == "embed.token" && !used_token[r]) {
                continue;
            }
            if (b.name == "embed.position" && r >= seq.length()) {
                continue;
            }
            for (std::size_t c = 0; c < b.cols; ++c) {
                candidates.push_back(b.offset + r * b.cols + c);
            }
        }
    }

    Rng rng(cfg.seed);
    GradientCheckResult result;
    const std::size_t count = std::min(cfg.n_params, candidates.size());
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.index(candidates.size() - i));
        std::swap(candidates[i], candidates[j]);
        const std::size_t idx = candidates[i];
        const double fd = finite_difference(model, seq, label, idx, cfg.step);
        const double err =
            std::abs(analytic[idx] - fd) / (std::abs(analytic[idx]) + std::abs(fd) + 1e-8);
        result.checked.push_back(idx);
        if (i == 0 || err > result.max_relative_error) {
            result.max_relative_error = err;
            result.worst_index = idx;
        }
    }
    return result;
}

} // namespace attnlens::model
