#pragma once

#include "attnlens/model/transformer.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace attnlens::model {

struct LabeledSequence {
    TokenSequence sequence;
    int label = 0;
};

struct TrainConfig {
    double learning_rate = 1e-3;
    std::size_t epochs = 5;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
    // Reduce-on-plateau on the epoch training loss.
    double plateau_factor = 0.5;
    std::size_t plateau_patience = 1;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;

    void validate() const;
};

struct TrainResult {
    std::vector<double> loss_history;          // mean minibatch loss per epoch
    std::vector<double> learning_rate_history; // rate used during each epoch
};

// Adam on mean cross-entropy. Minibatches are accumulated one sequence at a
// time, so no padding is ever materialized. Deterministic given cfg.seed.
// Throws Error{training} for an empty or single-class corpus.
TrainResult train(Transformer& model, const std::vector<LabeledSequence>& corpus,
                  const TrainConfig& cfg);

double accuracy(const Transformer& model, const std::vector<LabeledSequence>& corpus);
double mean_loss(const Transformer& model, const std::vector<LabeledSequence>& corpus);

// Central difference (f(p + h) - f(p - h)) / 2h of the loss in one parameter.
double finite_difference(const Transformer& model, const TokenSequence& seq, int label,
                         std::size_t param_index, double step);

struct GradientCheckConfig {
    std::size_t n_params = 128;
    double step = 1e-4;
    std::uint64_t seed = 0;
};

struct GradientCheckResult {
    double max_relative_error = 0.0;
    std::size_t worst_index = 0;
    std::vector<std::size_t> checked;
};

// Compares the analytic gradient with central differences on a random subset
// of the parameters that influence this input. Relative error is
// |g_a - g_fd| / (|g_a| + |g_fd| + 1e-8).
GradientCheckResult gradient_check(const Transformer& model, const TokenSequence& seq, int label,
                                   const GradientCheckConfig& cfg = {});

} // namespace attnlens::model
