#pragma once

#include "attnlens/model/transformer.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace attnlens::explain {

using model::Classifier;
using model::TokenSequence;
using model::Transformer;

enum class Method { cls_a, lime, shap, shap_exact, random };

// Canonical upper-case names ("CLS_A", "LIME", "SHAP", "SHAP_EXACT", "RANDOM").
std::string_view to_string(Method m);
// Accepts the canonical names case-insensitively, with '-' for '_'.
Method method_from_string(std::string_view name);

// The four methods shown to participants, in a fixed order.
inline constexpr std::array<Method, 4> kDisplayMethods = {Method::cls_a, Method::lime, Method::shap,
                                                          Method::random};

struct ImportanceVector {
    Method method = Method::random;
    std::vector<double> scores; // one per word
    bool is_signed = false;
    int target_class = -1; // -1 when the scores are not tied to a class

    bool operator==(const ImportanceVector&) const = default;
};

struct ClsAOptions {
    // Drop the CLS->CLS entry and rescale the word weights to sum to 1. When
    // false the head-averaged word weights are returned as they are.
    bool renormalize = true;
};

// Mean over the last layer's heads of the CLS query row, CLS entry dropped,
// token weights summed within each word span.
ImportanceVector cls_a(const Transformer& model, const TokenSequence& seq, ClsAOptions opts = {});
ImportanceVector cls_a_from_attention(const model::AttentionRecord& attention,
                                      const TokenSequence& seq, int target_class,
                                      ClsAOptions opts = {});

// For models that do not pool through CLS: attention received by each token
// averaged over every last-layer head and every query row.
ImportanceVector cls_a_fallback(const Transformer& model, const TokenSequence& seq,
                                ClsAOptions opts = {});
ImportanceVector cls_a_fallback_from_attention(const model::AttentionRecord& attention,
                                               const TokenSequence& seq, int target_class,
                                               ClsAOptions opts = {});

struct LimeConfig {
    std::size_t n_samples = 1000;
    std::optional<double> kernel_width; // default 0.25 * sqrt(word count)
    double ridge_lambda = 1e-3;
    std::uint64_t seed = 0;
    model::TokenId mask_token = model::kMaskId;
};

// Weighted ridge surrogate of the target-class probability on word-presence
// masks. Signed coefficients. target_class defaults to the predicted class.
ImportanceVector lime_explain(const Classifier& clf, const TokenSequence& seq,
                              const LimeConfig& cfg = {},
                              std::optional<int> target_class = std::nullopt);

struct ShapConfig {
    std::size_t n_permutations = 200;
    model::TokenId mask_token = model::kMaskId;
    std::uint64_t seed = 0;
};

// Monte-Carlo Shapley values from random word orderings.
ImportanceVector shap_permutation(const Classifier& clf, const TokenSequence& seq,
                                  const ShapConfig& cfg = {},
                                  std::optional<int> target_class = std::nullopt);

inline constexpr std::size_t kMaxExactShapWords = 12;

// Exact Shapley values over all 2^n coalitions; throws Error{size} above
// kMaxExactShapWords words.
ImportanceVector shap_exact(const Classifier& clf, const TokenSequence& seq,
                            std::optional<int> target_class = std::nullopt,
                            model::TokenId mask_token = model::kMaskId);

ImportanceVector random_baseline(const TokenSequence& seq, std::uint64_t seed);

ImportanceVector truncate_nonnegative(ImportanceVector v);

struct Agreement {
    std::optional<double> pearson;  // nullopt when either vector has zero variance
    std::optional<double> spearman;
    double top_k_overlap = 0.0;
    std::size_t k = 0;
};

Agreement method_agreement(const ImportanceVector& a, const ImportanceVector& b);

// Indices of the k largest scores, ties resolved toward the earlier word.
std::vector<std::size_t> top_k_indices(const std::vector<double>& scores, std::size_t k);

inline constexpr std::string_view kExplanationVersion = "attnlens-expl/1";

std::string explanation_to_json(const ImportanceVector& v, const std::vector<std::string>& words,
                                std::optional<std::array<double, 2>> probabilities = std::nullopt);

} // namespace attnlens::explain
