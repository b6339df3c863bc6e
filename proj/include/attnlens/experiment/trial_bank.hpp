#pragma once

#include "attnlens/explain/explainers.hpp"
#include "attnlens/model/corpus.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace attnlens::experiment {

enum class InstructionVariant { plain, speed_incentive };

std::string_view to_string(InstructionVariant v);
InstructionVariant instruction_variant_from_string(std::string_view s);

enum class MethodAssignment { iid, balanced };

struct ExperimentConfig {
    std::string id;
    std::array<std::string, 2> labels; // answer label of class 0 and class 1
    std::size_t min_words = 32;
    std::size_t max_words = 50;
    std::size_t texts_per_bank = 100;
    double rt_cap_s = 120.0;
    InstructionVariant instructions = InstructionVariant::plain;
    MethodAssignment assignment = MethodAssignment::iid;
    explain::LimeConfig lime;
    explain::ShapConfig shap;
    std::uint64_t seed = 0;

    void validate() const;
};

// The three built-in experiments: "exp1" sentiment (32-50 words), "exp2"
// action vs drama and "exp3" horror vs comedy (19-145 words).
ExperimentConfig default_experiment(const std::string& id);

struct BankText {
    std::string text_id;
    std::vector<std::string> words;
    int label = 0;
    double probability = 0.0; // classifier probability of `label`
    // Display vectors for CLS_A, LIME, SHAP and RANDOM, all nonnegative.
    std::map<explain::Method, explain::ImportanceVector> explanations;

    const explain::ImportanceVector& explanation(explain::Method m) const;
};

struct TrialBank {
    ExperimentConfig config;
    std::vector<BankText> texts;

    const BankText& text(std::string_view text_id) const;
    // Throws Error{build} if the balance, length, correctness or
    // nonnegativity invariants are violated.
    void validate() const;
};

// Keeps only correctly classified texts inside the word-count band, takes
// texts_per_bank / 2 per class (in a seeded random order) and precomputes the
// four display explanations, LIME and SHAP truncated at zero.
TrialBank build_trial_bank(const model::Transformer& model,
                           const std::vector<model::LabeledText>& corpus,
                           const ExperimentConfig& config);

inline constexpr std::string_view kBankVersion = "attnlens-bank/1";

std::string bank_to_json(const TrialBank& bank);
TrialBank bank_from_json(std::string_view text);
void save_bank(const TrialBank& bank, const std::filesystem::path& path);
TrialBank load_bank(const std::filesystem::path& path);

} // namespace attnlens::experiment
