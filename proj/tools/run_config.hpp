#pragma once

#include "attnlens/experiment/bots.hpp"
#include "attnlens/experiment/trial_bank.hpp"
#include "attnlens/model/training.hpp"
#include "attnlens/stats/analysis.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>

namespace attnlens::cli {

// Everything a subcommand may need. Built from defaults, then an optional
// JSON config file, then command-line flags.
struct RunConfig {
    std::string subcommand;
    std::string experiment = "exp1";
    bool experiment_given = false; // analyze filters only when asked
    std::uint64_t seed = 1;
    bool verbose = false;

    std::string corpus;
    std::string model;
    std::vector<std::string> banks;
    std::string responses;
    std::string out;
    std::string addr = "127.0.0.1:8080";
    std::string method = "cls-a";
    std::string text;

    model::ModelConfig model_config;
    model::TrainConfig train;
    std::size_t vocab_max_words = 0;
    std::size_t vocab_min_count = 1;

    std::size_t corpus_size = 600;
    std::optional<std::size_t> corpus_min_words;
    std::optional<std::size_t> corpus_max_words;

    std::size_t lime_samples = 1000;
    std::size_t shap_permutations = 200;
    std::optional<std::size_t> texts_per_bank;
    std::optional<std::size_t> bank_min_words;
    std::optional<std::size_t> bank_max_words;
    std::optional<experiment::MethodAssignment> assignment;
    std::optional<experiment::InstructionVariant> instructions;
    std::optional<double> rt_cap_s;

    std::size_t bots = 10;
    nlohmann::json bot_overrides = nlohmann::json::object();

    stats::AnalysisConfig analysis;

    // Overlays keys of a config file; unknown keys are an input error.
    void apply_file(const nlohmann::json& j);
    nlohmann::json to_json() const;

    experiment::ExperimentConfig experiment_config() const;
    experiment::BotProfile bot_profile(const std::string& experiment_id) const;
};

} // namespace attnlens::cli
