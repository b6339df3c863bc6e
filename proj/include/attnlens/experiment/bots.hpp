#pragma once

#include "attnlens/experiment/service.hpp"
#include "attnlens/model/corpus.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace attnlens::experiment {

// Simulated participant. A bot reads the payload words, counts the cue words
// of each class it knows from `lexicon` and answers the class with more cues
// (ties broken at random). The cue margin is |count0 - count1|.
//
// Reaction time is log-normal(rt_log_mean, rt_log_sigma), scaled by
// (words / 40)^length_sensitivity. If the most shaded word is a cue agreeing
// with the bot's reading the time is multiplied by (1 - cue_sensitivity); if
// it is a cue of the other class, by (1 + misled_penalty).
//
// The bot keeps its reading with probability sigmoid(logit(base_accuracy) +
// clarity_sensitivity * (margin - 1) + cue_accuracy_bonus * margin [when the
// top word helps]), otherwise answers the other label. base_accuracy = 1
// always keeps the reading.
struct BotProfile {
    double base_accuracy = 0.8;
    double rt_log_mean = 2.2; // log seconds
    double rt_log_sigma = 0.35;
    double cue_sensitivity = 0.0;
    double misled_penalty = 0.0;
    double cue_accuracy_bonus = 0.0;
    double clarity_sensitivity = 0.0;
    double length_sensitivity = 0.0;
    model::TaskLexicon lexicon;
    std::uint64_t seed = 0;

    void validate() const;
};

// Profile with the built-in CLS_A-friendly biases used for end-to-end runs.
BotProfile cue_sensitive_profile(const std::string& experiment_id, std::uint64_t seed);

// Plays n_bots complete sessions, one after another, through the service's
// public operations. The clock must be the one the service was built with;
// each answer advances it by the bot's reaction time.
std::vector<Session> simulate_participants(ExperimentService& service, ManualClock& clock,
                                           const std::string& experiment_id, std::size_t n_bots,
                                           const BotProfile& profile);

} // namespace attnlens::experiment
