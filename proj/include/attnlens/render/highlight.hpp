#pragma once

#include "attnlens/explain/explainers.hpp"

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace attnlens::render {

// Per-word opacity of the blue highlight, each in [0, 1].
struct ShadeSpec {
    std::vector<double> alphas;

    bool operator==(const ShadeSpec&) const = default;
};

// alpha_i = score_i / max(score). All-zero input gives all-zero alphas.
// Negative scores are a contract error: truncate signed vectors first.
ShadeSpec scores_to_shades(const explain::ImportanceVector& v);
ShadeSpec scores_to_shades(const std::vector<double>& scores);

// One <span> per word; nonzero alphas get an rgba(0, 0, 255, a) background.
// Words are HTML-escaped. Byte-for-byte deterministic.
std::string render_html(const std::vector<std::string>& words, const ShadeSpec& shades);

std::string html_escape(std::string_view text);

inline constexpr std::string_view kTrialPayloadVersion = "attnlens-trial/1";

// What the participant's screen receives for one trial. It deliberately has
// no field for the true label or the highlighting method.
struct TrialPayload {
    std::string session_id;
    std::size_t trial_index = 0;
    std::size_t trial_count = 0;
    std::vector<std::string> words;
    std::vector<double> alphas;
    std::array<std::string, 2> answers;

    bool operator==(const TrialPayload&) const = default;
};

TrialPayload trial_payload(std::string session_id, std::size_t trial_index,
                           std::size_t trial_count, const std::vector<std::string>& words,
                           const ShadeSpec& shades, const std::array<std::string, 2>& answers);

std::string payload_to_json(const TrialPayload& payload);
TrialPayload payload_from_json(std::string_view text);

} // namespace attnlens::render
