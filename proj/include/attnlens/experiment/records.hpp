#pragma once

#include "attnlens/explain/explainers.hpp"

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace attnlens::experiment {

inline constexpr std::string_view kResponseVersion = "attnlens-response/1";

enum class RtValidity {
    valid,
    nonpositive,     // reaction time <= 0
    over_cap,        // above the experiment's cap
    exceeds_elapsed, // longer than the server saw between serving and receiving
};

std::string_view to_string(RtValidity v);
RtValidity rt_validity_from_string(std::string_view s);

// One participant x trial outcome with the covariates used by the analyses.
struct ResponseRecord {
    std::string session_id;
    std::string participant; // anonymized
    std::string experiment_id;
    std::size_t trial_index = 0;
    std::size_t trial_number = 0; // 1-based
    std::string text_id;
    explain::Method method = explain::Method::random;
    std::string given_answer;
    std::string expected_answer;
    int expected_class = 0;
    bool accurate = false;
    double reaction_time_s = 0.0;
    double probability = 0.0; // classifier probability of the true class
    std::size_t review_length = 0;
    // 1-based positions of the three highest-scored words divided by word
    // count; 0 when the text has fewer words.
    std::array<double, 3> impact_positions{};
    RtValidity validity = RtValidity::valid;

    bool operator==(const ResponseRecord&) const = default;
};

// Single-line JSON with a fixed field order.
std::string record_to_json(const ResponseRecord& r);
ResponseRecord record_from_json(std::string_view line);

std::vector<ResponseRecord> read_records(const std::filesystem::path& path);
std::vector<ResponseRecord> parse_records(std::string_view jsonl);

std::array<double, 3> impact_positions(const std::vector<double>& scores);

// Stable pseudonym: "p-" followed by the 64-bit FNV-1a hash in hex.
std::string anonymize_participant(std::string_view participant_id);

std::uint64_t fnv1a(std::string_view text);

} // namespace attnlens::experiment
