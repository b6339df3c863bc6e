#include "attnlens/experiment/records.hpp"

#include "attnlens/error.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

namespace attnlens::experiment {

using nlohmann::ordered_json;

std::string_view to_string(RtValidity v) {
    switch (v) {
    case RtValidity::valid: return "valid";
    case RtValidity::nonpositive: return "nonpositive";
    case RtValidity::over_cap: return "over_cap";
    case RtValidity::exceeds_elapsed: return "exceeds_elapsed";
    }
    return "unknown";
}

RtValidity rt_validity_from_string(std::string_view s) {
    for (auto v : {RtValidity::valid, RtValidity::nonpositive, RtValidity::over_cap,
                   RtValidity::exceeds_elapsed}) {
        if (s == to_string(v)) {
            return v;
        }
    }
    fail(ErrorKind::input, "unknown validity marker '" + std::string(s) + "'");
}

std::string record_to_json(const ResponseRecord& r) {
    ordered_json j;
    j["version"] = kResponseVersion;
    j["experiment_id"] = r.experiment_id;
    j["session_id"] = r.session_id;
    j["participant"] = r.participant;
    j["trial_index"] = r.trial_index;
    j["trial_number"] = r.trial_number;
    j["text_id"] = r.text_id;
    j["method"] = explain::to_string(r.method);
    j["given_answer"] = r.given_answer;
    j["expected_answer"] = r.expected_answer;
    j["expected_class"] = r.expected_class;
    j["accurate"] = r.accurate;
    j["reaction_time_s"] = r.reaction_time_s;
    j["probability"] = r.probability;
    j["review_length"] = r.review_length;
    j["first_word_position"] = r.impact_positions[0];
    j["second_word_position"] = r.impact_positions[1];
    j["third_word_position"] = r.impact_positions[2];
    j["validity"] = to_string(r.validity);
    return j.dump();
}

ResponseRecord record_from_json(std::string_view line) {
    try {
        const auto j = ordered_json::parse(line);
        if (j.at("version") != kResponseVersion) {
            fail(ErrorKind::input, "unsupported response record version");
        }
        ResponseRecord r;
        r.experiment_id = j.at("experiment_id").get<std::string>();
        r.session_id = j.at("session_id").get<std::string>();
        r.participant = j.at("participant").get<std::string>();
        r.trial_index = j.at("trial_index").get<std::size_t>();
        r.trial_number = j.at("trial_number").get<std::size_t>();
        r.text_id = j.at("text_id").get<std::string>();
        r.method = explain::method_from_string(j.at("method").get<std::string>());
        r.given_answer = j.at("given_answer").get<std::string>();
        r.expected_answer = j.at("expected_answer").get<std::string>();
        r.expected_class = j.at("expected_class").get<int>();
        r.accurate = j.at("accurate").get<bool>();
        r.reaction_time_s = j.at("reaction_time_s").get<double>();
        r.probability = j.at("probability").get<double>();
        r.review_length = j.at("review_length").get<std::size_t>();
        r.impact_positions = {j.at("first_word_position").get<double>(),
                              j.at("second_word_position").get<double>(),
                              j.at("third_word_position").get<double>()};
        r.validity = rt_validity_from_string(j.at("validity").get<std::string>());
        return r;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::input, std::string("malformed response record: ") + e.what());
    }
}

std::vector<ResponseRecord> parse_records(std::string_view jsonl) {
    std::vector<ResponseRecord> out;
    std::size_t start = 0;
    while (start < jsonl.size()) {
        std::size_t end = jsonl.find('\n', start);
        if (end == std::string_view::npos) {
            end = jsonl.size();
        }
        const auto line = jsonl.substr(start, end - start);
        if (line.find_first_not_of(" \t\r") != std::string_view::npos) {
            out.push_back(record_from_json(line));
        }
        start = end + 1;
    }
    return out;
}

std::vector<ResponseRecord> read_records(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorKind::io, "cannot read responses " + path.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_records(buf.str());
}

std::array<double, 3> impact_positions(const std::vector<double>& scores) {
    std::array<double, 3> out{};
    const auto top = explain::top_k_indices(scores, 3);
    const double n = static_cast<double>(scores.size());
    for (std::size_t i = 0; i < top.size(); ++i) {
        out[i] = static_cast<double>(top[i] + 1) / n;
    }
    return out;
}

std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string anonymize_participant(std::string_view participant_id) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "p-%016llx",
                  static_cast<unsigned long long>(fnv1a(participant_id)));
    return buf;
}

} // namespace attnlens::experiment
