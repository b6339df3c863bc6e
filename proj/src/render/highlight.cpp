#include "attnlens/render/highlight.hpp"

#include "attnlens/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace attnlens::render {

using nlohmann::ordered_json;

ShadeSpec scores_to_shades(const std::vector<double>& scores) {
    double peak = 0.0;
    for (double s : scores) {
        if (!std::isfinite(s)) {
            fail(ErrorKind::numeric, "non-finite importance score");
        }
        if (s < 0.0) {
            fail(ErrorKind::contract, "negative importance score; truncate signed vectors first");
        }
        peak = std::max(peak, s);
    }
    ShadeSpec spec;
    spec.alphas.reserve(scores.size());
    for (double s : scores) {
        spec.alphas.push_back(peak > 0.0 ? s / peak : 0.0);
    }
    return spec;
}

ShadeSpec scores_to_shades(const explain::ImportanceVector& v) {
    return scores_to_shades(v.scores);
}

std::string html_escape(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        case '\'': out += "&#39;"; break;
        default: out.push_back(c);
        }
    }
    return out;
}

std::string render_html(const std::vector<std::string>& words, const ShadeSpec& shades) {
    if (words.size() != shades.alphas.size()) {
        fail(ErrorKind::input, "render_html: " + std::to_string(words.size()) + " words but " +
                                   std::to_string(shades.alphas.size()) + " shades");
    }
    std::string out = "<p class=\"attnlens-text\">";
    char alpha[32];
    for (std::size_t i = 0; i < words.size(); ++i) {
        if (i > 0) {
            out.push_back(' ');
        }
        const double a = std::clamp(shades.alphas[i], 0.0, 1.0);
        // Three decimals is below what a display can resolve; anything that
        // rounds to zero is emitted without a background.
        std::snprintf(alpha, sizeof alpha, "%.3f", a);
        if (std::string_view(alpha) == "0.000") {
            out += "<span class=\"w\">";
        } else {
            out += "<span class=\"w\" style=\"background-color: rgba(0, 0, 255, ";
            out += alpha;
            out += ")\">";
        }
        out += html_escape(words[i]);
        out += "</span>";
    }
    out += "</p>";
    return out;
}

TrialPayload trial_payload(std::string session_id, std::size_t trial_index,
                           std::size_t trial_count, const std::vector<std::string>& words,
                           const ShadeSpec& shades, const std::array<std::string, 2>& answers) {
    if (words.size() != shades.alphas.size()) {
        fail(ErrorKind::input, "trial payload: words and shades differ in length");
    }
    return {std::move(session_id), trial_index, trial_count, words, shades.alphas, answers};
}

std::string payload_to_json(const TrialPayload& p) {
    ordered_json j;
    j["version"] = kTrialPayloadVersion;
    j["session_id"] = p.session_id;
    j["trial_index"] = p.trial_index;
    j["trial_count"] = p.trial_count;
    j["words"] = p.words;
    j["alphas"] = p.alphas;
    j["answers"] = p.answers;
    return j.dump();
}

TrialPayload payload_from_json(std::string_view text) {
    try {
        const auto j = ordered_json::parse(text);
        if (j.at("version") != kTrialPayloadVersion) {
            fail(ErrorKind::input, "unsupported trial payload version");
        }
        TrialPayload p;
        p.session_id = j.at("session_id").get<std::string>();
        p.trial_index = j.at("trial_index").get<std::size_t>();
        p.trial_count = j.at("trial_count").get<std::size_t>();
        p.words = j.at("words").get<std::vector<std::string>>();
        p.alphas = j.at("alphas").get<std::vector<double>>();
        p.answers = j.at("answers").get<std::array<std::string, 2>>();
        return p;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::input, std::string("malformed trial payload: ") + e.what());
    }
}

} // namespace attnlens::render
