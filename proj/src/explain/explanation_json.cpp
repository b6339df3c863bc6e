#include "attnlens/explain/explainers.hpp"

#include "attnlens/error.hpp"

#include <json.hpp>

namespace attnlens::explain {

std::string explanation_to_json(const ImportanceVector& v, const std::vector<std::string>& words,
                                std::optional<std::array<double, 2>> probabilities) {
    if (words.size() != v.scores.size()) {
        fail(ErrorKind::dimension, "word list and scores differ in length");
    }
    nlohmann::ordered_json j;
    j["version"] = kExplanationVersion;
    j["method"] = to_string(v.method);
    j["signed"] = v.is_signed;
    j["target_class"] = v.target_class;
    if (probabilities) {
        j["probabilities"] = *probabilities;
    }
    auto arr = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < words.size(); ++i) {
        arr.push_back({{"word", words[i]}, {"score", v.scores[i]}});
    }
    j["words"] = std::move(arr);
    return j.dump();
}

} // namespace attnlens::explain
