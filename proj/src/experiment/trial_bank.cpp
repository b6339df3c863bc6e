#include "attnlens/experiment/trial_bank.hpp"

#include "attnlens/error.hpp"
#include "attnlens/rng.hpp"

#include <json.hpp>

#include <fstream>
#include <numeric>
#include <sstream>

namespace attnlens::experiment {

using nlohmann::ordered_json;

std::string_view to_string(InstructionVariant v) {
    return v == InstructionVariant::speed_incentive ? "speed_incentive" : "plain";
}

InstructionVariant instruction_variant_from_string(std::string_view s) {
    if (s == "plain") {
        return InstructionVariant::plain;
    }
    if (s == "speed_incentive") {
        return InstructionVariant::speed_incentive;
    }
    fail(ErrorKind::input, "unknown instruction variant '" + std::string(s) + "'");
}

void ExperimentConfig::validate() const {
    if (id.empty()) {
        fail(ErrorKind::input, "experiment id is empty");
    }
    if (labels[0].empty() || labels[1].empty() || labels[0] == labels[1]) {
        fail(ErrorKind::input, "experiment needs two distinct answer labels");
    }
    if (min_words < 1 || max_words < min_words) {
        fail(ErrorKind::input, "invalid word-count band");
    }
    if (texts_per_bank < 2 || texts_per_bank % 2 != 0) {
        fail(ErrorKind::input, "texts_per_bank must be a positive even number");
    }
    if (!(rt_cap_s > 0.0)) {
        fail(ErrorKind::input, "rt_cap_s must be positive");
    }
}

ExperimentConfig default_experiment(const std::string& id) {
    ExperimentConfig cfg;
    cfg.id = id;
    if (id == "exp1") {
        cfg.labels = {"positive", "negative"};
        cfg.min_words = 32;
        cfg.max_words = 50;
    } else if (id == "exp2") {
        cfg.labels = {"action", "drama"};
        cfg.min_words = 19;
        cfg.max_words = 145;
    } else if (id == "exp3") {
        cfg.labels = {"horror", "comedy"};
        cfg.min_words = 19;
        cfg.max_words = 145;
    } else {
        fail(ErrorKind::not_found, "no built-in experiment '" + id + "'");
    }
    return cfg;
}

const explain::ImportanceVector& BankText::explanation(explain::Method m) const {
    auto it = explanations.find(m);
    if (it == explanations.end()) {
        fail(ErrorKind::not_found, "text " + text_id + " has no " +
                                       std::string(explain::to_string(m)) + " explanation");
    }
    return it->second;
}

const BankText& TrialBank::text(std::string_view text_id) const {
    for (const auto& t : texts) {
        if (t.text_id == text_id) {
            return t;
        }
    }
    fail(ErrorKind::not_found, "no text '" + std::string(text_id) + "' in bank " + config.id);
}

void TrialBank::validate() const {
    config.validate();
    if (texts.size() != config.texts_per_bank) {
        fail(ErrorKind::build, "bank holds " + std::to_string(texts.size()) + " texts, expected " +
                                   std::to_string(config.texts_per_bank));
    }
    std::array<std::size_t, 2> per_class{};
    for (const auto& t : texts) {
        if (t.label != 0 && t.label != 1) {
            fail(ErrorKind::build, "text " + t.text_id + " has an invalid label");
        }
        ++per_class[static_cast<std::size_t>(t.label)];
        if (t.words.size() < config.min_words || t.words.size() > config.max_words) {
            fail(ErrorKind::build, "text " + t.text_id + " is outside the word-count band");
        }
        if (!(t.probability > 0.5)) {
            fail(ErrorKind::build, "text " + t.text_id + " is not correctly classified");
        }
        for (auto m : explain::kDisplayMethods) {
            const auto& v = t.explanation(m);
            if (v.scores.size() != t.words.size()) {
                fail(ErrorKind::build, "text " + t.text_id + " has a mis-sized explanation");
            }
            for (double s : v.scores) {
                if (s < 0.0) {
                    fail(ErrorKind::build, "text " + t.text_id + " has a negative display score");
                }
            }
        }
    }
    if (per_class[0] != per_class[1]) {
        fail(ErrorKind::build, "bank classes are unbalanced");
    }
}

TrialBank build_trial_bank(const model::Transformer& model,
                           const std::vector<model::LabeledText>& corpus,
                           const ExperimentConfig& config) {
    config.validate();
    const std::size_t per_class_target = config.texts_per_bank / 2;

    std::vector<std::size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(config.seed, 0xba4c));
    rng.shuffle(std::span<std::size_t>(order));

    TrialBank bank;
    bank.config = config;
    std::array<std::size_t, 2> taken{};
    for (std::size_t idx : order) {
        const auto& item = corpus[idx];
        if (item.label != 0 && item.label != 1) {
            continue;
        }
        const auto cls = static_cast<std::size_t>(item.label);
        if (taken[cls] >= per_class_target) {
            continue;
        }
        const auto words = model::split_words(item.text);
        if (words.size() < config.min_words || words.size() > config.max_words ||
            words.size() + 1 > model.config().max_seq_len) {
            continue;
        }
        const auto seq = model.tokenize(item.text);
        const auto out = model.forward(seq);
        if (out.predicted_class != item.label) {
            continue;
        }
        ++taken[cls];

        BankText text;
        text.text_id = "t" + std::to_string(idx);
        text.words = seq.raw_words;
        text.label = item.label;
        text.probability = out.probabilities[cls];

        auto lime_cfg = config.lime;
        lime_cfg.seed = derive_seed(config.seed, idx, 1);
        auto shap_cfg = config.shap;
        shap_cfg.seed = derive_seed(config.seed, idx, 2);
        text.explanations[explain::Method::cls_a] =
            explain::cls_a_from_attention(out.attention, seq, out.predicted_class);
        text.explanations[explain::Method::lime] = explain::truncate_nonnegative(
            explain::lime_explain(model, seq, lime_cfg, item.label));
        text.explanations[explain::Method::shap] = explain::truncate_nonnegative(
            explain::shap_permutation(model, seq, shap_cfg, item.label));
        text.explanations[explain::Method::random] =
            explain::random_baseline(seq, derive_seed(config.seed, idx, 3));
        bank.texts.push_back(std::move(text));

        if (taken[0] >= per_class_target && taken[1] >= per_class_target) {
            break;
        }
    }
    if (taken[0] < per_class_target || taken[1] < per_class_target) {
        fail(ErrorKind::build,
             "not enough eligible texts: class 0 has " + std::to_string(taken[0]) + ", class 1 has " +
                 std::to_string(taken[1]) + ", need " + std::to_string(per_class_target) +
                 " each (correctly classified, " + std::to_string(config.min_words) + "-" +
                 std::to_string(config.max_words) + " words)");
    }
    bank.validate();
    return bank;
}

namespace {

ordered_json config_to_json(const ExperimentConfig& c) {
    ordered_json j;
    j["id"] = c.id;
    j["labels"] = c.labels;
    j["min_words"] = c.min_words;
    j["max_words"] = c.max_words;
    j["texts_per_bank"] = c.texts_per_bank;
    j["rt_cap_s"] = c.rt_cap_s;
    j["instructions"] = to_string(c.instructions);
    j["assignment"] = c.assignment == MethodAssignment::balanced ? "balanced" : "iid";
    j["lime"] = {{"n_samples", c.lime.n_samples},
                 {"ridge_lambda", c.lime.ridge_lambda},
                 {"kernel_width", c.lime.kernel_width ? ordered_json(*c.lime.kernel_width)
                                                      : ordered_json(nullptr)}};
    j["shap"] = {{"n_permutations", c.shap.n_permutations}};
    j["seed"] = c.seed;
    return j;
}

ExperimentConfig config_from_json(const ordered_json& j) {
    ExperimentConfig c;
    c.id = j.at("id").get<std::string>();
    c.labels = j.at("labels").get<std::array<std::string, 2>>();
    c.min_words = j.at("min_words").get<std::size_t>();
    c.max_words = j.at("max_words").get<std::size_t>();
    c.texts_per_bank = j.at("texts_per_bank").get<std::size_t>();
    c.rt_cap_s = j.at("rt_cap_s").get<double>();
    c.instructions = instruction_variant_from_string(j.at("instructions").get<std::string>());
    c.assignment = j.at("assignment") == "balanced" ? MethodAssignment::balanced
                                                    : MethodAssignment::iid;
    c.lime.n_samples = j.at("lime").at("n_samples").get<std::size_t>();
    c.lime.ridge_lambda = j.at("lime").at("ridge_lambda").get<double>();
    if (!j.at("lime").at("kernel_width").is_null()) {
        c.lime.kernel_width = j.at("lime").at("kernel_width").get<double>();
    }
    c.shap.n_permutations = j.at("shap").at("n_permutations").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

} // namespace

std::string bank_to_json(const TrialBank& bank) {
    ordered_json j;
    j["version"] = kBankVersion;
    j["config"] = config_to_json(bank.config);
    auto texts = ordered_json::array();
    for (const auto& t : bank.texts) {
        ordered_json jt;
        jt["text_id"] = t.text_id;
        jt["label"] = t.label;
        jt["probability"] = t.probability;
        jt["words"] = t.words;
        ordered_json ex;
        for (const auto& [method, v] : t.explanations) {
            ex[std::string(explain::to_string(method))] = v.scores;
        }
        jt["explanations"] = std::move(ex);
        texts.push_back(std::move(jt));
    }
    j["texts"] = std::move(texts);
    return j.dump();
}

TrialBank bank_from_json(std::string_view text) {
    try {
        const auto j = ordered_json::parse(text);
        if (j.at("version") != kBankVersion) {
            fail(ErrorKind::input, "unsupported trial bank version");
        }
        TrialBank bank;
        bank.config = config_from_json(j.at("config"));
        for (const auto& jt : j.at("texts")) {
            BankText t;
            t.text_id = jt.at("text_id").get<std::string>();
            t.label = jt.at("label").get<int>();
            t.probability = jt.at("probability").get<double>();
            t.words = jt.at("words").get<std::vector<std::string>>();
            for (const auto& [name, scores] : jt.at("explanations").items()) {
                const auto method = explain::method_from_string(name);
                explain::ImportanceVector v;
                v.method = method;
                v.scores = scores.get<std::vector<double>>();
                v.is_signed = false;
                v.target_class = method == explain::Method::random ? -1 : t.label;
                t.explanations[method] = std::move(v);
            }
            bank.texts.push_back(std::move(t));
        }
        bank.validate();
        return bank;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::input, std::string("malformed trial bank: ") + e.what());
    }
}

void save_bank(const TrialBank& bank, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        fail(ErrorKind::io, "cannot write trial bank " + path.string());
    }
    out << bank_to_json(bank) << '\n';
}

TrialBank load_bank(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorKind::io, "cannot read trial bank " + path.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return bank_from_json(buf.str());
}

} // namespace attnlens::experiment
