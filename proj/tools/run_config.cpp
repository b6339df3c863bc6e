#include "run_config.hpp"

#include "attnlens/error.hpp"

#include <set>

namespace attnlens::cli {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::string& section, const std::set<std::string>& allowed) {
    if (!obj.is_object()) {
        fail(ErrorKind::input, "config section '" + section + "' must be an object");
    }
    for (const auto& [key, _] : obj.items()) {
        if (!allowed.contains(key)) {
            fail(ErrorKind::input, "unknown config key '" + section + "." + key + "'");
        }
    }
}

template <class T>
void take(const json& obj, const char* key, T& dst) {
    auto it = obj.find(key);
    if (it == obj.end()) return;
    try {
        dst = it->get<T>();
    } catch (const json::exception&) {
        fail(ErrorKind::input, std::string("config key '") + key + "' has the wrong type");
    }
}

template <class T>
void take(const json& obj, const char* key, std::optional<T>& dst) {
    if (obj.contains(key)) {
        T v{};
        take(obj, key, v);
        dst = v;
    }
}

} // namespace

void RunConfig::apply_file(const json& j) {
    check_keys(j, "<root>",
               {"seed", "experiment", "paths", "model", "train", "vocab", "generate", "bank", "bots",
                "analysis", "serve"});
    take(j, "seed", seed);
    take(j, "experiment", experiment);
    experiment_given = experiment_given || j.contains("experiment");
    if (auto p = j.find("paths"); p != j.end()) {
        check_keys(*p, "paths", {"corpus", "model", "banks", "responses", "out"});
        take(*p, "corpus", corpus);
        take(*p, "model", model);
        take(*p, "banks", banks);
        take(*p, "responses", responses);
        take(*p, "out", out);
    }
    if (auto m = j.find("model"); m != j.end()) {
        check_keys(*m, "model", {"n_layers", "n_heads", "d_model", "d_k", "d_ff", "max_seq_len"});
        take(*m, "n_layers", model_config.n_layers);
        take(*m, "n_heads", model_config.n_heads);
        take(*m, "d_model", model_config.d_model);
        take(*m, "d_k", model_config.d_k);
        take(*m, "d_ff", model_config.d_ff);
        take(*m, "max_seq_len", model_config.max_seq_len);
    }
    if (auto t = j.find("train"); t != j.end()) {
        check_keys(*t, "train", {"epochs", "learning_rate", "batch_size", "plateau_factor",
                                 "plateau_patience"});
        take(*t, "epochs", train.epochs);
        take(*t, "learning_rate", train.learning_rate);
        take(*t, "batch_size", train.batch_size);
        take(*t, "plateau_factor", train.plateau_factor);
        take(*t, "plateau_patience", train.plateau_patience);
    }
    if (auto v = j.find("vocab"); v != j.end()) {
        check_keys(*v, "vocab", {"max_words", "min_count"});
        take(*v, "max_words", vocab_max_words);
        take(*v, "min_count", vocab_min_count);
    }
    if (auto g = j.find("generate"); g != j.end()) {
        check_keys(*g, "generate", {"n", "min_words", "max_words"});
        take(*g, "n", corpus_size);
        take(*g, "min_words", corpus_min_words);
        take(*g, "max_words", corpus_max_words);
    }
    if (auto b = j.find("bank"); b != j.end()) {
        check_keys(*b, "bank", {"lime_samples", "shap_permutations", "texts_per_bank", "min_words",
                                "max_words", "assignment", "instructions", "rt_cap_s"});
        take(*b, "lime_samples", lime_samples);
        take(*b, "shap_permutations", shap_permutations);
        take(*b, "texts_per_bank", texts_per_bank);
        take(*b, "min_words", bank_min_words);
        take(*b, "max_words", bank_max_words);
        take(*b, "rt_cap_s", rt_cap_s);
        if (b->contains("assignment")) {
            std::string a;
            take(*b, "assignment", a);
            if (a != "iid" && a != "balanced") {
                fail(ErrorKind::input, "bank.assignment must be \"iid\" or \"balanced\"");
            }
            assignment = a == "iid" ? experiment::MethodAssignment::iid
                                    : experiment::MethodAssignment::balanced;
        }
        if (b->contains("instructions")) {
            std::string s;
            take(*b, "instructions", s);
            instructions = experiment::instruction_variant_from_string(s);
        }
    }
    if (auto b = j.find("bots"); b != j.end()) {
        check_keys(*b, "bots", {"count", "base_accuracy", "rt_log_mean", "rt_log_sigma",
                                "cue_sensitivity", "misled_penalty", "cue_accuracy_bonus",
                                "clarity_sensitivity", "length_sensitivity"});
        take(*b, "count", bots);
        for (const auto& [key, value] : b->items()) {
            if (key == "count") continue;
            if (!value.is_number()) {
                fail(ErrorKind::input, "config key 'bots." + key + "' must be a number");
            }
            bot_overrides[key] = value;
        }
    }
    if (auto a = j.find("analysis"); a != j.end()) {
        check_keys(*a, "analysis", {"iterations", "bins", "rounds", "learning_rate", "n_pairs",
                                    "n_positions", "threads", "high_probability_quantile"});
        take(*a, "iterations", analysis.iterations);
        take(*a, "bins", analysis.ebm.bins);
        take(*a, "rounds", analysis.ebm.rounds);
        take(*a, "learning_rate", analysis.ebm.learning_rate);
        take(*a, "n_pairs", analysis.ebm.n_pairs);
        take(*a, "n_positions", analysis.n_positions);
        take(*a, "threads", analysis.threads);
        take(*a, "high_probability_quantile", analysis.high_probability_quantile);
    }
    if (auto s = j.find("serve"); s != j.end()) {
        check_keys(*s, "serve", {"addr"});
        take(*s, "addr", addr);
    }
}

json RunConfig::to_json() const {
    json j;
    j["subcommand"] = subcommand;
    j["experiment"] = experiment;
    j["seed"] = seed;
    j["paths"] = {{"corpus", corpus}, {"model", model},  {"banks", banks},
                  {"responses", responses}, {"out", out}};
    j["model"] = {{"n_layers", model_config.n_layers}, {"n_heads", model_config.n_heads},
                  {"d_model", model_config.d_model},   {"d_k", model_config.d_k},
                  {"d_ff", model_config.d_ff},         {"max_seq_len", model_config.max_seq_len}};
    j["train"] = {{"epochs", train.epochs},
                  {"learning_rate", train.learning_rate},
                  {"batch_size", train.batch_size},
                  {"plateau_factor", train.plateau_factor},
                  {"plateau_patience", train.plateau_patience}};
    j["vocab"] = {{"max_words", vocab_max_words}, {"min_count", vocab_min_count}};
    const auto ec = experiment_config();
    j["bank"] = {{"lime_samples", lime_samples},
                 {"shap_permutations", shap_permutations},
                 {"texts_per_bank", ec.texts_per_bank},
                 {"min_words", ec.min_words},
                 {"max_words", ec.max_words},
                 {"assignment", ec.assignment == experiment::MethodAssignment::iid ? "iid" : "balanced"},
                 {"instructions", experiment::to_string(ec.instructions)},
                 {"rt_cap_s", ec.rt_cap_s}};
    j["bots"] = bot_overrides;
    j["bots"]["count"] = bots;
    j["analysis"] = {{"iterations", analysis.iterations},
                     {"bins", analysis.ebm.bins},
                     {"rounds", analysis.ebm.rounds},
                     {"learning_rate", analysis.ebm.learning_rate},
                     {"n_pairs", analysis.ebm.n_pairs},
                     {"n_positions", analysis.n_positions},
                     {"threads", analysis.threads}};
    j["serve"] = {{"addr", addr}};
    j["method"] = method;
    return j;
}

experiment::ExperimentConfig RunConfig::experiment_config() const {
    auto c = experiment::default_experiment(experiment);
    c.seed = seed;
    c.lime.n_samples = lime_samples;
    c.shap.n_permutations = shap_permutations;
    if (texts_per_bank) c.texts_per_bank = *texts_per_bank;
    if (bank_min_words) c.min_words = *bank_min_words;
    if (bank_max_words) c.max_words = *bank_max_words;
    if (assignment) c.assignment = *assignment;
    if (instructions) c.instructions = *instructions;
    if (rt_cap_s) c.rt_cap_s = *rt_cap_s;
    return c;
}

experiment::BotProfile RunConfig::bot_profile(const std::string& experiment_id) const {
    auto p = experiment::cue_sensitive_profile(experiment_id, seed);
    const json& o = bot_overrides;
    take(o, "base_accuracy", p.base_accuracy);
    take(o, "rt_log_mean", p.rt_log_mean);
    take(o, "rt_log_sigma", p.rt_log_sigma);
    take(o, "cue_sensitivity", p.cue_sensitivity);
    take(o, "misled_penalty", p.misled_penalty);
    take(o, "cue_accuracy_bonus", p.cue_accuracy_bonus);
    take(o, "clarity_sensitivity", p.clarity_sensitivity);
    take(o, "length_sensitivity", p.length_sensitivity);
    p.validate();
    return p;
}

} // namespace attnlens::cli
