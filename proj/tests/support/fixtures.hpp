#pragma once

#include "attnlens/experiment/trial_bank.hpp"
#include "attnlens/rng.hpp"

#include <string>

namespace testing {

namespace ex = attnlens::experiment;
namespace md = attnlens::model;
using attnlens::explain::Method;

// Bank without a model: CLS_A and SHAP shade the text's own cue words, LIME
// the first word, RANDOM is random.
inline ex::TrialBank synthetic_bank(const std::string& id = "exp1", std::uint64_t seed = 1) {
    ex::TrialBank bank;
    bank.config = ex::default_experiment(id);
    const auto lex = md::task_lexicon(id);
    const auto corpus = md::cue_corpus(lex, bank.config.texts_per_bank, bank.config.min_words,
                                       bank.config.max_words, seed);
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        ex::BankText t;
        t.text_id = id + "-" + std::to_string(i);
        t.words = md::split_words(corpus[i].text);
        t.label = corpus[i].label;
        t.probability = 0.6 + 0.39 * static_cast<double>(i % 10) / 9.0;
        std::vector<double> cue(t.words.size(), 0.01), first(t.words.size(), 0.0);
        for (std::size_t w = 0; w < t.words.size(); ++w) {
            if (lex.cue_class(t.words[w]) == t.label) cue[w] = 1.0;
        }
        first[0] = 1.0;
        std::vector<double> rnd(t.words.size());
        attnlens::Rng rng(attnlens::derive_seed(seed, i));
        for (auto& x : rnd) x = rng.uniform();
        t.explanations[Method::cls_a] = {Method::cls_a, cue, false, t.label};
        t.explanations[Method::lime] = {Method::lime, first, false, t.label};
        t.explanations[Method::shap] = {Method::shap, cue, false, t.label};
        t.explanations[Method::random] = {Method::random, rnd, false, -1};
        bank.texts.push_back(std::move(t));
    }
    bank.validate();
    return bank;
}

} // namespace testing
