#include "attnlens/experiment/bots.hpp"

#include "attnlens/error.hpp"
#include "attnlens/rng.hpp"

#include <algorithm>
#include <cmath>

namespace attnlens::experiment {

namespace {

double logit(double p) { return std::log(p / (1.0 - p)); }
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

} // namespace

void BotProfile::validate() const {
    if (!(base_accuracy >= 0.0 && base_accuracy <= 1.0)) {
        fail(ErrorKind::input, "bot base accuracy must lie in [0, 1]");
    }
    if (!std::isfinite(rt_log_mean) || !(rt_log_sigma >= 0.0) || !std::isfinite(rt_log_sigma)) {
        fail(ErrorKind::input, "bot reaction-time parameters must be finite, sigma >= 0");
    }
    if (!(cue_sensitivity >= 0.0 && cue_sensitivity < 1.0)) {
        fail(ErrorKind::input, "bot cue sensitivity must lie in [0, 1)");
    }
    if (!(misled_penalty >= 0.0) || !std::isfinite(misled_penalty) ||
        !std::isfinite(cue_accuracy_bonus) || !std::isfinite(clarity_sensitivity) ||
        !std::isfinite(length_sensitivity)) {
        fail(ErrorKind::input, "bot sensitivities must be finite, penalty >= 0");
    }
}

BotProfile cue_sensitive_profile(const std::string& experiment_id, std::uint64_t seed) {
    BotProfile p;
    p.base_accuracy = 0.75;
    p.rt_log_mean = std::log(9.0);
    p.rt_log_sigma = 0.35;
    p.cue_sensitivity = 0.3;
    p.misled_penalty = 0.2;
    p.cue_accuracy_bonus = 0.6;
    p.clarity_sensitivity = 0.4;
    p.length_sensitivity = 0.5;
    p.lexicon = model::task_lexicon(experiment_id);
    p.seed = seed;
    return p;
}

std::vector<Session> simulate_participants(ExperimentService& service, ManualClock& clock,
                                           const std::string& experiment_id, std::size_t n_bots,
                                           const BotProfile& profile) {
    profile.validate();
    std::vector<Session> sessions;
    sessions.reserve(n_bots);
    for (std::size_t b = 0; b < n_bots; ++b) {
        Rng rng(derive_seed(profile.seed, 0xb07, b));
        const auto session_seed = derive_seed(profile.seed, 0x5e55, b);
        const Session s =
            service.create_session("bot-" + std::to_string(b), experiment_id, session_seed);

        while (auto payload = service.next_trial(s.session_id)) {
            std::array<int, 2> counts{0, 0};
            for (const auto& w : payload->words) {
                const int c = profile.lexicon.cue_class(w);
                if (c >= 0) {
                    ++counts[static_cast<std::size_t>(c)];
                }
            }
            int reading = counts[0] > counts[1] ? 0 : 1;
            if (counts[0] == counts[1]) {
                reading = static_cast<int>(rng.index(2));
            }
            const int margin = std::abs(counts[0] - counts[1]);

            int top_cue = -1;
            const auto& alphas = payload->alphas;
            const auto top = std::max_element(alphas.begin(), alphas.end());
            if (top != alphas.end() && *top > 0.0) {
                top_cue = profile.lexicon.cue_class(
                    payload->words[static_cast<std::size_t>(top - alphas.begin())]);
            }
            const bool helpful = top_cue >= 0 && top_cue == reading;
            const bool misleading = top_cue >= 0 && top_cue != reading;

            double rt = std::exp(profile.rt_log_mean + profile.rt_log_sigma * rng.normal());
            rt *= std::pow(static_cast<double>(payload->words.size()) / 40.0,
                           profile.length_sensitivity);
            if (helpful) {
                rt *= 1.0 - profile.cue_sensitivity;
            } else if (misleading) {
                rt *= 1.0 + profile.misled_penalty;
            }

            bool keep = true;
            if (profile.base_accuracy < 1.0) {
                double z = profile.base_accuracy <= 0.0 ? -40.0 : logit(profile.base_accuracy);
                z += profile.clarity_sensitivity * (margin - 1);
                if (helpful) {
                    z += profile.cue_accuracy_bonus * margin;
                }
                keep = rng.bernoulli(sigmoid(z));
            }
            const int answer = keep ? reading : 1 - reading;

            clock.advance(rt);
            service.submit_response(s.session_id, payload->trial_index,
                                    payload->answers[static_cast<std::size_t>(answer)], rt);
        }
        sessions.push_back(service.session(s.session_id));
    }
    return sessions;
}

} // namespace attnlens::experiment
