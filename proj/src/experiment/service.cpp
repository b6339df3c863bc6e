#include "attnlens/experiment/service.hpp"

#include "attnlens/error.hpp"
#include "attnlens/rng.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace attnlens::experiment {

using nlohmann::ordered_json;

namespace {

constexpr std::string_view kSessionVersion = "attnlens-session/1";

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::vector<std::string> lines;
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        return lines;
    }
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") != std::string::npos) {
            lines.push_back(line);
        }
    }
    return lines;
}

} // namespace

double SystemClock::now_seconds() const {
    using namespace std::chrono;
    return duration<double>(system_clock::now().time_since_epoch()).count();
}

struct ExperimentService::SessionState {
    Session session;
    std::optional<double> served_at; // when the cursor trial was first served
    mutable std::mutex mutex;
};

struct ExperimentService::ExperimentState {
    std::shared_ptr<const TrialBank> bank;
    std::vector<ResponseRecord> records;
    std::ofstream responses_log;
    std::ofstream sessions_log;
    mutable std::mutex mutex;
};

std::vector<TrialPlanEntry> make_trial_plan(const TrialBank& bank, std::uint64_t seed) {
    const std::size_t n = bank.texts.size();
    Rng rng(derive_seed(seed, 0x51a9));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(order));

    std::vector<explain::Method> methods(n);
    if (bank.config.assignment == MethodAssignment::balanced) {
        for (std::size_t i = 0; i < n; ++i) {
            methods[i] = explain::kDisplayMethods[i % explain::kDisplayMethods.size()];
        }
        rng.shuffle(std::span<explain::Method>(methods));
    } else {
        for (auto& m : methods) {
            m = explain::kDisplayMethods[rng.index(explain::kDisplayMethods.size())];
        }
    }
    std::vector<TrialPlanEntry> plan;
    plan.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        plan.push_back({bank.texts[order[i]].text_id, methods[i]});
    }
    return plan;
}

std::string make_session_id(std::string_view anonymized_participant,
                            std::string_view experiment_id, std::uint64_t seed) {
    const auto h = derive_seed(seed, fnv1a(anonymized_participant), fnv1a(experiment_id));
    char buf[24];
    std::snprintf(buf, sizeof buf, "s-%016llx", static_cast<unsigned long long>(h));
    return buf;
}

ExperimentService::ExperimentService(ServiceOptions options, std::shared_ptr<const Clock> clock)
    : options_(std::move(options)), clock_(std::move(clock)) {
    if (!clock_) {
        fail(ErrorKind::input, "experiment service needs a clock");
    }
    if (!options_.data_dir.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(options_.data_dir, ec);
        if (ec) {
            fail(ErrorKind::io, "cannot create data directory " + options_.data_dir.string());
        }
    }
}

ExperimentService::~ExperimentService() = default;

void ExperimentService::add_bank(TrialBank bank) {
    bank.validate();
    const std::string id = bank.config.id;
    std::unique_lock lock(mutex_);
    if (experiments_.contains(id)) {
        fail(ErrorKind::input, "experiment '" + id + "' is already registered");
    }
    auto exp = std::make_unique<ExperimentState>();
    exp->bank = std::make_shared<const TrialBank>(std::move(bank));
    if (!options_.data_dir.empty()) {
        replay(*exp);
        const auto responses = options_.data_dir / ("responses-" + id + ".jsonl");
        const auto sessions = options_.data_dir / ("sessions-" + id + ".jsonl");
        exp->responses_log.open(responses, std::ios::binary | std::ios::app);
        exp->sessions_log.open(sessions, std::ios::binary | std::ios::app);
        if (!exp->responses_log || !exp->sessions_log) {
            fail(ErrorKind::io, "cannot open logs for experiment " + id);
        }
    }
    experiments_.emplace(id, std::move(exp));
}

// Rebuilds sessions and cursors from the logs. Called with mutex_ held.
void ExperimentService::replay(ExperimentState& exp) {
    const auto& id = exp.bank->config.id;
    const auto session_lines = read_lines(options_.data_dir / ("sessions-" + id + ".jsonl"));
    for (std::size_t i = 0; i < session_lines.size(); ++i) {
        ordered_json j;
        try {
            j = ordered_json::parse(session_lines[i]);
        } catch (const nlohmann::json::exception&) {
            if (i + 1 == session_lines.size()) {
                break; // torn final write
            }
            fail(ErrorKind::io, "corrupt session log for experiment " + id);
        }
        auto state = std::make_unique<SessionState>();
        Session& s = state->session;
        s.session_id = j.at("session_id").get<std::string>();
        s.participant = j.at("participant").get<std::string>();
        s.experiment_id = id;
        s.seed = j.at("seed").get<std::uint64_t>();
        s.created_at = j.at("created_at").get<double>();
        s.instructions = instruction_variant_from_string(j.at("instructions").get<std::string>());
        s.plan = make_trial_plan(*exp.bank, s.seed);
        sessions_.emplace(s.session_id, std::move(state));
    }
    const auto response_lines = read_lines(options_.data_dir / ("responses-" + id + ".jsonl"));
    for (std::size_t i = 0; i < response_lines.size(); ++i) {
        ResponseRecord r;
        try {
            r = record_from_json(response_lines[i]);
        } catch (const Error&) {
            if (i + 1 == response_lines.size()) {
                break;
            }
            fail(ErrorKind::io, "corrupt response log for experiment " + id);
        }
        auto it = sessions_.find(r.session_id);
        if (it == sessions_.end() || it->second->session.cursor != r.trial_index) {
            fail(ErrorKind::io, "response log for " + id + " is inconsistent with its sessions");
        }
        ++it->second->session.cursor;
        exp.records.push_back(std::move(r));
    }
}

std::shared_ptr<const TrialBank> ExperimentService::bank(const std::string& experiment_id) const {
    return find_experiment(experiment_id).bank;
}

std::vector<std::string> ExperimentService::experiment_ids() const {
    std::shared_lock lock(mutex_);
    std::vector<std::string> ids;
    for (const auto& [id, _] : experiments_) {
        ids.push_back(id);
    }
    return ids;
}

ExperimentService::ExperimentState& ExperimentService::find_experiment(
    const std::string& experiment_id) const {
    std::shared_lock lock(mutex_);
    auto it = experiments_.find(experiment_id);
    if (it == experiments_.end()) {
        fail(ErrorKind::not_found, "unknown experiment '" + experiment_id + "'");
    }
    return *it->second;
}

ExperimentService::SessionState& ExperimentService::find_session(
    const std::string& session_id) const {
    std::shared_lock lock(mutex_);
    auto it = sessions_.find(session_id);
    if (it == sessions_.end()) {
        fail(ErrorKind::not_found, "unknown session '" + session_id + "'");
    }
    return *it->second;
}

Session ExperimentService::create_session(const std::string& participant_id,
                                          const std::string& experiment_id, std::uint64_t seed) {
    if (participant_id.empty()) {
        fail(ErrorKind::input, "participant id is empty");
    }
    auto& exp = find_experiment(experiment_id);
    const std::string participant = anonymize_participant(participant_id);
    const std::string session_id = make_session_id(participant, experiment_id, seed);

    std::unique_lock lock(mutex_);
    if (auto it = sessions_.find(session_id); it != sessions_.end()) {
        std::lock_guard session_lock(it->second->mutex);
        return it->second->session;
    }
    auto state = std::make_unique<SessionState>();
    Session& s = state->session;
    s.session_id = session_id;
    s.participant = participant;
    s.experiment_id = experiment_id;
    s.seed = seed;
    s.plan = make_trial_plan(*exp.bank, seed);
    s.instructions = exp.bank->config.instructions;
    s.created_at = clock_->now_seconds();
    {
        std::lock_guard log_lock(exp.mutex);
        if (exp.sessions_log.is_open()) {
            ordered_json j;
            j["version"] = kSessionVersion;
            j["session_id"] = s.session_id;
            j["participant"] = s.participant;
            j["experiment_id"] = s.experiment_id;
            j["seed"] = s.seed;
            j["created_at"] = s.created_at;
            j["instructions"] = to_string(s.instructions);
            exp.sessions_log << j.dump() << '\n' << std::flush;
            if (!exp.sessions_log) {
                fail(ErrorKind::io, "failed to append to the session log");
            }
        }
    }
    Session copy = s;
    sessions_.emplace(session_id, std::move(state));
    return copy;
}

Session ExperimentService::session(const std::string& session_id) const {
    auto& state = find_session(session_id);
    std::lock_guard lock(state.mutex);
    return state.session;
}

std::optional<render::TrialPayload> ExperimentService::next_trial(const std::string& session_id) {
    auto& state = find_session(session_id);
    auto& exp = find_experiment(state.session.experiment_id);
    std::lock_guard lock(state.mutex);
    const Session& s = state.session;
    if (s.complete()) {
        return std::nullopt;
    }
    if (!state.served_at) {
        state.served_at = clock_->now_seconds();
    }
    const auto& entry = s.plan[s.cursor];
    const auto& text = exp.bank->text(entry.text_id);
    const auto shades = render::scores_to_shades(text.explanation(entry.method));
    return render::trial_payload(s.session_id, s.cursor, s.plan.size(), text.words, shades,
                                 exp.bank->config.labels);
}

ResponseRecord ExperimentService::submit_response(const std::string& session_id,
                                                  std::size_t trial_index,
                                                  const std::string& answer,
                                                  double reaction_time_s) {
    auto& state = find_session(session_id);
    auto& exp = find_experiment(state.session.experiment_id);
    const auto& cfg = exp.bank->config;

    std::lock_guard lock(state.mutex);
    Session& s = state.session;
    if (s.complete()) {
        fail(ErrorKind::sequencing, "session " + session_id + " is already complete");
    }
    if (trial_index != s.cursor) {
        fail(ErrorKind::sequencing, "expected trial " + std::to_string(s.cursor) + ", got " +
                                        std::to_string(trial_index));
    }
    if (answer != cfg.labels[0] && answer != cfg.labels[1]) {
        fail(ErrorKind::input, "answer must be '" + cfg.labels[0] + "' or '" + cfg.labels[1] + "'");
    }
    if (!std::isfinite(reaction_time_s)) {
        fail(ErrorKind::input, "reaction time must be a finite number");
    }

    const auto& entry = s.plan[s.cursor];
    const auto& text = exp.bank->text(entry.text_id);
    const auto& shown = text.explanation(entry.method);

    ResponseRecord r;
    r.session_id = s.session_id;
    r.participant = s.participant;
    r.experiment_id = s.experiment_id;
    r.trial_index = s.cursor;
    r.trial_number = s.cursor + 1;
    r.text_id = text.text_id;
    r.method = entry.method;
    r.given_answer = answer;
    r.expected_class = text.label;
    r.expected_answer = cfg.labels[static_cast<std::size_t>(text.label)];
    r.accurate = answer == r.expected_answer;
    r.reaction_time_s = reaction_time_s;
    r.probability = text.probability;
    r.review_length = text.words.size();
    r.impact_positions = impact_positions(shown.scores);
    if (reaction_time_s <= 0.0) {
        r.validity = RtValidity::nonpositive;
    } else if (reaction_time_s > cfg.rt_cap_s) {
        r.validity = RtValidity::over_cap;
    } else if (options_.check_server_elapsed && state.served_at &&
               reaction_time_s >
                   clock_->now_seconds() - *state.served_at + options_.elapsed_tolerance_s) {
        r.validity = RtValidity::exceeds_elapsed;
    }

    {
        std::lock_guard log_lock(exp.mutex);
        if (exp.responses_log.is_open()) {
            exp.responses_log << record_to_json(r) << '\n' << std::flush;
            if (!exp.responses_log) {
                fail(ErrorKind::io, "failed to append to the response log");
            }
        }
        exp.records.push_back(r);
    }
    ++s.cursor;
    state.served_at.reset();
    return r;
}

std::vector<ResponseRecord> ExperimentService::records(const std::string& experiment_id) const {
    auto& exp = find_experiment(experiment_id);
    std::lock_guard lock(exp.mutex);
    return exp.records;
}

std::string ExperimentService::export_responses(const std::string& experiment_id) const {
    std::string out;
    for (const auto& r : records(experiment_id)) {
        out += record_to_json(r);
        out.push_back('\n');
    }
    return out;
}

} // namespace attnlens::experiment
