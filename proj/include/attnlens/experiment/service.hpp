#pragma once

#include "attnlens/experiment/records.hpp"
#include "attnlens/experiment/trial_bank.hpp"
#include "attnlens/render/highlight.hpp"

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

namespace attnlens::experiment {

class Clock {
public:
    virtual ~Clock() = default;
    virtual double now_seconds() const = 0;
};

class SystemClock final : public Clock {
public:
    double now_seconds() const override;
};

// Test and simulation clock, advanced explicitly.
class ManualClock final : public Clock {
public:
    explicit ManualClock(double start = 0.0) : now_(start) {}
    double now_seconds() const override { return now_.load(); }
    void advance(double seconds) { now_.store(now_.load() + seconds); }

private:
    std::atomic<double> now_;
};

struct TrialPlanEntry {
    std::string text_id;
    explain::Method method = explain::Method::random;

    bool operator==(const TrialPlanEntry&) const = default;
};

struct Session {
    std::string session_id;
    std::string participant; // anonymized
    std::string experiment_id;
    std::uint64_t seed = 0;
    std::vector<TrialPlanEntry> plan;
    std::size_t cursor = 0;
    InstructionVariant instructions = InstructionVariant::plain;
    double created_at = 0.0;

    bool complete() const noexcept { return cursor >= plan.size(); }
    bool operator==(const Session&) const = default;
};

// Shuffled text order plus per-trial methods over CLS_A, LIME, SHAP and
// RANDOM (i.i.d. uniform, or equal blocks when the bank asks for balance).
std::vector<TrialPlanEntry> make_trial_plan(const TrialBank& bank, std::uint64_t seed);

std::string make_session_id(std::string_view anonymized_participant,
                            std::string_view experiment_id, std::uint64_t seed);

struct ServiceOptions {
    // Directory for responses-{experiment}.jsonl and sessions-{experiment}.jsonl;
    // empty keeps everything in memory.
    std::filesystem::path data_dir;
    // Flag reaction times longer than the server-observed interval between
    // serving a trial and receiving its answer (plus tolerance).
    bool check_server_elapsed = true;
    double elapsed_tolerance_s = 1.0;
};

// Owns trial banks, sessions and the append-only response log. Sessions may
// be driven concurrently; operations on one session are serialized.
class ExperimentService {
public:
    explicit ExperimentService(ServiceOptions options = {},
                               std::shared_ptr<const Clock> clock = std::make_shared<SystemClock>());
    ~ExperimentService();

    ExperimentService(const ExperimentService&) = delete;
    ExperimentService& operator=(const ExperimentService&) = delete;

    // Registers an immutable bank and replays any persisted log for it.
    void add_bank(TrialBank bank);
    std::shared_ptr<const TrialBank> bank(const std::string& experiment_id) const;
    std::vector<std::string> experiment_ids() const;

    // Same (participant, experiment, seed) returns the existing session.
    Session create_session(const std::string& participant_id, const std::string& experiment_id,
                           std::uint64_t seed);
    Session session(const std::string& session_id) const;

    // Payload for the cursor trial, or nullopt once all trials are answered.
    std::optional<render::TrialPayload> next_trial(const std::string& session_id);

    ResponseRecord submit_response(const std::string& session_id, std::size_t trial_index,
                                   const std::string& answer, double reaction_time_s);

    std::vector<ResponseRecord> records(const std::string& experiment_id) const;
    // Line-delimited JSON of every record, in submission order.
    std::string export_responses(const std::string& experiment_id) const;

private:
    struct SessionState;
    struct ExperimentState;

    SessionState& find_session(const std::string& session_id) const;
    ExperimentState& find_experiment(const std::string& experiment_id) const;
    void replay(ExperimentState& exp);

    ServiceOptions options_;
    std::shared_ptr<const Clock> clock_;
    mutable std::shared_mutex mutex_;
    std::map<std::string, std::unique_ptr<ExperimentState>> experiments_;
    std::map<std::string, std::unique_ptr<SessionState>> sessions_;
};

} // namespace attnlens::experiment
