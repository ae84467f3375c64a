#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "pfb/arm_sim.hpp"
#include "pfb/feature_codec.hpp"
#include "pfb/feedback.hpp"
#include "pfb/gvf_learner.hpp"
#include "pfb/trial_log.hpp"
#include "pfb/user_model.hpp"

namespace pfb {

struct LearnerConfig {
    double alpha = 0.1;
    double gamma = 0.92;
    // Keep learning after training (weights are otherwise frozen).
    bool continue_learning = false;
};

void validate(const LearnerConfig& config);

struct FreshLearning {};
struct FromSnapshotFile {
    std::string path;
};
struct FromSnapshot {
    WeightSnapshot snapshot;
};
struct NoLearner {};
using LearnerSource = std::variant<FreshLearning, FromSnapshotFile, FromSnapshot, NoLearner>;

// Everything one run shares across tasks; mirrors the config file.
struct ExperimentConfig {
    SimConfig sim;
    CodecConfig codec;
    FeedbackThresholds thresholds;
    UserModelConfig user;
    LearnerConfig learner;
    std::int64_t duration_ticks = 6000;
};

void validate(const ExperimentConfig& config);

struct TrialConfig {
    FeedbackMode task = FeedbackMode::Training;
    std::int64_t duration_ticks = 6000;
    SimConfig sim;
    CodecConfig codec;
    FeedbackThresholds thresholds;
    UserModelConfig user;
    LearnerConfig learner;
    LearnerSource learner_source = FreshLearning{};
    std::uint64_t seed = 0;
};

TrialConfig make_trial_config(const ExperimentConfig& base, FeedbackMode task, std::uint64_t seed,
                              LearnerSource source);

// Throws ConfigError for invalid fields or a task/learner-source mismatch.
void validate(const TrialConfig& config);

// One tick of the closed loop, shared by the batch harness and the live
// session. Order within a tick: sense, predict, decide, act, step, learn.
class TrialEngine {
public:
    struct Observation {
        FeatureVector features;
        int bin = 0;
        double prediction = 0.0;
        FeedbackDecision decision;
    };

    // `learner` may be empty (predictions are then reported as 0).
    TrialEngine(FeedbackMode task, const SimConfig& sim, const CodecConfig& codec,
                const FeedbackThresholds& thresholds, std::optional<GvfLearner<double>> learner, bool learning);

    const ServoState& state() const { return state_; }
    const Observation& observation() const { return observation_; }
    FeedbackMode task() const { return task_; }
    const std::optional<GvfLearner<double>>& learner() const { return learner_; }
    std::optional<GvfLearner<double>>& learner() { return learner_; }

    // Applies `cmd` for the current tick and returns the record for it.
    TrialStepRecord advance(JoystickCommand cmd);

private:
    void observe();

    FeedbackMode task_;
    SimConfig sim_;
    CodecConfig codec_;
    FeedbackThresholds thresholds_;
    std::optional<GvfLearner<double>> learner_;
    bool learning_;
    TactorLatch latch_;
    ServoState state_;
    Observation observation_;
};

struct TrialResult {
    TrialLog log;
    TrialMetrics metrics;
    // Present for training trials: the learned weights, frozen.
    std::optional<WeightSnapshot> snapshot;
};

// Called after every tick with that tick's record (used for wall-clock
// pacing); must not throw.
using TickHook = std::function<void(const TrialStepRecord&)>;

// Throws RuntimeError("no_snapshot") when a required snapshot is missing or
// unreadable; nothing is returned on error.
TrialResult run_trial(const TrialConfig& config, const TickHook& on_tick = {});

inline constexpr std::array<FeedbackMode, 4> kProtocolOrder = {FeedbackMode::Training, FeedbackMode::NoFeedback,
                                                               FeedbackMode::Reactive, FeedbackMode::Predictive};

struct ProtocolReport {
    std::uint64_t seed = 0;
    std::array<TrialResult, 4> trials;  // kProtocolOrder

    const TrialResult& trial(FeedbackMode mode) const;
    double load_ratio(FeedbackMode numerator, FeedbackMode denominator) const;
    bool ordering_holds() const;  // NoFeedback > Reactive > Predictive
};

// Training, then NoFeedback, Reactive and Predictive with the frozen
// training snapshot.
ProtocolReport run_protocol(const ExperimentConfig& base, std::uint64_t seed);

// Bins lying entirely between the walls, and entirely beyond them.
struct BinRegions {
    std::vector<int> interior;
    std::vector<int> beyond_walls;
};

BinRegions bin_regions(const SimConfig& sim, const CodecConfig& codec);
double fraction_in(const TrialMetrics& metrics, const std::vector<int>& bins);

// Structured report: per-task metrics plus cross-task comparisons.
nlohmann::ordered_json to_json(const ProtocolReport& report, const ExperimentConfig& config);

// Flat per-bin table: seed,task,bin,visits,visit_fraction,summed_load.
std::string per_bin_csv_header();
std::string per_bin_csv_rows(std::uint64_t seed, FeedbackMode task, const TrialMetrics& metrics);

}  // namespace pfb
