#pragma once

#include <cstdint>
#include <optional>
#include <utility>

#include "pfb/arm_sim.hpp"
#include "pfb/feedback.hpp"

namespace pfb {

// Scripted stand-in for a human operator. All constants are behavioral
// guesses, not measured values.
struct UserModelConfig {
    double reaction_latency_ms = 200.0;
    // Joystick magnitude while approaching a wall in the test tasks.
    double approach_speed = 1.0;
    // Joystick magnitude during the training task (deliberate, slower sweeps).
    double training_speed = 0.25;
    double center_pause_ms = 800.0;
    // How long the training operator keeps pushing once the tactor is on.
    double training_hold_ms = 250.0;
    // Per-tick bias on the operator's self-estimate in the no-feedback task.
    // Unset: drawn once per trial, magnitude uniform in
    // [drift_bias_min, drift_bias_max] with a random sign.
    std::optional<double> drift_bias;
    double drift_bias_min = 0.005;
    double drift_bias_max = 0.02;
    double estimate_noise_std = 0.05;
    std::uint64_t rng_seed = 0;
};

void validate(const UserModelConfig& config);

// What the operator knows about the arm without seeing it.
struct Workspace {
    double dt_ms = 50.0;
    double max_speed_deg_s = 45.0;
    double left_wall_deg = 121.875;
    double right_wall_deg = 178.125;
    double center_deg = 150.0;

    bool operator==(const Workspace&) const = default;
};

Workspace workspace_of(const SimConfig& sim);

enum class OperatorPhase { ApproachLeft, ApproachRight, Pressing, Retreating, Pausing };

struct OperatorState {
    OperatorPhase phase = OperatorPhase::ApproachLeft;
    double internal_estimate_deg = 0.0;
    std::optional<std::int64_t> tactor_seen_at;

    std::int64_t tick = 0;
    // +1 toward the right wall, -1 toward the left.
    int target = -1;
    std::optional<std::int64_t> reversal_at;
    std::int64_t phase_started_at = 0;
    bool previous_tactor = false;
    double drift_bias = 0.0;

    // Tick counts derived from the config and the control period.
    int latency_ticks = 0;
    int hold_ticks = 0;
    int pause_ticks = 0;
    Workspace workspace;

    bool operator==(const OperatorState&) const = default;
};

struct OperatorOutput {
    JoystickCommand command;
    OperatorState state;
};

OperatorState operator_reset(const UserModelConfig& config, FeedbackMode task, const Workspace& workspace);

// One control tick. The operator observes only the tactor flag and its own
// issued commands; the returned state carries the dead-reckoned estimate.
OperatorOutput operator_step(const OperatorState& op, bool observed_tactor, const UserModelConfig& config,
                             FeedbackMode task);

}  // namespace pfb
