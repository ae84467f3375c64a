#include "pfb/user_model.hpp"

#include <cmath>

#include "pfb/error.hpp"
#include "pfb/random.hpp"

namespace pfb {

namespace {

int to_ticks(double ms, double dt_ms) { return static_cast<int>(std::lround(ms / dt_ms)); }

OperatorPhase approach_phase(int target) {
    return target < 0 ? OperatorPhase::ApproachLeft : OperatorPhase::ApproachRight;
}

double wall_for(const Workspace& ws, int target) { return target < 0 ? ws.left_wall_deg : ws.right_wall_deg; }

bool is_approach(OperatorPhase p) { return p == OperatorPhase::ApproachLeft || p == OperatorPhase::ApproachRight; }

void begin_approach(OperatorState& s, int target) {
    s.target = target;
    s.phase = approach_phase(target);
    s.phase_started_at = s.tick;
    s.tactor_seen_at.reset();
    s.reversal_at.reset();
}

double training_command(OperatorState& s, bool tactor, const UserModelConfig& cfg) {
    const Workspace& ws = s.workspace;
    switch (s.phase) {
        case OperatorPhase::ApproachLeft:
        case OperatorPhase::ApproachRight:
            if (tactor) {
                s.phase = OperatorPhase::Pressing;
                s.phase_started_at = s.tick;
                s.tactor_seen_at = s.tick;
            }
            return s.target * cfg.training_speed;
        case OperatorPhase::Pressing:
            if (s.tick - s.tactor_seen_at.value_or(s.tick) >= s.hold_ticks) {
                s.target = -s.target;
                s.phase = OperatorPhase::Retreating;
                s.phase_started_at = s.tick;
                s.tactor_seen_at.reset();
                return s.target * cfg.training_speed;
            }
            return s.target * cfg.training_speed;
        case OperatorPhase::Retreating:
            if ((s.internal_estimate_deg - ws.center_deg) * s.target >= 0.0) {
                s.phase = OperatorPhase::Pausing;
                s.phase_started_at = s.tick;
                if (s.pause_ticks > 0) return 0.0;
                begin_approach(s, s.target);
            }
            return s.target * cfg.training_speed;
        case OperatorPhase::Pausing:
            if (s.tick - s.phase_started_at >= s.pause_ticks) {
                begin_approach(s, s.target);
                return s.target * cfg.training_speed;
            }
            return 0.0;
    }
    return 0.0;
}

double test_command(OperatorState& s, bool onset, const UserModelConfig& cfg, FeedbackMode task) {
    if (!is_approach(s.phase)) begin_approach(s, s.target);

    if (task == FeedbackMode::NoFeedback) {
        if ((s.internal_estimate_deg - wall_for(s.workspace, s.target)) * s.target >= 0.0)
            begin_approach(s, -s.target);
        return s.target * cfg.approach_speed;
    }

    if (onset && !s.tactor_seen_at) {
        s.tactor_seen_at = s.tick;
        s.reversal_at = s.tick + s.latency_ticks;
    }
    if (s.reversal_at && s.tick >= *s.reversal_at) begin_approach(s, -s.target);
    return s.target * cfg.approach_speed;
}

}  // namespace

void validate(const UserModelConfig& c) {
    if (!(c.reaction_latency_ms >= 0.0)) throw ConfigError("user.reaction_latency_ms", "must be >= 0");
    if (!(c.approach_speed > 0.0 && c.approach_speed <= 1.0))
        throw ConfigError("user.approach_speed", "must lie in (0, 1]");
    if (!(c.training_speed > 0.0 && c.training_speed <= 1.0))
        throw ConfigError("user.training_speed", "must lie in (0, 1]");
    if (!(c.center_pause_ms >= 0.0 && c.center_pause_ms <= 1000.0))
        throw ConfigError("user.center_pause_ms", "must lie in [0, 1000]");
    if (!(c.training_hold_ms >= 0.0)) throw ConfigError("user.training_hold_ms", "must be >= 0");
    if (!(c.drift_bias_min >= 0.0 && c.drift_bias_max >= c.drift_bias_min))
        throw ConfigError("user.drift_bias_min", "need 0 <= drift_bias_min <= drift_bias_max");
    if (c.drift_bias && !std::isfinite(*c.drift_bias)) throw ConfigError("user.drift_bias", "must be finite");
    if (!(c.estimate_noise_std >= 0.0)) throw ConfigError("user.estimate_noise_std", "must be >= 0");
}

Workspace workspace_of(const SimConfig& sim) {
    const WallAngles walls = wall_angles(sim);
    return {sim.dt_ms, sim.max_speed_deg_s, walls.left_deg, walls.right_deg, sim.center_deg};
}

OperatorState operator_reset(const UserModelConfig& config, FeedbackMode task, const Workspace& workspace) {
    validate(config);
    OperatorState s;
    s.workspace = workspace;
    s.internal_estimate_deg = workspace.center_deg;
    s.latency_ticks = to_ticks(config.reaction_latency_ms, workspace.dt_ms);
    s.hold_ticks = to_ticks(config.training_hold_ms, workspace.dt_ms);
    s.pause_ticks = to_ticks(config.center_pause_ms, workspace.dt_ms);
    begin_approach(s, config.rng_seed % 2 == 0 ? -1 : +1);

    if (task == FeedbackMode::NoFeedback) {
        if (config.drift_bias) {
            s.drift_bias = *config.drift_bias;
        } else {
            const double u = uniform_draw(config.rng_seed, stream::kOperatorInit, 0);
            const double magnitude = config.drift_bias_min + u * (config.drift_bias_max - config.drift_bias_min);
            const double sign = uniform_draw(config.rng_seed, stream::kOperatorInit, 1) < 0.5 ? -1.0 : 1.0;
            s.drift_bias = sign * magnitude;
        }
    }
    return s;
}

OperatorOutput operator_step(const OperatorState& op, bool observed_tactor, const UserModelConfig& config,
                             FeedbackMode task) {
    OperatorState s = op;
    const bool onset = observed_tactor && !op.previous_tactor;

    const double axis = task == FeedbackMode::Training ? training_command(s, observed_tactor, config)
                                                       : test_command(s, onset, config, task);
    const JoystickCommand cmd(axis);

    // Dead reckoning from the issued command.
    s.internal_estimate_deg += cmd.axis() * s.workspace.max_speed_deg_s * s.workspace.dt_ms / 1000.0;
    if (task == FeedbackMode::NoFeedback) s.internal_estimate_deg += s.drift_bias;
    if (config.estimate_noise_std > 0.0)
        s.internal_estimate_deg +=
            config.estimate_noise_std *
            standard_normal(config.rng_seed, stream::kOperator, static_cast<std::uint64_t>(op.tick));

    s.previous_tactor = observed_tactor;
    ++s.tick;
    return {cmd, s};
}

}  // namespace pfb
