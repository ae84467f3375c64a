#include "pfb/feedback.hpp"

#include <cmath>

#include "pfb/arm_sim.hpp"
#include "pfb/error.hpp"

namespace pfb {

std::string_view to_string(FeedbackMode mode) {
    switch (mode) {
        case FeedbackMode::Training: return "training";
        case FeedbackMode::NoFeedback: return "no_feedback";
        case FeedbackMode::Reactive: return "reactive";
        case FeedbackMode::Predictive: return "predictive";
    }
    return "training";
}

std::optional<FeedbackMode> parse_feedback_mode(std::string_view name) {
    if (name == "training") return FeedbackMode::Training;
    if (name == "no_feedback") return FeedbackMode::NoFeedback;
    if (name == "reactive") return FeedbackMode::Reactive;
    if (name == "predictive") return FeedbackMode::Predictive;
    return std::nullopt;
}

std::string_view to_string(FiredRule rule) {
    switch (rule) {
        case FiredRule::None: return "none";
        case FiredRule::Training: return "training";
        case FiredRule::Reactive: return "reactive";
        case FiredRule::Predictive: return "predictive";
    }
    return "none";
}

std::optional<FiredRule> parse_fired_rule(std::string_view name) {
    if (name == "none") return FiredRule::None;
    if (name == "training") return FiredRule::Training;
    if (name == "reactive") return FiredRule::Reactive;
    if (name == "predictive") return FiredRule::Predictive;
    return std::nullopt;
}

void validate(const FeedbackThresholds& t) {
    if (!(t.training_load >= 0.0 && t.training_load <= kMaxLoad))
        throw ConfigError("thresholds.training_load", "must lie in [0, 1024]");
    if (!(t.reactive_load >= 0.0 && t.reactive_load <= kMaxLoad))
        throw ConfigError("thresholds.reactive_load", "must lie in [0, 1024]");
    if (!(t.predictive_value >= 0.0) || !std::isfinite(t.predictive_value))
        throw ConfigError("thresholds.predictive_value", "must be >= 0");
    if (t.min_on_ticks < 0) throw ConfigError("thresholds.min_on_ticks", "must be >= 0");
}

FeedbackDecision decide(FeedbackMode mode, double load, double prediction, const FeedbackThresholds& thresholds) {
    switch (mode) {
        case FeedbackMode::Training:
            if (load > thresholds.training_load) return {true, FiredRule::Training};
            break;
        case FeedbackMode::Reactive:
            if (load > thresholds.reactive_load) return {true, FiredRule::Reactive};
            break;
        case FeedbackMode::Predictive:
            if (prediction > thresholds.predictive_value) return {true, FiredRule::Predictive};
            break;
        case FeedbackMode::NoFeedback:
            break;
    }
    return {};
}

FeedbackDecision TactorLatch::apply(const FeedbackDecision& raw) {
    if (raw.tactor_on) {
        remaining_ = min_on_ticks_ > 0 ? min_on_ticks_ - 1 : 0;
        held_rule_ = raw.fired_rule;
        return raw;
    }
    if (remaining_ > 0) {
        --remaining_;
        return {true, held_rule_};
    }
    return raw;
}

}  // namespace pfb
