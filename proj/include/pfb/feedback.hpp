#pragma once

#include <optional>
#include <string_view>

namespace pfb {

enum class FeedbackMode { Training, NoFeedback, Reactive, Predictive };

enum class FiredRule { None, Training, Reactive, Predictive };

// Wire spellings: training | no_feedback | reactive | predictive.
std::string_view to_string(FeedbackMode mode);
std::optional<FeedbackMode> parse_feedback_mode(std::string_view name);

// Wire spellings: none | training | reactive | predictive.
std::string_view to_string(FiredRule rule);
std::optional<FiredRule> parse_fired_rule(std::string_view name);

struct FeedbackThresholds {
    double training_load = 650.0;
    double reactive_load = 420.0;
    double predictive_value = 900.0;
    // Keeps the tactor on for at least this many ticks after it fires.
    // 0 disables the latch (plain per-tick thresholding).
    int min_on_ticks = 0;
};

void validate(const FeedbackThresholds& thresholds);

struct FeedbackDecision {
    bool tactor_on = false;
    FiredRule fired_rule = FiredRule::None;

    bool operator==(const FeedbackDecision&) const = default;
};

// All comparisons are strict: the tactor fires only above a threshold.
FeedbackDecision decide(FeedbackMode mode, double load, double prediction, const FeedbackThresholds& thresholds);

// Optional minimum-on-duration wrapper around decide(). With
// min_on_ticks == 0 it passes decisions through unchanged.
class TactorLatch {
public:
    explicit TactorLatch(int min_on_ticks = 0) : min_on_ticks_(min_on_ticks) {}

    FeedbackDecision apply(const FeedbackDecision& raw);

private:
    int min_on_ticks_;
    int remaining_ = 0;
    FiredRule held_rule_ = FiredRule::None;
};

}  // namespace pfb
