#pragma once

#include <chrono>
#include <cstdint>
#include <functional>

namespace pfb {

// Inter-tick interval statistics, kept as running counters so a long-lived
// server does not grow memory.
struct IntervalStats {
    double nominal_ms = 50.0;
    double tolerance = 0.2;
    std::int64_t intervals = 0;
    std::int64_t within = 0;
    double min_ms = 0.0;
    double max_ms = 0.0;
    double sum_ms = 0.0;

    void add(double interval_ms);
    // 1.0 when no interval has been recorded yet.
    double fraction_within() const;
    double mean_ms() const;
};

// Absolute-deadline pacing against the monotonic clock. Deadlines advance by
// exactly one period per tick, so a late tick shortens the wait before the
// next one instead of shifting the whole schedule; ticks are never skipped.
class Pacer {
public:
    using Clock = std::chrono::steady_clock;

    explicit Pacer(Clock::duration period, double tolerance = 0.2);

    void start(Clock::time_point now);
    Clock::time_point deadline() const { return deadline_; }
    // Records that a tick ran at `now` and schedules the next one.
    void on_tick(Clock::time_point now);

    Clock::duration period() const { return period_; }
    const IntervalStats& stats() const { return stats_; }

private:
    Clock::duration period_;
    Clock::time_point deadline_{};
    Clock::time_point last_tick_{};
    bool have_last_ = false;
    IntervalStats stats_;
};

// Runs `tick` at the pacer's cadence, sleeping between deadlines, until it
// returns false or `max_ticks` ticks have run.
IntervalStats run_paced(std::int64_t max_ticks, Pacer::Clock::duration period, const std::function<bool()>& tick);

}  // namespace pfb
