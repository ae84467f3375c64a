#include "pfb/realtime.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace pfb {

void IntervalStats::add(double interval_ms) {
    if (intervals == 0) {
        min_ms = interval_ms;
        max_ms = interval_ms;
    } else {
        min_ms = std::min(min_ms, interval_ms);
        max_ms = std::max(max_ms, interval_ms);
    }
    ++intervals;
    sum_ms += interval_ms;
    if (std::abs(interval_ms - nominal_ms) <= tolerance * nominal_ms) ++within;
}

double IntervalStats::fraction_within() const {
    return intervals == 0 ? 1.0 : static_cast<double>(within) / static_cast<double>(intervals);
}

double IntervalStats::mean_ms() const { return intervals == 0 ? 0.0 : sum_ms / static_cast<double>(intervals); }

Pacer::Pacer(Clock::duration period, double tolerance) : period_(period) {
    stats_.nominal_ms = std::chrono::duration<double, std::milli>(period).count();
    stats_.tolerance = tolerance;
}

void Pacer::start(Clock::time_point now) {
    deadline_ = now;
    have_last_ = false;
}

void Pacer::on_tick(Clock::time_point now) {
    if (have_last_) stats_.add(std::chrono::duration<double, std::milli>(now - last_tick_).count());
    last_tick_ = now;
    have_last_ = true;
    deadline_ += period_;
}

IntervalStats run_paced(std::int64_t max_ticks, Pacer::Clock::duration period, const std::function<bool()>& tick) {
    Pacer pacer(period);
    pacer.start(Pacer::Clock::now());
    for (std::int64_t i = 0; i < max_ticks; ++i) {
        std::this_thread::sleep_until(pacer.deadline());
        pacer.on_tick(Pacer::Clock::now());
        if (!tick()) break;
    }
    return pacer.stats();
}

}  // namespace pfb
