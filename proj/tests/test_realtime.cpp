#include <gtest/gtest.h>

#include "pfb/realtime.hpp"

namespace pfb {
namespace {

using namespace std::chrono_literals;

TEST(IntervalStats, CountsWithinTolerance) {
    IntervalStats s;
    s.nominal_ms = 50.0;
    s.tolerance = 0.2;
    for (double v : {50.0, 40.0, 60.0, 39.9, 60.1}) s.add(v);
    EXPECT_EQ(s.intervals, 5);
    EXPECT_EQ(s.within, 3);
    EXPECT_DOUBLE_EQ(s.fraction_within(), 0.6);
    EXPECT_DOUBLE_EQ(s.min_ms, 39.9);
    EXPECT_DOUBLE_EQ(s.max_ms, 60.1);
    EXPECT_DOUBLE_EQ(IntervalStats{}.fraction_within(), 1.0);
}

TEST(Pacer, DeadlinesAreAbsolute) {
    Pacer p(50ms);
    const auto t0 = Pacer::Clock::time_point{} + 1s;
    p.start(t0);
    EXPECT_EQ(p.deadline(), t0);
    // A tick that runs 30 ms late does not shift later deadlines.
    p.on_tick(t0 + 30ms);
    EXPECT_EQ(p.deadline(), t0 + 50ms);
    p.on_tick(t0 + 50ms);
    EXPECT_EQ(p.deadline(), t0 + 100ms);
}

TEST(Pacer, LateTicksRunBackToBackWithoutSkipping) {
    Pacer p(50ms);
    const auto t0 = Pacer::Clock::time_point{} + 1s;
    p.start(t0);
    p.on_tick(t0);
    // Stalled for 170 ms: the next three deadlines are already due.
    const auto now = t0 + 170ms;
    int due = 0;
    while (p.deadline() <= now) {
        p.on_tick(now);
        ++due;
    }
    EXPECT_EQ(due, 3);
    EXPECT_EQ(p.deadline(), t0 + 200ms);
    EXPECT_EQ(p.stats().intervals, 3);
}

TEST(Pacer, RunPacedHoldsCadence) {
    int ticks = 0;
    const auto stats = run_paced(40, 20ms, [&] {
        ++ticks;
        return true;
    });
    EXPECT_EQ(ticks, 40);
    EXPECT_EQ(stats.intervals, 39);
    EXPECT_GE(stats.fraction_within(), 0.9);
    EXPECT_NEAR(stats.mean_ms(), 20.0, 2.0);
}

TEST(Pacer, RunPacedStopsWhenTickDeclines) {
    int ticks = 0;
    run_paced(100, 1ms, [&] { return ++ticks < 5; });
    EXPECT_EQ(ticks, 5);
}

}  // namespace
}  // namespace pfb
