#include <gtest/gtest.h>

#include <sstream>

#include "pfb/error.hpp"
#include "pfb/harness.hpp"
#include "test_support.hpp"

namespace pfb {
namespace {

std::string log_text(const TrialLog& log) {
    std::ostringstream out;
    write_log(out, log);
    return out.str();
}

TEST(Harness, ZeroDurationGivesEmptyLogAndZeroMetrics) {
    ExperimentConfig base;
    base.duration_ticks = 0;
    const auto r = run_trial(make_trial_config(base, FeedbackMode::Training, 1, FreshLearning{}));
    EXPECT_TRUE(r.log.records.empty());
    EXPECT_EQ(r.metrics.total_summed_load, 0);
    EXPECT_EQ(r.metrics.per_bin_visit_fraction, std::vector<double>(32, 0.0));
}

TEST(Harness, IdenticalConfigAndSeedGiveIdenticalLogs) {
    const ExperimentConfig base;
    const auto a = run_protocol(base, 5);
    const auto b = run_protocol(base, 5);
    for (auto mode : kProtocolOrder) EXPECT_EQ(log_text(a.trial(mode).log), log_text(b.trial(mode).log));
    EXPECT_EQ(to_text(*a.trial(FeedbackMode::Training).snapshot), to_text(*b.trial(FeedbackMode::Training).snapshot));
}

TEST(Harness, DifferentSeedsDiffer) {
    const ExperimentConfig base;
    const auto a = run_trial(make_trial_config(base, FeedbackMode::Training, 1, FreshLearning{}));
    const auto b = run_trial(make_trial_config(base, FeedbackMode::Training, 2, FreshLearning{}));
    EXPECT_NE(log_text(a.log), log_text(b.log));
}

TEST(Harness, TrainedPredictionsSeparateWallApproachFromCenter) {
    const ExperimentConfig base;
    const auto r = run_trial(make_trial_config(base, FeedbackMode::Training, 7, FreshLearning{}));
    ASSERT_TRUE(r.snapshot);
    EXPECT_TRUE(r.snapshot->frozen);
    const auto learner = GvfLearner<double>::restore(*r.snapshot);
    const auto at = [&](double angle, double vel) { return learner.predict(encode(angle, vel, base.codec)); };
    // Moving into a wall from the adjacent interior bin.
    EXPECT_GT(at(170.0, 11.25), 900.0);
    EXPECT_GT(at(130.0, -11.25), 900.0);
    // Moving through the center bin.
    EXPECT_LT(at(150.0, 11.25), 900.0);
    EXPECT_LT(at(150.0, -11.25), 900.0);
}

TEST(Harness, TrainingMutatesOnlyDuringTraining) {
    const ExperimentConfig base;
    const auto training = run_trial(make_trial_config(base, FeedbackMode::Training, 3, FreshLearning{}));
    EXPECT_GT(training.snapshot->updates_applied, 0u);
    for (auto task : {FeedbackMode::NoFeedback, FeedbackMode::Reactive, FeedbackMode::Predictive}) {
        const auto r = run_trial(make_trial_config(base, task, 3, FromSnapshot{*training.snapshot}));
        EXPECT_FALSE(r.snapshot.has_value());
    }
}

TEST(Harness, ContinueLearningReturnsUpdatedSnapshot) {
    ExperimentConfig base;
    base.learner.continue_learning = true;
    const auto training = run_trial(make_trial_config(base, FeedbackMode::Training, 3, FreshLearning{}));
    const auto r = run_trial(make_trial_config(base, FeedbackMode::Reactive, 3, FromSnapshot{*training.snapshot}));
    ASSERT_TRUE(r.snapshot);
    EXPECT_NE(r.snapshot->weights, training.snapshot->weights);
}

// The learner is consulted in every task but only the Predictive rule reads
// it, so other tasks' logs match apart from the prediction column.
TEST(Harness, LearningIsolation) {
    const ExperimentConfig base;
    const auto s1 = *run_trial(make_trial_config(base, FeedbackMode::Training, 1, FreshLearning{})).snapshot;
    const auto s2 = *run_trial(make_trial_config(base, FeedbackMode::Training, 2, FreshLearning{})).snapshot;
    for (auto task : {FeedbackMode::NoFeedback, FeedbackMode::Reactive}) {
        auto a = run_trial(make_trial_config(base, task, 9, FromSnapshot{s1}));
        auto b = run_trial(make_trial_config(base, task, 9, FromSnapshot{s2}));
        bool predictions_differ = false;
        ASSERT_EQ(a.log.records.size(), b.log.records.size());
        for (std::size_t i = 0; i < a.log.records.size(); ++i) {
            predictions_differ |= a.log.records[i].prediction != b.log.records[i].prediction;
            a.log.records[i].prediction = b.log.records[i].prediction = 0.0;
        }
        EXPECT_TRUE(predictions_differ);
        EXPECT_EQ(a.log, b.log);
        EXPECT_EQ(a.metrics, b.metrics);
    }
}

TEST(Harness, PredictiveWithoutSnapshotFails) {
    const ExperimentConfig base;
    try {
        run_trial(make_trial_config(base, FeedbackMode::Predictive, 1, NoLearner{}));
        FAIL();
    } catch (const RuntimeError& e) {
        EXPECT_EQ(e.code(), "no_snapshot");
    }
    try {
        run_trial(make_trial_config(base, FeedbackMode::Predictive, 1, FromSnapshotFile{"/nonexistent.json"}));
        FAIL();
    } catch (const RuntimeError& e) {
        EXPECT_EQ(e.code(), "no_snapshot");
    }
}

TEST(Harness, CorruptSnapshotFileIsBadSnapshot) {
    test::TempDir dir;
    {
        std::ofstream(dir / "s.json") << "{\"format_version\":1,";
    }
    try {
        run_trial(make_trial_config(ExperimentConfig{}, FeedbackMode::Predictive, 1, FromSnapshotFile{dir / "s.json"}));
        FAIL();
    } catch (const RuntimeError& e) {
        EXPECT_EQ(e.code(), "bad_snapshot");
    }
}

TEST(Harness, TaskSourceMismatchIsConfigError) {
    const ExperimentConfig base;
    WeightSnapshot snap = GvfLearner<double>(97, 0.1, 0.92).snapshot();
    EXPECT_THROW(run_trial(make_trial_config(base, FeedbackMode::Training, 1, FromSnapshot{snap})), ConfigError);
    EXPECT_THROW(run_trial(make_trial_config(base, FeedbackMode::Reactive, 1, FreshLearning{})), ConfigError);
}

TEST(Harness, CodecRangeMustMatchSim) {
    ExperimentConfig base;
    base.codec.range_deg = 200.0;
    EXPECT_THROW(validate(base), ConfigError);
}

TEST(Harness, ProtocolReportShape) {
    const ExperimentConfig base;
    const auto report = run_protocol(base, 4);
    const auto j = to_json(report, base);
    EXPECT_EQ(j["seed"], 4);
    for (auto mode : kProtocolOrder) EXPECT_TRUE(j["tasks"].contains(std::string(to_string(mode))));
    EXPECT_EQ(j["comparisons"]["ordering_holds"].get<bool>(), report.ordering_holds());
    const std::string csv = per_bin_csv_rows(4, FeedbackMode::Reactive, report.trial(FeedbackMode::Reactive).metrics);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 32);
    EXPECT_EQ(csv.rfind("4,reactive,0,", 0), 0u);
}

TEST(Harness, ReactiveLoadConcentratesAtBoundaryBins) {
    const ExperimentConfig base;
    const auto report = run_protocol(base, 7);
    const auto& m = report.trial(FeedbackMode::Reactive).metrics;
    std::int64_t boundary = 0;
    for (int b : {11, 12, 13, 18, 19, 20}) boundary += m.per_bin_summed_load[static_cast<std::size_t>(b)];
    EXPECT_GT(static_cast<double>(boundary), 0.5 * static_cast<double>(m.total_summed_load));
}

}  // namespace
}  // namespace pfb
