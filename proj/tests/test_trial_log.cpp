#include <gtest/gtest.h>

#include <numeric>
#include <random>
#include <sstream>

#include "pfb/error.hpp"
#include "pfb/harness.hpp"
#include "pfb/trial_log.hpp"
#include "test_support.hpp"

namespace pfb {
namespace {

const CodecConfig kCodec{};

TrialStepRecord rec(std::int64_t t, double angle, int load) {
    TrialStepRecord r;
    r.t = t;
    r.angle_deg = angle;
    r.bin = bin_of(angle, kCodec);
    r.load = load;
    return r;
}

TEST(Metrics, SingleBinAggregation) {
    TrialLog log;
    for (int t = 0; t < 10; ++t) log.records.push_back(rec(t, 50.0, 7));
    const auto m = compute_metrics(log, kCodec);
    EXPECT_EQ(m.duration_ticks, 10);
    EXPECT_EQ(m.per_bin_visits[5], 10);
    EXPECT_DOUBLE_EQ(m.per_bin_visit_fraction[5], 1.0);
    EXPECT_EQ(m.total_summed_load, 70);
    EXPECT_EQ(m.per_bin_summed_load[5], 70);
    EXPECT_EQ(m.wall_contact_count, 0);
    EXPECT_FALSE(m.median_feedback_lead_ms.has_value());
}

TEST(Metrics, EmptyLogIsAllZero) {
    const auto m = compute_metrics(TrialLog{}, kCodec);
    EXPECT_EQ(m.duration_ticks, 0);
    EXPECT_EQ(m.total_summed_load, 0);
    EXPECT_EQ(m.per_bin_visits, std::vector<std::int64_t>(32, 0));
    EXPECT_EQ(m.per_bin_visit_fraction, std::vector<double>(32, 0.0));
    EXPECT_EQ(m.wall_contact_count, 0);
    EXPECT_FALSE(m.median_feedback_lead_ms.has_value());
}

TEST(Metrics, FeedbackAfterContactGivesNegativeLead) {
    TrialLog log;
    for (int t = 0; t < 20; ++t) {
        auto r = rec(t, 170.0 + t, 30);
        r.joystick_axis = 1.0;
        r.in_contact = t >= 10;
        r.tactor_on = t >= 12;
        log.records.push_back(r);
    }
    const auto m = compute_metrics(log, kCodec);
    EXPECT_EQ(m.wall_contact_count, 1);
    EXPECT_EQ(m.right_contact_count, 1);
    ASSERT_TRUE(m.median_feedback_lead_ms);
    EXPECT_DOUBLE_EQ(*m.median_feedback_lead_ms, -100.0);
}

TEST(Metrics, OnsetInEarlierApproachDoesNotPair) {
    TrialLog log;
    for (int t = 0; t < 30; ++t) {
        auto r = rec(t, 150.0, 30);
        r.joystick_axis = t < 10 ? -1.0 : 1.0;
        r.tactor_on = t == 5;
        r.in_contact = t >= 20;
        log.records.push_back(r);
    }
    const auto m = compute_metrics(log, kCodec);
    EXPECT_EQ(m.wall_contact_count, 1);
    EXPECT_EQ(m.paired_contact_count, 0);
    EXPECT_FALSE(m.median_feedback_lead_ms);
}

TEST(TrialLogText, HeaderAndFieldOrder) {
    TrialLog log;
    log.task = FeedbackMode::Reactive;
    log.records.push_back(rec(0, 150.0, 31));
    std::ostringstream out;
    write_log(out, log);
    std::istringstream in(out.str());
    std::string header, first;
    std::getline(in, header);
    std::getline(in, first);
    EXPECT_EQ(header, R"({"schema":"pfb.trial_log","version":1,"task":"reactive","dt_ms":50.0,"center_deg":150.0})");
    EXPECT_EQ(first, R"({"t":0,"angle_deg":150.0,"velocity_deg_s":0.0,"bin":16,"load":31,"prediction":0.0,)"
                     R"("tactor_on":false,"fired_rule":"none","joystick_axis":0.0,"in_contact":false})");
}

TEST(TrialLogText, ParseErrorsCarryLineNumbers) {
    TrialLog log;
    for (int t = 0; t < 3; ++t) log.records.push_back(rec(t, 150.0, 30));
    std::ostringstream out;
    write_log(out, log);
    std::string text = out.str();
    const auto third_line = text.find('\n', text.find('\n') + 1) + 1;
    text.insert(third_line, "{not json}\n");
    std::istringstream in(text);
    try {
        parse_log(in);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
    std::istringstream bad_header("{\"schema\":\"other\"}\n");
    EXPECT_THROW(parse_log(bad_header), ParseError);
}

TEST(TrialLogText, NonConsecutiveTicksRejected) {
    TrialLog log;
    log.records.push_back(rec(0, 150.0, 30));
    log.records.push_back(rec(2, 150.0, 30));
    std::ostringstream out;
    write_log(out, log);
    std::istringstream in(out.str());
    EXPECT_THROW(parse_log(in), ParseError);
}

TEST(MetricsJson, RoundTrip) {
    const auto r = run_trial(make_trial_config(ExperimentConfig{}, FeedbackMode::Training, 2, FreshLearning{}));
    EXPECT_EQ(metrics_from_json(nlohmann::json::parse(to_json(r.metrics).dump())), r.metrics);
}

class LogProperty : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(LogProperty, ConservationAndReparseFidelity) {
    const ExperimentConfig base;
    const auto training = run_trial(make_trial_config(base, FeedbackMode::Training, GetParam(), FreshLearning{}));
    for (auto task : kProtocolOrder) {
        const auto r = task == FeedbackMode::Training
                           ? training
                           : run_trial(make_trial_config(base, task, GetParam(), FromSnapshot{*training.snapshot}));
        const auto& m = r.metrics;
        EXPECT_EQ(std::accumulate(m.per_bin_summed_load.begin(), m.per_bin_summed_load.end(), std::int64_t{0}),
                  m.total_summed_load);
        EXPECT_EQ(std::accumulate(m.per_bin_visits.begin(), m.per_bin_visits.end(), std::int64_t{0}),
                  m.duration_ticks);
        EXPECT_EQ(m.left_contact_count + m.right_contact_count, m.wall_contact_count);

        std::ostringstream out;
        write_log(out, r.log);
        std::istringstream in(out.str());
        const TrialLog back = parse_log(in);
        EXPECT_EQ(back, r.log);
        EXPECT_EQ(compute_metrics(back, base.codec), m);
    }
}

INSTANTIATE_TEST_SUITE_P(Seeds, LogProperty, ::testing::Values<std::uint64_t>(0, 7, 42));

TEST(TrialLogFile, MissingFileIsRuntimeError) {
    EXPECT_THROW(load_log_file("/nonexistent/x.log"), RuntimeError);
}

}  // namespace
}  // namespace pfb
