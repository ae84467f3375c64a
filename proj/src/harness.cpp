#include "pfb/harness.hpp"

#include <cmath>
#include <sstream>

#include "pfb/error.hpp"
#include "pfb/random.hpp"

namespace pfb {

namespace {

std::uint64_t task_index(FeedbackMode mode) {
    switch (mode) {
        case FeedbackMode::Training: return 0;
        case FeedbackMode::NoFeedback: return 1;
        case FeedbackMode::Reactive: return 2;
        case FeedbackMode::Predictive: return 3;
    }
    return 0;
}

constexpr std::uint64_t kSimSeedStream = 0x73696d;    // "sim"
constexpr std::uint64_t kUserSeedStream = 0x75736572; // "user"

bool has_snapshot(const LearnerSource& source) {
    return std::holds_alternative<FromSnapshotFile>(source) || std::holds_alternative<FromSnapshot>(source);
}

std::optional<GvfLearner<double>> resolve_learner(const TrialConfig& config) {
    const auto length = config.codec.feature_length();
    std::optional<WeightSnapshot> snapshot;
    if (std::holds_alternative<FreshLearning>(config.learner_source)) {
        return GvfLearner<double>(length, config.learner.alpha, config.learner.gamma);
    } else if (const auto* file = std::get_if<FromSnapshotFile>(&config.learner_source)) {
        try {
            snapshot = load_snapshot_file(file->path);
        } catch (const ParseError& e) {
            throw RuntimeError("bad_snapshot", std::string(e.what()));
        }
    } else if (const auto* value = std::get_if<FromSnapshot>(&config.learner_source)) {
        snapshot = value->snapshot;
    } else {
        return std::nullopt;
    }
    if (static_cast<Eigen::Index>(snapshot->weights.size()) != length)
        throw RuntimeError("bad_snapshot", "snapshot length " + std::to_string(snapshot->weights.size()) +
                                               " does not match feature length " + std::to_string(length));
    return GvfLearner<double>::restore(*snapshot);
}

}  // namespace

void validate(const LearnerConfig& c) {
    if (!(c.alpha >= 0.0 && c.alpha <= 1.0)) throw ConfigError("learner.alpha", "must lie in [0, 1]");
    if (!(c.gamma >= 0.0 && c.gamma < 1.0)) throw ConfigError("learner.gamma", "must lie in [0, 1)");
}

void validate(const ExperimentConfig& c) {
    validate(c.sim);
    validate(c.codec);
    validate(c.thresholds);
    validate(c.user);
    validate(c.learner);
    if (c.duration_ticks < 0) throw ConfigError("duration_ticks", "must be >= 0");
    if (std::abs(c.codec.range_deg - c.sim.range_deg) > 1e-9)
        throw ConfigError("codec.range_deg", "must equal sim.range_deg");
}

TrialConfig make_trial_config(const ExperimentConfig& base, FeedbackMode task, std::uint64_t seed,
                              LearnerSource source) {
    TrialConfig t;
    t.task = task;
    t.duration_ticks = base.duration_ticks;
    t.sim = base.sim;
    t.codec = base.codec;
    t.thresholds = base.thresholds;
    t.user = base.user;
    t.learner = base.learner;
    t.learner_source = std::move(source);
    t.seed = seed;
    return t;
}

void validate(const TrialConfig& c) {
    validate(ExperimentConfig{c.sim, c.codec, c.thresholds, c.user, c.learner, c.duration_ticks});
    const bool fresh = std::holds_alternative<FreshLearning>(c.learner_source);
    if (c.task == FeedbackMode::Training && !fresh)
        throw ConfigError("learner_source", "the training task learns from scratch");
    if (c.task != FeedbackMode::Training && fresh)
        throw ConfigError("learner_source", "test tasks use a trained snapshot");
    if (c.task == FeedbackMode::Predictive && !has_snapshot(c.learner_source))
        throw RuntimeError("no_snapshot", "predictive feedback needs a trained snapshot");
}

TrialEngine::TrialEngine(FeedbackMode task, const SimConfig& sim, const CodecConfig& codec,
                         const FeedbackThresholds& thresholds, std::optional<GvfLearner<double>> learner,
                         bool learning)
    : task_(task),
      sim_(sim),
      codec_(codec),
      thresholds_(thresholds),
      learner_(std::move(learner)),
      learning_(learning && learner_.has_value()),
      latch_(thresholds.min_on_ticks),
      state_(sim_reset(sim)) {
    if (learner_ && learner_->length() != codec_.feature_length())
        throw RuntimeError("bad_snapshot", "learner length does not match the feature codec");
    observe();
}

void TrialEngine::observe() {
    observation_.features = encode(state_.angle_deg, state_.velocity_deg_s, codec_);
    observation_.bin = bin_of(state_.angle_deg, codec_);
    observation_.prediction = learner_ ? learner_->predict(observation_.features) : 0.0;
    observation_.decision =
        latch_.apply(decide(task_, state_.load, observation_.prediction, thresholds_));
}

TrialStepRecord TrialEngine::advance(JoystickCommand cmd) {
    TrialStepRecord r;
    r.t = state_.t;
    r.angle_deg = state_.angle_deg;
    r.velocity_deg_s = state_.velocity_deg_s;
    r.bin = observation_.bin;
    r.load = state_.load;
    r.prediction = observation_.prediction;
    r.tactor_on = observation_.decision.tactor_on;
    r.fired_rule = observation_.decision.fired_rule;
    r.joystick_axis = cmd.axis();
    r.in_contact = state_.in_contact;

    const FeatureVector x_t = observation_.features;
    state_ = sim_step(state_, cmd, sim_);
    const FeatureVector x_next = encode(state_.angle_deg, state_.velocity_deg_s, codec_);
    if (learning_) learner_->update(x_t, static_cast<double>(state_.load), x_next);
    observe();
    return r;
}

TrialResult run_trial(const TrialConfig& config, const TickHook& on_tick) {
    validate(config);

    const std::uint64_t idx = task_index(config.task) + 1;
    SimConfig sim = config.sim;
    sim.rng_seed = mix_key(config.seed, config.sim.rng_seed ^ kSimSeedStream, idx);
    UserModelConfig user = config.user;
    user.rng_seed = mix_key(config.seed, config.user.rng_seed ^ kUserSeedStream, idx);

    auto learner = resolve_learner(config);
    bool learning = config.task == FeedbackMode::Training;
    if (learner && config.task != FeedbackMode::Training) {
        if (config.learner.continue_learning) {
            learner->unfreeze();
            learning = true;
        } else {
            learner->freeze();
        }
    }

    TrialEngine engine(config.task, sim, config.codec, config.thresholds, std::move(learner), learning);
    OperatorState op = operator_reset(user, config.task, workspace_of(sim));

    TrialResult result;
    result.log.task = config.task;
    result.log.dt_ms = sim.dt_ms;
    result.log.center_deg = sim.center_deg;
    result.log.records.reserve(static_cast<std::size_t>(config.duration_ticks));
    for (std::int64_t t = 0; t < config.duration_ticks; ++t) {
        auto out = operator_step(op, engine.observation().decision.tactor_on, user, config.task);
        op = out.state;
        result.log.records.push_back(engine.advance(out.command));
        if (on_tick) on_tick(result.log.records.back());
    }
    result.metrics = compute_metrics(result.log, config.codec);
    if (learning && engine.learner()) {
        auto trained = *engine.learner();
        trained.freeze();
        result.snapshot = trained.snapshot();
    }
    return result;
}

const TrialResult& ProtocolReport::trial(FeedbackMode mode) const { return trials[task_index(mode)]; }

double ProtocolReport::load_ratio(FeedbackMode numerator, FeedbackMode denominator) const {
    const auto den = trial(denominator).metrics.total_summed_load;
    if (den == 0) return 0.0;
    return static_cast<double>(trial(numerator).metrics.total_summed_load) / static_cast<double>(den);
}

bool ProtocolReport::ordering_holds() const {
    const auto none = trial(FeedbackMode::NoFeedback).metrics.total_summed_load;
    const auto reactive = trial(FeedbackMode::Reactive).metrics.total_summed_load;
    const auto predictive = trial(FeedbackMode::Predictive).metrics.total_summed_load;
    return none > reactive && reactive > predictive;
}

ProtocolReport run_protocol(const ExperimentConfig& base, std::uint64_t seed) {
    validate(base);
    ProtocolReport report;
    report.seed = seed;
    auto& training = report.trials[0];
    training = run_trial(make_trial_config(base, FeedbackMode::Training, seed, FreshLearning{}));
    const WeightSnapshot snapshot = *training.snapshot;
    for (std::size_t i = 1; i < kProtocolOrder.size(); ++i)
        report.trials[i] = run_trial(make_trial_config(base, kProtocolOrder[i], seed, FromSnapshot{snapshot}));
    return report;
}

BinRegions bin_regions(const SimConfig& sim, const CodecConfig& codec) {
    const WallAngles walls = wall_angles(sim);
    const double w = codec.bin_width();
    BinRegions regions;
    for (int b = 0; b < codec.num_bins; ++b) {
        const double lo = b * w;
        const double hi = (b + 1) * w;
        if (lo >= walls.left_deg && hi <= walls.right_deg)
            regions.interior.push_back(b);
        else if (hi <= walls.left_deg || lo >= walls.right_deg)
            regions.beyond_walls.push_back(b);
    }
    return regions;
}

double fraction_in(const TrialMetrics& metrics, const std::vector<int>& bins) {
    double sum = 0.0;
    for (int b : bins)
        if (b >= 0 && static_cast<std::size_t>(b) < metrics.per_bin_visit_fraction.size())
            sum += metrics.per_bin_visit_fraction[static_cast<std::size_t>(b)];
    return sum;
}

nlohmann::ordered_json to_json(const ProtocolReport& report, const ExperimentConfig& config) {
    const BinRegions regions = bin_regions(config.sim, config.codec);
    nlohmann::ordered_json j;
    j["seed"] = report.seed;
    j["interior_bins"] = regions.interior;
    j["beyond_wall_bins"] = regions.beyond_walls;
    nlohmann::ordered_json tasks;
    nlohmann::ordered_json interior, beyond;
    for (auto mode : kProtocolOrder) {
        const auto& m = report.trial(mode).metrics;
        const std::string name(to_string(mode));
        tasks[name] = to_json(m);
        interior[name] = fraction_in(m, regions.interior);
        beyond[name] = fraction_in(m, regions.beyond_walls);
    }
    j["tasks"] = tasks;

    const auto total = [&](FeedbackMode mode) { return report.trial(mode).metrics.total_summed_load; };
    nlohmann::ordered_json cmp;
    cmp["reactive_over_no_feedback"] = report.load_ratio(FeedbackMode::Reactive, FeedbackMode::NoFeedback);
    cmp["predictive_over_reactive"] = report.load_ratio(FeedbackMode::Predictive, FeedbackMode::Reactive);
    cmp["predictive_over_no_feedback"] = report.load_ratio(FeedbackMode::Predictive, FeedbackMode::NoFeedback);
    cmp["no_feedback_gt_reactive"] = total(FeedbackMode::NoFeedback) > total(FeedbackMode::Reactive);
    cmp["reactive_gt_predictive"] = total(FeedbackMode::Reactive) > total(FeedbackMode::Predictive);
    cmp["ordering_holds"] = report.ordering_holds();
    cmp["interior_visit_fraction"] = interior;
    cmp["beyond_wall_visit_fraction"] = beyond;
    j["comparisons"] = cmp;
    return j;
}

std::string per_bin_csv_header() { return "seed,task,bin,visits,visit_fraction,summed_load\n"; }

std::string per_bin_csv_rows(std::uint64_t seed, FeedbackMode task, const TrialMetrics& m) {
    std::ostringstream out;
    out.precision(17);
    for (std::size_t b = 0; b < m.per_bin_visits.size(); ++b)
        out << seed << ',' << to_string(task) << ',' << b << ',' << m.per_bin_visits[b] << ','
            << m.per_bin_visit_fraction[b] << ',' << m.per_bin_summed_load[b] << '\n';
    return out.str();
}

}  // namespace pfb
