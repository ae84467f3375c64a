#include "pfb/session.hpp"

#include <cmath>
#include <filesystem>

#include "pfb/error.hpp"
#include "pfb/random.hpp"

namespace pfb {

namespace msg {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

template <typename... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <typename... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::optional<json> parse_object(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return std::nullopt;
    return j;
}

bool number_field(const json& j, const char* key, double& out) {
    if (!j.contains(key) || !j.at(key).is_number()) return false;
    out = j.at(key).get<double>();
    return true;
}

bool bool_field(const json& j, const char* key, bool& out) {
    if (!j.contains(key) || !j.at(key).is_boolean()) return false;
    out = j.at(key).get<bool>();
    return true;
}

bool string_field(const json& j, const char* key, std::string& out) {
    if (!j.contains(key) || !j.at(key).is_string()) return false;
    out = j.at(key).get<std::string>();
    return true;
}

template <typename T>
bool integer_field(const json& j, const char* key, T& out) {
    if (!j.contains(key) || !j.at(key).is_number_integer()) return false;
    out = j.at(key).get<T>();
    return true;
}

}  // namespace

std::string serialize(const Client& m) {
    ordered_json j;
    std::visit(Overloaded{
                   [&](const Joystick& x) {
                       j["type"] = "joystick";
                       j["axis"] = x.axis;
                   },
                   [&](const StartTask& x) {
                       j["type"] = "start_task";
                       j["task"] = std::string(to_string(x.task));
                   },
                   [&](const StopTask&) { j["type"] = "stop_task"; },
                   [&](const SetBlindfold& x) {
                       j["type"] = "set_blindfold";
                       j["on"] = x.on;
                   },
               },
               m);
    return j.dump();
}

std::string serialize(const Server& m) {
    ordered_json j;
    std::visit(Overloaded{
                   [&](const State& s) {
                       j["type"] = "state";
                       j["t"] = s.t;
                       j["angle_deg"] = s.angle_deg;
                       j["bin"] = s.bin;
                       j["load"] = s.load;
                       j["prediction"] = s.prediction;
                       j["tactor"] = s.tactor;
                       j["fired_rule"] = std::string(to_string(s.fired_rule));
                       j["task"] = std::string(to_string(s.task));
                       j["blindfold"] = s.blindfold;
                   },
                   [&](const TaskEnded& e) {
                       j["type"] = "task_ended";
                       j["metrics"] = to_json(e.metrics);
                   },
                   [&](const Error& e) {
                       j["type"] = "error";
                       j["code"] = e.code;
                   },
                   [&](const Warning& w) {
                       j["type"] = "warning";
                       j["code"] = w.code;
                   },
                   [&](const Role& r) {
                       j["type"] = "role";
                       j["role"] = r.role;
                   },
               },
               m);
    return j.dump();
}

std::variant<Client, ParseFailure> parse_client(const std::string& text) {
    const auto j = parse_object(text);
    if (!j) return ParseFailure{"bad_json"};
    std::string type;
    if (!string_field(*j, "type", type)) return ParseFailure{"bad_json"};
    if (type == "joystick") {
        Joystick m;
        if (!number_field(*j, "axis", m.axis)) return ParseFailure{"bad_field"};
        return Client{m};
    }
    if (type == "start_task") {
        std::string name;
        if (!string_field(*j, "task", name)) return ParseFailure{"bad_field"};
        const auto task = parse_feedback_mode(name);
        if (!task) return ParseFailure{"unknown_task"};
        return Client{StartTask{*task}};
    }
    if (type == "stop_task") return Client{StopTask{}};
    if (type == "set_blindfold") {
        SetBlindfold m;
        if (!bool_field(*j, "on", m.on)) return ParseFailure{"bad_field"};
        return Client{m};
    }
    return ParseFailure{"unknown_type"};
}

std::variant<Server, ParseFailure> parse_server(const std::string& text) {
    const auto j = parse_object(text);
    if (!j) return ParseFailure{"bad_json"};
    std::string type;
    if (!string_field(*j, "type", type)) return ParseFailure{"bad_json"};
    if (type == "state") {
        State s;
        std::string rule, task;
        if (!integer_field(*j, "t", s.t) || !number_field(*j, "angle_deg", s.angle_deg) ||
            !integer_field(*j, "bin", s.bin) || !integer_field(*j, "load", s.load) ||
            !number_field(*j, "prediction", s.prediction) || !bool_field(*j, "tactor", s.tactor) ||
            !string_field(*j, "fired_rule", rule) || !string_field(*j, "task", task) ||
            !bool_field(*j, "blindfold", s.blindfold))
            return ParseFailure{"bad_field"};
        const auto r = parse_fired_rule(rule);
        const auto m = parse_feedback_mode(task);
        if (!r || !m) return ParseFailure{"bad_field"};
        s.fired_rule = *r;
        s.task = *m;
        return Server{s};
    }
    if (type == "task_ended") {
        if (!j->contains("metrics")) return ParseFailure{"bad_field"};
        try {
            return Server{TaskEnded{metrics_from_json(j->at("metrics"))}};
        } catch (const ParseError&) {
            return ParseFailure{"bad_field"};
        }
    }
    if (type == "error" || type == "warning" || type == "role") {
        std::string value;
        if (!string_field(*j, type == "role" ? "role" : "code", value)) return ParseFailure{"bad_field"};
        if (type == "error") return Server{Error{value}};
        if (type == "warning") return Server{Warning{value}};
        return Server{Role{value}};
    }
    return ParseFailure{"unknown_type"};
}

}  // namespace msg

namespace {

std::string error_frame(const std::string& code) { return msg::serialize(msg::Server{msg::Error{code}}); }
std::string warning_frame(const std::string& code) { return msg::serialize(msg::Server{msg::Warning{code}}); }

void append(SessionOutput& into, SessionOutput&& from) {
    for (auto& s : from.reply) into.reply.push_back(std::move(s));
    for (auto& s : from.broadcast) into.broadcast.push_back(std::move(s));
    into.close_sender = into.close_sender || from.close_sender;
}

}  // namespace

Session::Session(SessionOptions options) : options_(std::move(options)), snapshot_(options_.snapshot) {
    validate(options_.config);
    if (options_.output_dir) std::filesystem::create_directories(*options_.output_dir);
}

std::optional<FeedbackMode> Session::task() const {
    if (!engine_) return std::nullopt;
    return engine_->task();
}

SessionOutput Session::handle_message(const std::string& text, bool from_driver) {
    SessionOutput out;
    auto parsed = msg::parse_client(text);
    if (const auto* failure = std::get_if<msg::ParseFailure>(&parsed)) {
        out.reply.push_back(error_frame(failure->code));
        // Frames that are not JSON objects violate the protocol outright.
        out.close_sender = failure->code == "bad_json";
        return out;
    }
    if (!from_driver) {
        out.reply.push_back(error_frame("not_driver"));
        return out;
    }
    const auto& m = std::get<msg::Client>(parsed);
    if (const auto* joy = std::get_if<msg::Joystick>(&m)) {
        const double clamped = JoystickCommand::clamp_axis(joy->axis);
        if (clamped != joy->axis) out.reply.push_back(warning_frame("axis_clamped"));
        pending_axis_ = clamped;
    } else if (const auto* start_msg = std::get_if<msg::StartTask>(&m)) {
        if (start_msg->task == FeedbackMode::Predictive && !snapshot_) {
            out.reply.push_back(error_frame("no_snapshot"));
            return out;
        }
        if (engine_) append(out, stop());
        append(out, start(start_msg->task));
    } else if (std::holds_alternative<msg::StopTask>(m)) {
        if (!engine_)
            out.reply.push_back(warning_frame("no_task"));
        else
            append(out, stop());
    } else if (const auto* blind = std::get_if<msg::SetBlindfold>(&m)) {
        blindfold_ = blind->on;
    }
    return out;
}

SessionOutput Session::start(FeedbackMode task) {
    const auto& cfg = options_.config;
    std::optional<GvfLearner<double>> learner;
    bool learning = false;
    if (task == FeedbackMode::Training) {
        learner.emplace(cfg.codec.feature_length(), cfg.learner.alpha, cfg.learner.gamma);
        learning = true;
    } else if (snapshot_) {
        if (static_cast<Eigen::Index>(snapshot_->weights.size()) != cfg.codec.feature_length()) {
            SessionOutput out;
            out.reply.push_back(error_frame("bad_snapshot"));
            return out;
        }
        learner = GvfLearner<double>::restore(*snapshot_);
        if (cfg.learner.continue_learning) {
            learner->unfreeze();
            learning = true;
        } else {
            learner->freeze();
        }
    }

    SimConfig sim = cfg.sim;
    sim.rng_seed = mix_key(cfg.sim.rng_seed, 0x73657373 /* "sess" */, tasks_started_++);
    engine_.emplace(task, sim, cfg.codec, cfg.thresholds, std::move(learner), learning);
    log_ = TrialLog{};
    log_.task = task;
    log_.dt_ms = sim.dt_ms;
    log_.center_deg = sim.center_deg;
    blindfold_ = task != FeedbackMode::Training;
    return {};
}

SessionOutput Session::stop() {
    SessionOutput out;
    if (!engine_) return out;
    const FeedbackMode task = engine_->task();
    if (task == FeedbackMode::Training && engine_->learner()) {
        auto trained = *engine_->learner();
        trained.freeze();
        snapshot_ = trained.snapshot();
    }
    const TrialMetrics metrics = compute_metrics(log_, options_.config.codec);
    last_log_ = std::move(log_);
    last_log_path_.reset();
    engine_.reset();
    log_ = TrialLog{};

    if (options_.output_dir) {
        const std::filesystem::path dir(*options_.output_dir);
        const std::string stem = "session-" + std::to_string(tasks_started_) + "-" + std::string(to_string(task));
        try {
            const auto log_path = (dir / (stem + ".log")).string();
            save_log_file(log_path, *last_log_);
            last_log_path_ = log_path;
            if (task == FeedbackMode::Training && snapshot_)
                save_snapshot_file((dir / "snapshot.json").string(), *snapshot_);
        } catch (const RuntimeError& e) {
            out.broadcast.push_back(error_frame(e.code()));
        }
    }
    out.broadcast.push_back(msg::serialize(msg::Server{msg::TaskEnded{metrics}}));
    return out;
}

SessionOutput Session::tick() {
    SessionOutput out;
    if (!engine_) return out;
    const auto& obs = engine_->observation();
    const auto& st = engine_->state();
    msg::State state;
    state.t = st.t;
    state.angle_deg = st.angle_deg;
    state.bin = obs.bin;
    state.load = st.load;
    state.prediction = obs.prediction;
    state.tactor = obs.decision.tactor_on;
    state.fired_rule = obs.decision.fired_rule;
    state.task = engine_->task();
    state.blindfold = blindfold_;
    out.broadcast.push_back(msg::serialize(msg::Server{state}));

    log_.records.push_back(engine_->advance(JoystickCommand(pending_axis_)));
    if (static_cast<std::int64_t>(log_.records.size()) >= options_.config.duration_ticks) append(out, stop());
    return out;
}

}  // namespace pfb
