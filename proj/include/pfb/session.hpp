#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "pfb/harness.hpp"

namespace pfb {

// --- Wire protocol -------------------------------------------------------
// One JSON object per frame. Field order below is canonical: serialize()
// emits exactly this order, so serialize(parse(m)) == m for canonical m.

namespace msg {

struct Joystick {
    double axis = 0.0;
    bool operator==(const Joystick&) const = default;
};
struct StartTask {
    FeedbackMode task = FeedbackMode::Training;
    bool operator==(const StartTask&) const = default;
};
struct StopTask {
    bool operator==(const StopTask&) const = default;
};
struct SetBlindfold {
    bool on = false;
    bool operator==(const SetBlindfold&) const = default;
};

using Client = std::variant<Joystick, StartTask, StopTask, SetBlindfold>;

struct State {
    std::int64_t t = 0;
    double angle_deg = 0.0;
    int bin = 0;
    int load = 0;
    double prediction = 0.0;
    bool tactor = false;
    FiredRule fired_rule = FiredRule::None;
    FeedbackMode task = FeedbackMode::Training;
    bool blindfold = false;
    bool operator==(const State&) const = default;
};
struct TaskEnded {
    TrialMetrics metrics;
    bool operator==(const TaskEnded&) const = default;
};
struct Error {
    std::string code;
    bool operator==(const Error&) const = default;
};
struct Warning {
    std::string code;
    bool operator==(const Warning&) const = default;
};
// Sent once on connect: "driver" or "observer".
struct Role {
    std::string role;
    bool operator==(const Role&) const = default;
};

using Server = std::variant<State, TaskEnded, Error, Warning, Role>;

// Failure to read a client frame. `code` is one of bad_json, unknown_type,
// bad_field.
struct ParseFailure {
    std::string code;
};

std::string serialize(const Client& m);
std::string serialize(const Server& m);

// Joystick axes are returned unclamped; the session clamps and warns.
std::variant<Client, ParseFailure> parse_client(const std::string& text);
std::variant<Server, ParseFailure> parse_server(const std::string& text);

}  // namespace msg

// --- Session core --------------------------------------------------------

struct SessionOptions {
    ExperimentConfig config;
    // When set, finished logs and the training snapshot are written here.
    std::optional<std::string> output_dir;
    // Snapshot to use before any training task has completed.
    std::optional<WeightSnapshot> snapshot;
};

// Everything a session does in response to a message or a tick. Owned and
// driven by a single loop; not thread-safe by itself.
struct SessionOutput {
    std::vector<std::string> reply;      // to the sender only
    std::vector<std::string> broadcast;  // to every connected client
    bool close_sender = false;
};

class Session {
public:
    explicit Session(SessionOptions options);

    // Only the driver may control the session; observers get not_driver.
    SessionOutput handle_message(const std::string& text, bool from_driver);
    // Advances one tick when a task is running: streams the current state,
    // then applies the held joystick command. Ends the task after
    // duration_ticks.
    SessionOutput tick();

    bool running() const { return engine_.has_value(); }
    std::optional<FeedbackMode> task() const;
    bool blindfold() const { return blindfold_; }
    double pending_axis() const { return pending_axis_; }
    const std::optional<WeightSnapshot>& snapshot() const { return snapshot_; }
    // The log of the most recently finished task.
    const std::optional<TrialLog>& last_log() const { return last_log_; }
    const std::optional<std::string>& last_log_path() const { return last_log_path_; }
    const ExperimentConfig& config() const { return options_.config; }

private:
    SessionOutput start(FeedbackMode task);
    SessionOutput stop();

    SessionOptions options_;
    std::optional<WeightSnapshot> snapshot_;
    std::optional<TrialEngine> engine_;
    TrialLog log_;
    std::optional<TrialLog> last_log_;
    std::optional<std::string> last_log_path_;
    double pending_axis_ = 0.0;
    bool blindfold_ = false;
    std::uint64_t tasks_started_ = 0;
};

}  // namespace pfb
