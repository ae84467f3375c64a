#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pfb/feature_codec.hpp"
#include "pfb/feedback.hpp"

namespace pfb {

struct TrialStepRecord {
    std::int64_t t = 0;
    double angle_deg = 0.0;
    double velocity_deg_s = 0.0;
    int bin = 0;
    int load = 0;
    double prediction = 0.0;
    bool tactor_on = false;
    FiredRule fired_rule = FiredRule::None;
    double joystick_axis = 0.0;
    bool in_contact = false;

    bool operator==(const TrialStepRecord&) const = default;
};

// A trial's per-tick records plus the context needed to interpret them.
struct TrialLog {
    static constexpr int kSchemaVersion = 1;

    FeedbackMode task = FeedbackMode::Training;
    double dt_ms = 50.0;
    double center_deg = 150.0;
    std::vector<TrialStepRecord> records;

    bool operator==(const TrialLog&) const = default;
};

// Line-oriented text form. Line 1 is a header object
//   {"schema":"pfb.trial_log","version":1,"task":...,"dt_ms":...,"center_deg":...}
// followed by one flat object per tick with the fields, in order,
//   t, angle_deg, velocity_deg_s, bin, load, prediction, tactor_on,
//   fired_rule, joystick_axis, in_contact.
std::string header_line(const TrialLog& log);
std::string record_line(const TrialStepRecord& record);
void write_log(std::ostream& out, const TrialLog& log);
void save_log_file(const std::string& path, const TrialLog& log);

// Throws ParseError carrying the 1-based line number of the first bad line.
TrialLog parse_log(std::istream& in);
TrialLog load_log_file(const std::string& path);

struct TrialMetrics {
    std::int64_t duration_ticks = 0;
    std::int64_t total_summed_load = 0;
    std::vector<std::int64_t> per_bin_visits;
    std::vector<double> per_bin_visit_fraction;
    std::vector<std::int64_t> per_bin_summed_load;
    std::int64_t wall_contact_count = 0;
    std::int64_t left_contact_count = 0;
    std::int64_t right_contact_count = 0;
    // Median of (contact tick - paired tactor onset tick) * dt over contacts
    // that had feedback in the same approach. Absent when there are none.
    std::optional<double> median_feedback_lead_ms;
    std::int64_t paired_contact_count = 0;

    bool operator==(const TrialMetrics&) const = default;
};

// Pure aggregation over a log. An approach is a maximal run of ticks whose
// joystick command keeps the same nonzero sign; each contact (rising edge of
// in_contact) pairs with the latest tactor onset at or before it in its
// approach, else with the first onset after it in the same approach.
TrialMetrics compute_metrics(const TrialLog& log, const CodecConfig& codec);

nlohmann::ordered_json to_json(const TrialMetrics& metrics);
TrialMetrics metrics_from_json(const nlohmann::json& j);

}  // namespace pfb
