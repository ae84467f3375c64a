#include "pfb/trial_log.hpp"

#include <algorithm>
#include <fstream>

#include "pfb/error.hpp"

namespace pfb {

namespace {

constexpr const char* kSchemaName = "pfb.trial_log";

template <typename T>
T field(const nlohmann::json& obj, const char* name) {
    return obj.at(name).get<T>();
}

TrialStepRecord parse_record(const nlohmann::json& j) {
    if (!j.is_object()) throw ParseError("record is not an object");
    TrialStepRecord r;
    r.t = field<std::int64_t>(j, "t");
    r.angle_deg = field<double>(j, "angle_deg");
    r.velocity_deg_s = field<double>(j, "velocity_deg_s");
    r.bin = field<int>(j, "bin");
    r.load = field<int>(j, "load");
    r.prediction = field<double>(j, "prediction");
    r.tactor_on = field<bool>(j, "tactor_on");
    const auto rule = parse_fired_rule(field<std::string>(j, "fired_rule"));
    if (!rule) throw ParseError("unknown fired_rule");
    r.fired_rule = *rule;
    r.joystick_axis = field<double>(j, "joystick_axis");
    r.in_contact = field<bool>(j, "in_contact");
    return r;
}

int axis_sign(double axis) { return (axis > 0.0) - (axis < 0.0); }

}  // namespace

std::string header_line(const TrialLog& log) {
    nlohmann::ordered_json h;
    h["schema"] = kSchemaName;
    h["version"] = TrialLog::kSchemaVersion;
    h["task"] = std::string(to_string(log.task));
    h["dt_ms"] = log.dt_ms;
    h["center_deg"] = log.center_deg;
    return h.dump();
}

std::string record_line(const TrialStepRecord& r) {
    nlohmann::ordered_json j;
    j["t"] = r.t;
    j["angle_deg"] = r.angle_deg;
    j["velocity_deg_s"] = r.velocity_deg_s;
    j["bin"] = r.bin;
    j["load"] = r.load;
    j["prediction"] = r.prediction;
    j["tactor_on"] = r.tactor_on;
    j["fired_rule"] = std::string(to_string(r.fired_rule));
    j["joystick_axis"] = r.joystick_axis;
    j["in_contact"] = r.in_contact;
    return j.dump();
}

void write_log(std::ostream& out, const TrialLog& log) {
    out << header_line(log) << '\n';
    for (const auto& r : log.records) out << record_line(r) << '\n';
}

void save_log_file(const std::string& path, const TrialLog& log) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RuntimeError("io_error", "cannot write log " + path);
    write_log(out, log);
    if (!out) throw RuntimeError("io_error", "failed writing log " + path);
}

TrialLog parse_log(std::istream& in) {
    TrialLog log;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            if (!have_header) {
                if (!j.is_object() || field<std::string>(j, "schema") != kSchemaName)
                    throw ParseError("missing trial log header");
                if (field<int>(j, "version") != TrialLog::kSchemaVersion) throw ParseError("unsupported version");
                const auto task = parse_feedback_mode(field<std::string>(j, "task"));
                if (!task) throw ParseError("unknown task");
                log.task = *task;
                log.dt_ms = field<double>(j, "dt_ms");
                log.center_deg = field<double>(j, "center_deg");
                if (!(log.dt_ms > 0.0)) throw ParseError("dt_ms must be > 0");
                have_header = true;
                continue;
            }
            auto r = parse_record(j);
            const std::int64_t expected = static_cast<std::int64_t>(log.records.size());
            if (r.t != expected) throw ParseError("expected t=" + std::to_string(expected));
            log.records.push_back(r);
        } catch (const ParseError& e) {
            throw ParseError(e.what(), line_no);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(e.what(), line_no);
        }
    }
    if (!have_header) throw ParseError("empty trial log", line_no == 0 ? 1 : line_no);
    return log;
}

TrialLog load_log_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw RuntimeError("io_error", "cannot open log " + path);
    return parse_log(in);
}

TrialMetrics compute_metrics(const TrialLog& log, const CodecConfig& codec) {
    const auto bins = static_cast<std::size_t>(codec.num_bins);
    TrialMetrics m;
    m.duration_ticks = static_cast<std::int64_t>(log.records.size());
    m.per_bin_visits.assign(bins, 0);
    m.per_bin_visit_fraction.assign(bins, 0.0);
    m.per_bin_summed_load.assign(bins, 0);

    const auto& recs = log.records;
    for (std::size_t i = 0; i < recs.size(); ++i) {
        const auto& r = recs[i];
        std::size_t b = 0;
        try {
            b = static_cast<std::size_t>(bin_of(r.angle_deg, codec));
        } catch (const DomainError& e) {
            // Records start on line 2, after the header.
            throw ParseError(e.what(), i + 2);
        }
        ++m.per_bin_visits[b];
        m.per_bin_summed_load[b] += r.load;
        m.total_summed_load += r.load;
    }
    if (m.duration_ticks > 0) {
        for (std::size_t b = 0; b < bins; ++b)
            m.per_bin_visit_fraction[b] =
                static_cast<double>(m.per_bin_visits[b]) / static_cast<double>(m.duration_ticks);
    }

    // Approach id per tick: increments whenever the command sign changes;
    // ticks with a zero command belong to no approach (-1).
    std::vector<std::int64_t> approach(recs.size(), -1);
    std::int64_t current = -1;
    int last_sign = 0;
    for (std::size_t i = 0; i < recs.size(); ++i) {
        const int s = axis_sign(recs[i].joystick_axis);
        if (s != 0 && s != last_sign) ++current;
        if (s != 0) approach[i] = current;
        last_sign = s;
    }

    std::vector<std::size_t> onsets;
    for (std::size_t i = 0; i < recs.size(); ++i)
        if (recs[i].tactor_on && (i == 0 || !recs[i - 1].tactor_on)) onsets.push_back(i);

    std::vector<double> leads;
    for (std::size_t i = 0; i < recs.size(); ++i) {
        if (!recs[i].in_contact || (i > 0 && recs[i - 1].in_contact)) continue;
        ++m.wall_contact_count;
        if (recs[i].angle_deg >= log.center_deg)
            ++m.right_contact_count;
        else
            ++m.left_contact_count;

        // The command issued on the previous tick drove the arm into the wall.
        const std::int64_t id = i > 0 ? approach[i - 1] : -1;
        if (id < 0) continue;
        std::optional<std::size_t> paired;
        for (auto o : onsets) {
            if (approach[o] != id) continue;
            if (o <= i) {
                paired = o;
            } else {
                if (!paired) paired = o;
                break;
            }
        }
        if (paired) {
            leads.push_back((static_cast<double>(i) - static_cast<double>(*paired)) * log.dt_ms);
        }
    }
    m.paired_contact_count = static_cast<std::int64_t>(leads.size());
    if (!leads.empty()) {
        std::sort(leads.begin(), leads.end());
        const std::size_t n = leads.size();
        m.median_feedback_lead_ms = n % 2 ? leads[n / 2] : 0.5 * (leads[n / 2 - 1] + leads[n / 2]);
    }
    return m;
}

nlohmann::ordered_json to_json(const TrialMetrics& m) {
    nlohmann::ordered_json j;
    j["duration_ticks"] = m.duration_ticks;
    j["total_summed_load"] = m.total_summed_load;
    j["per_bin_visits"] = m.per_bin_visits;
    j["per_bin_visit_fraction"] = m.per_bin_visit_fraction;
    j["per_bin_summed_load"] = m.per_bin_summed_load;
    j["wall_contact_count"] = m.wall_contact_count;
    j["left_contact_count"] = m.left_contact_count;
    j["right_contact_count"] = m.right_contact_count;
    j["paired_contact_count"] = m.paired_contact_count;
    if (m.median_feedback_lead_ms)
        j["median_feedback_lead_ms"] = *m.median_feedback_lead_ms;
    else
        j["median_feedback_lead_ms"] = nullptr;
    return j;
}

TrialMetrics metrics_from_json(const nlohmann::json& j) {
    try {
        TrialMetrics m;
        m.duration_ticks = j.at("duration_ticks").get<std::int64_t>();
        m.total_summed_load = j.at("total_summed_load").get<std::int64_t>();
        m.per_bin_visits = j.at("per_bin_visits").get<std::vector<std::int64_t>>();
        m.per_bin_visit_fraction = j.at("per_bin_visit_fraction").get<std::vector<double>>();
        m.per_bin_summed_load = j.at("per_bin_summed_load").get<std::vector<std::int64_t>>();
        m.wall_contact_count = j.at("wall_contact_count").get<std::int64_t>();
        m.left_contact_count = j.value("left_contact_count", std::int64_t{0});
        m.right_contact_count = j.value("right_contact_count", std::int64_t{0});
        m.paired_contact_count = j.value("paired_contact_count", std::int64_t{0});
        const auto& lead = j.at("median_feedback_lead_ms");
        if (!lead.is_null()) m.median_feedback_lead_ms = lead.get<double>();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("metrics: ") + e.what());
    }
}

}  // namespace pfb
