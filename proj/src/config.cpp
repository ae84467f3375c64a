#include "pfb/config.hpp"

#include <fstream>
#include <sstream>

#include "pfb/error.hpp"

namespace pfb {

namespace {

using nlohmann::json;

void check_known_keys(const json& doc, const json& schema, const std::string& prefix) {
    if (!doc.is_object()) throw ConfigError(prefix.empty() ? "<root>" : prefix, "expected an object");
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
        if (!schema.contains(it.key())) throw ConfigError(path, "unknown key");
        if (schema.at(it.key()).is_object()) check_known_keys(it.value(), schema.at(it.key()), path);
    }
}

template <typename T>
void read(const json& doc, const char* section, const char* key, T& out) {
    const std::string path = *section ? std::string(section) + "." + key : std::string(key);
    const json* node = &doc;
    if (*section) {
        if (!doc.contains(section)) return;
        node = &doc.at(section);
    }
    if (!node->contains(key)) return;
    const json& v = node->at(key);
    try {
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) throw ConfigError(path, "expected a boolean");
        } else if constexpr (std::is_arithmetic_v<T>) {
            if (!v.is_number()) throw ConfigError(path, "expected a number");
            if constexpr (std::is_integral_v<T>) {
                if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
                if constexpr (std::is_unsigned_v<T>)
                    if (v.is_number_integer() && !v.is_number_unsigned()) throw ConfigError(path, "must be >= 0");
            }
        }
        out = v.get<T>();
    } catch (const json::exception&) {
        throw ConfigError(path, "wrong type");
    }
}

}  // namespace

nlohmann::ordered_json to_json(const ExperimentConfig& c) {
    nlohmann::ordered_json j;
    j["duration_ticks"] = c.duration_ticks;
    auto& sim = j["sim"];
    sim["dt_ms"] = c.sim.dt_ms;
    sim["max_speed_deg_s"] = c.sim.max_speed_deg_s;
    sim["range_deg"] = c.sim.range_deg;
    sim["center_deg"] = c.sim.center_deg;
    sim["wall_halfwidth_deg"] = c.sim.wall_halfwidth_deg;
    sim["max_flex_deg"] = c.sim.max_flex_deg;
    sim["spring_load_per_deg"] = c.sim.spring_load_per_deg;
    sim["impact_load_per_deg_s"] = c.sim.impact_load_per_deg_s;
    sim["free_noise_mean"] = c.sim.free_noise_mean;
    sim["free_noise_std"] = c.sim.free_noise_std;
    sim["rng_seed"] = c.sim.rng_seed;
    auto& codec = j["codec"];
    codec["num_bins"] = c.codec.num_bins;
    codec["range_deg"] = c.codec.range_deg;
    codec["velocity_epsilon_deg_s"] = c.codec.velocity_epsilon_deg_s;
    auto& th = j["thresholds"];
    th["training_load"] = c.thresholds.training_load;
    th["reactive_load"] = c.thresholds.reactive_load;
    th["predictive_value"] = c.thresholds.predictive_value;
    th["min_on_ticks"] = c.thresholds.min_on_ticks;
    auto& user = j["user"];
    user["reaction_latency_ms"] = c.user.reaction_latency_ms;
    user["approach_speed"] = c.user.approach_speed;
    user["training_speed"] = c.user.training_speed;
    user["center_pause_ms"] = c.user.center_pause_ms;
    user["training_hold_ms"] = c.user.training_hold_ms;
    if (c.user.drift_bias)
        user["drift_bias"] = *c.user.drift_bias;
    else
        user["drift_bias"] = nullptr;
    user["drift_bias_min"] = c.user.drift_bias_min;
    user["drift_bias_max"] = c.user.drift_bias_max;
    user["estimate_noise_std"] = c.user.estimate_noise_std;
    user["rng_seed"] = c.user.rng_seed;
    auto& learner = j["learner"];
    learner["alpha"] = c.learner.alpha;
    learner["gamma"] = c.learner.gamma;
    learner["continue_learning"] = c.learner.continue_learning;
    return j;
}

ExperimentConfig experiment_from_json(const nlohmann::json& doc) {
    const json schema = json::parse(to_json(ExperimentConfig{}).dump());
    check_known_keys(doc, schema, "");

    ExperimentConfig c;
    read(doc, "", "duration_ticks", c.duration_ticks);
    read(doc, "sim", "dt_ms", c.sim.dt_ms);
    read(doc, "sim", "max_speed_deg_s", c.sim.max_speed_deg_s);
    read(doc, "sim", "range_deg", c.sim.range_deg);
    read(doc, "sim", "center_deg", c.sim.center_deg);
    read(doc, "sim", "wall_halfwidth_deg", c.sim.wall_halfwidth_deg);
    read(doc, "sim", "max_flex_deg", c.sim.max_flex_deg);
    read(doc, "sim", "spring_load_per_deg", c.sim.spring_load_per_deg);
    read(doc, "sim", "impact_load_per_deg_s", c.sim.impact_load_per_deg_s);
    read(doc, "sim", "free_noise_mean", c.sim.free_noise_mean);
    read(doc, "sim", "free_noise_std", c.sim.free_noise_std);
    read(doc, "sim", "rng_seed", c.sim.rng_seed);
    read(doc, "codec", "num_bins", c.codec.num_bins);
    read(doc, "codec", "range_deg", c.codec.range_deg);
    read(doc, "codec", "velocity_epsilon_deg_s", c.codec.velocity_epsilon_deg_s);
    read(doc, "thresholds", "training_load", c.thresholds.training_load);
    read(doc, "thresholds", "reactive_load", c.thresholds.reactive_load);
    read(doc, "thresholds", "predictive_value", c.thresholds.predictive_value);
    read(doc, "thresholds", "min_on_ticks", c.thresholds.min_on_ticks);
    read(doc, "user", "reaction_latency_ms", c.user.reaction_latency_ms);
    read(doc, "user", "approach_speed", c.user.approach_speed);
    read(doc, "user", "training_speed", c.user.training_speed);
    read(doc, "user", "center_pause_ms", c.user.center_pause_ms);
    read(doc, "user", "training_hold_ms", c.user.training_hold_ms);
    if (doc.contains("user") && doc.at("user").contains("drift_bias")) {
        const auto& v = doc.at("user").at("drift_bias");
        if (v.is_null())
            c.user.drift_bias.reset();
        else if (v.is_number())
            c.user.drift_bias = v.get<double>();
        else
            throw ConfigError("user.drift_bias", "expected a number or null");
    }
    read(doc, "user", "drift_bias_min", c.user.drift_bias_min);
    read(doc, "user", "drift_bias_max", c.user.drift_bias_max);
    read(doc, "user", "estimate_noise_std", c.user.estimate_noise_std);
    read(doc, "user", "rng_seed", c.user.rng_seed);
    read(doc, "learner", "alpha", c.learner.alpha);
    read(doc, "learner", "gamma", c.learner.gamma);
    read(doc, "learner", "continue_learning", c.learner.continue_learning);
    validate(c);
    return c;
}

void apply_override(nlohmann::json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError(assignment, "override must look like key=value");
    const std::string path = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);

    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;

    json* node = &doc;
    std::size_t start = 0;
    while (true) {
        const auto dot = path.find('.', start);
        const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (key.empty()) throw ConfigError(path, "empty path component");
        if (dot == std::string::npos) {
            (*node)[key] = value;
            break;
        }
        node = &(*node)[key];
        if (!node->is_object() && !node->is_null()) throw ConfigError(path, "not an object");
        start = dot + 1;
    }
}

ExperimentConfig load_experiment_config(const std::optional<std::string>& path,
                                        const std::vector<std::string>& overrides) {
    json doc = json::object();
    if (path) {
        std::ifstream in(*path);
        if (!in) throw ConfigError("config", "cannot open " + *path);
        std::ostringstream buf;
        buf << in.rdbuf();
        doc = json::parse(buf.str(), nullptr, false);
        if (doc.is_discarded()) throw ConfigError("config", *path + " is not valid JSON");
    }
    for (const auto& o : overrides) apply_override(doc, o);
    return experiment_from_json(doc);
}

}  // namespace pfb
