#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pfb/harness.hpp"

namespace pfb {

// Configuration document layout:
//   { "duration_ticks": N,
//     "sim": {...SimConfig}, "codec": {...CodecConfig},
//     "thresholds": {...FeedbackThresholds}, "user": {...UserModelConfig},
//     "learner": {...LearnerConfig} }
// Precedence: --set override > config file > built-in default.
nlohmann::ordered_json to_json(const ExperimentConfig& config);

// Strict: unknown keys and wrongly typed values raise ConfigError naming
// the dotted path.
ExperimentConfig experiment_from_json(const nlohmann::json& doc);

// Applies one "dotted.path=value" override to a config document. The value
// is read as a JSON literal when it parses as one, else as a string.
void apply_override(nlohmann::json& doc, const std::string& assignment);

ExperimentConfig load_experiment_config(const std::optional<std::string>& path,
                                        const std::vector<std::string>& overrides = {});

}  // namespace pfb
