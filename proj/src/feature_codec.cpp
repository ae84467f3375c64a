#include "pfb/feature_codec.hpp"

#include <cmath>
#include <string>

#include "pfb/error.hpp"

namespace pfb {

void validate(const CodecConfig& c) {
    if (c.num_bins < 1) throw ConfigError("codec.num_bins", "must be >= 1");
    if (!(std::isfinite(c.range_deg) && c.range_deg > 0.0)) throw ConfigError("codec.range_deg", "must be > 0");
    if (!(std::isfinite(c.velocity_epsilon_deg_s) && c.velocity_epsilon_deg_s >= 0.0))
        throw ConfigError("codec.velocity_epsilon_deg_s", "must be >= 0");
}

int bin_of(double angle_deg, const CodecConfig& config) {
    if (!(angle_deg >= 0.0 && angle_deg <= config.range_deg))
        throw DomainError("angle " + std::to_string(angle_deg) + " outside [0, " +
                          std::to_string(config.range_deg) + "]");
    const int bin = static_cast<int>(std::floor(angle_deg / config.bin_width()));
    return std::min(bin, config.num_bins - 1);
}

Direction direction_of(double velocity_deg_s, const CodecConfig& config) {
    if (std::abs(velocity_deg_s) <= config.velocity_epsilon_deg_s) return Direction::None;
    return velocity_deg_s < 0.0 ? Direction::Negative : Direction::Positive;
}

FeatureVector encode(double angle_deg, double velocity_deg_s, const CodecConfig& config) {
    const int bin = bin_of(angle_deg, config);
    FeatureVector x;
    x.length = config.feature_length();
    x.active[0] = 3 * static_cast<Eigen::Index>(bin) + static_cast<Eigen::Index>(direction_of(velocity_deg_s, config));
    x.active[1] = x.length - 1;
    return x;
}

}  // namespace pfb
