#include "pfb/arm_sim.hpp"

#include <cmath>

#include "pfb/error.hpp"
#include "pfb/random.hpp"

namespace pfb {

namespace {

void require(bool ok, const char* field, const char* what) {
    if (!ok) throw ConfigError(std::string("sim.") + field, what);
}

// Commanded displacement `delta` applied against compliant walls: full rate
// in free space, half rate while penetrating (in either direction), with
// penetration capped at `max_flex`.
double advance(double p, double delta, const WallAngles& walls, double max_flex) {
    const double left = walls.left_deg;
    const double right = walls.right_deg;
    double remaining = delta;
    for (int pass = 0; pass < 4 && remaining != 0.0; ++pass) {
        if (p > right || (p == right && remaining > 0.0)) {
            if (remaining > 0.0) {
                p = std::min(p + 0.5 * remaining, right + max_flex);
                remaining = 0.0;
            } else {
                const double exit_cost = 2.0 * (p - right);
                if (-remaining <= exit_cost) {
                    p += 0.5 * remaining;
                    remaining = 0.0;
                } else {
                    remaining += exit_cost;
                    p = right;
                }
            }
        } else if (p < left || (p == left && remaining < 0.0)) {
            if (remaining < 0.0) {
                p = std::max(p + 0.5 * remaining, left - max_flex);
                remaining = 0.0;
            } else {
                const double exit_cost = 2.0 * (left - p);
                if (remaining <= exit_cost) {
                    p += 0.5 * remaining;
                    remaining = 0.0;
                } else {
                    remaining -= exit_cost;
                    p = left;
                }
            }
        } else if (remaining > 0.0) {
            const double room = right - p;
            if (remaining <= room) {
                p += remaining;
                remaining = 0.0;
            } else {
                remaining -= room;
                p = right;
            }
        } else {
            const double room = p - left;
            if (-remaining <= room) {
                p += remaining;
                remaining = 0.0;
            } else {
                remaining += room;
                p = left;
            }
        }
    }
    return p;
}

double penetration(double p, const WallAngles& walls) {
    if (p > walls.right_deg) return p - walls.right_deg;
    if (p < walls.left_deg) return walls.left_deg - p;
    return 0.0;
}

int to_load(double raw) {
    if (!(raw == raw)) return 0;
    return static_cast<int>(std::lround(std::clamp(raw, 0.0, static_cast<double>(kMaxLoad))));
}

double noise_sample(const SimConfig& config, std::int64_t t) {
    if (config.free_noise_std == 0.0) return config.free_noise_mean;
    return config.free_noise_mean +
           config.free_noise_std *
               standard_normal(config.rng_seed, stream::kLoadNoise, static_cast<std::uint64_t>(t));
}

}  // namespace

void validate(const SimConfig& c) {
    require(std::isfinite(c.dt_ms) && c.dt_ms > 0.0, "dt_ms", "must be > 0");
    require(std::isfinite(c.max_speed_deg_s) && c.max_speed_deg_s > 0.0, "max_speed_deg_s", "must be > 0");
    require(std::isfinite(c.range_deg) && c.range_deg > 0.0, "range_deg", "must be > 0");
    require(std::isfinite(c.wall_halfwidth_deg) && c.wall_halfwidth_deg > 0.0 &&
                c.wall_halfwidth_deg < c.range_deg / 2.0,
            "wall_halfwidth_deg", "must lie in (0, range_deg/2)");
    require(std::isfinite(c.center_deg) && c.center_deg - c.wall_halfwidth_deg >= 0.0 &&
                c.center_deg + c.wall_halfwidth_deg <= c.range_deg,
            "center_deg", "walls must lie inside [0, range_deg]");
    require(std::isfinite(c.max_flex_deg) && c.max_flex_deg > 0.0, "max_flex_deg", "must be > 0");
    require(std::isfinite(c.spring_load_per_deg) && c.spring_load_per_deg > 0.0, "spring_load_per_deg",
            "must be > 0");
    require(c.spring_load_per_deg * c.max_flex_deg >= kMaxLoad, "spring_load_per_deg",
            "spring_load_per_deg * max_flex_deg must reach 1024");
    require(std::isfinite(c.impact_load_per_deg_s) && c.impact_load_per_deg_s >= 0.0,
            "impact_load_per_deg_s", "must be >= 0");
    require(std::isfinite(c.free_noise_mean), "free_noise_mean", "must be finite");
    require(std::isfinite(c.free_noise_std) && c.free_noise_std >= 0.0, "free_noise_std", "must be >= 0");
}

WallAngles wall_angles(const SimConfig& config) {
    return {config.center_deg - config.wall_halfwidth_deg, config.center_deg + config.wall_halfwidth_deg};
}

int free_load_draw(const SimConfig& config, std::int64_t t) { return to_load(noise_sample(config, t)); }

ServoState sim_reset(const SimConfig& config) {
    validate(config);
    ServoState s;
    s.t = 0;
    s.angle_deg = config.center_deg;
    s.load = free_load_draw(config, 0);
    return s;
}

ServoState sim_step(const ServoState& state, JoystickCommand cmd, const SimConfig& config) {
    const WallAngles walls = wall_angles(config);
    const double commanded_speed = cmd.axis() * config.max_speed_deg_s;
    const double delta = commanded_speed * config.dt_s();

    double angle = advance(state.angle_deg, delta, walls, config.max_flex_deg);
    angle = std::clamp(angle, 0.0, config.range_deg);

    ServoState next;
    next.t = state.t + 1;
    next.angle_deg = angle;
    next.velocity_deg_s = (angle - state.angle_deg) / config.dt_s();
    next.penetration_deg = std::min(penetration(angle, walls), config.max_flex_deg);
    next.in_contact = next.penetration_deg > 0.0;

    double raw = noise_sample(config, next.t);
    if (next.in_contact) {
        raw += config.spring_load_per_deg * next.penetration_deg;
        if (!state.in_contact) raw += config.impact_load_per_deg_s * std::abs(commanded_speed);
    }
    next.load = to_load(raw);
    return next;
}

}  // namespace pfb
