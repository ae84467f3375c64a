#pragma once

#include <algorithm>
#include <cstdint>
#include <utility>

namespace pfb {

inline constexpr int kMaxLoad = 1024;

// Simulated 1-DOF servo shoulder inside a walled workspace.
struct SimConfig {
    double dt_ms = 50.0;
    double max_speed_deg_s = 45.0;
    double range_deg = 300.0;
    double center_deg = 150.0;
    double wall_halfwidth_deg = 28.125;
    double max_flex_deg = 23.4;
    double spring_load_per_deg = 51.2;
    double impact_load_per_deg_s = 12.0;
    double free_noise_mean = 30.0;
    double free_noise_std = 15.0;
    std::uint64_t rng_seed = 0;

    double dt_s() const { return dt_ms / 1000.0; }
};

// Throws ConfigError naming the first violated field.
void validate(const SimConfig& config);

enum class WallSide : std::int8_t { None = 0, Left = -1, Right = 1 };

struct ServoState {
    std::int64_t t = 0;
    double angle_deg = 0.0;
    double velocity_deg_s = 0.0;
    int load = 0;
    bool in_contact = false;
    double penetration_deg = 0.0;

    bool operator==(const ServoState&) const = default;
};

// Joystick shoulder axis; negative drives toward the left wall.
class JoystickCommand {
public:
    constexpr JoystickCommand() = default;
    constexpr explicit JoystickCommand(double axis) : axis_(clamp_axis(axis)) {}

    constexpr double axis() const { return axis_; }

    static constexpr double clamp_axis(double axis) {
        // NaN maps to rest.
        if (!(axis == axis)) return 0.0;
        return std::clamp(axis, -1.0, 1.0);
    }

private:
    double axis_ = 0.0;
};

struct WallAngles {
    double left_deg;
    double right_deg;
};

WallAngles wall_angles(const SimConfig& config);

ServoState sim_reset(const SimConfig& config);

// Advances one tick. Pure: the free-space noise for tick t is keyed by
// (config.rng_seed, t), so equal inputs give bit-identical outputs.
ServoState sim_step(const ServoState& state, JoystickCommand cmd, const SimConfig& config);

// Clamped, integer-rounded free-space load sample for tick `t`.
int free_load_draw(const SimConfig& config, std::int64_t t);

}  // namespace pfb
