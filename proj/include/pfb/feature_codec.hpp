#pragma once

#include <array>
#include <Eigen/Core>

namespace pfb {

struct CodecConfig {
    int num_bins = 32;
    double range_deg = 300.0;
    double velocity_epsilon_deg_s = 0.1;

    double bin_width() const { return range_deg / num_bins; }
    // 3 direction units per bin plus the baseline unit.
    Eigen::Index feature_length() const { return 3 * static_cast<Eigen::Index>(num_bins) + 1; }
};

void validate(const CodecConfig& config);

enum class Direction : int { None = 0, Negative = 1, Positive = 2 };

// Sparse binary feature vector with exactly two active units: one
// position/direction unit and the always-on baseline unit (the last index).
struct FeatureVector {
    Eigen::Index length = 0;
    std::array<Eigen::Index, 2> active{};

    Eigen::Index state_index() const { return active[0]; }
    Eigen::Index baseline_index() const { return active[1]; }

    // Dense 0/1 view, mostly for tests and debugging.
    template <typename Scalar = double>
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> dense() const {
        Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(length);
        for (auto i : active) x[i] = Scalar(1);
        return x;
    }

    bool operator==(const FeatureVector&) const = default;
};

// Boundary angles belong to the upper bin; range_deg clamps into the last bin.
int bin_of(double angle_deg, const CodecConfig& config);

Direction direction_of(double velocity_deg_s, const CodecConfig& config);

FeatureVector encode(double angle_deg, double velocity_deg_s, const CodecConfig& config);

}  // namespace pfb
