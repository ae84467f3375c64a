#pragma once

#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pfb/error.hpp"
#include "pfb/feature_codec.hpp"

namespace pfb {

// One TD(0) step's bookkeeping.
template <typename Scalar>
struct UpdateRecord {
    Scalar td_error;
    Scalar prediction_before;
    Scalar prediction_after;
};

// Persisted learner state; immutable once taken.
struct WeightSnapshot {
    static constexpr int kFormatVersion = 1;

    double alpha = 0.0;
    double gamma = 0.0;
    bool frozen = false;
    std::uint64_t updates_applied = 0;
    std::vector<double> weights;

    bool operator==(const WeightSnapshot&) const = default;
};

// Text form: a JSON object {format_version, alpha, gamma, frozen,
// updates_applied, length, weights}; reals at 17 significant digits.
std::string to_text(const WeightSnapshot& snapshot);
void write_snapshot(std::ostream& out, const WeightSnapshot& snapshot);
// Throws ParseError on any malformed, truncated or inconsistent document.
WeightSnapshot parse_snapshot(const std::string& text);
WeightSnapshot read_snapshot(std::istream& in);
WeightSnapshot load_snapshot_file(const std::string& path);
void save_snapshot_file(const std::string& path, const WeightSnapshot& snapshot);

// Linear general value function over sparse binary features, learned by
// TD(0):  w += alpha * (tau' + gamma * w.x' - w.x) * x.
// The prediction w.x estimates the discounted sum of future `tau`.
template <typename Scalar = double>
class GvfLearner {
public:
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    GvfLearner(Eigen::Index length, Scalar alpha, Scalar gamma) : w_(Vector::Zero(length)), alpha_(alpha), gamma_(gamma) {
        if (length < 1) throw ConfigError("learner.length", "must be >= 1");
        check_hyperparameters(alpha, gamma);
    }

    static GvfLearner restore(const WeightSnapshot& s) {
        GvfLearner learner(static_cast<Eigen::Index>(s.weights.size()), static_cast<Scalar>(s.alpha),
                           static_cast<Scalar>(s.gamma));
        for (std::size_t i = 0; i < s.weights.size(); ++i) learner.w_[static_cast<Eigen::Index>(i)] = static_cast<Scalar>(s.weights[i]);
        learner.frozen_ = s.frozen;
        learner.updates_applied_ = s.updates_applied;
        return learner;
    }

    WeightSnapshot snapshot() const {
        WeightSnapshot s;
        s.alpha = static_cast<double>(alpha_);
        s.gamma = static_cast<double>(gamma_);
        s.frozen = frozen_;
        s.updates_applied = updates_applied_;
        s.weights.resize(static_cast<std::size_t>(w_.size()));
        for (Eigen::Index i = 0; i < w_.size(); ++i) s.weights[static_cast<std::size_t>(i)] = static_cast<double>(w_[i]);
        return s;
    }

    Scalar predict(const FeatureVector& x) const {
        check_length(x);
        Scalar sum(0);
        for (auto i : x.active) sum += w_[i];
        return sum;
    }

    // delta uses the pre-update weights for both inner products.
    UpdateRecord<Scalar> update(const FeatureVector& x_t, Scalar tau_next, const FeatureVector& x_next) {
        const Scalar before = predict(x_t);
        const Scalar delta = tau_next + gamma_ * predict(x_next) - before;
        if (!frozen_) {
            const Scalar step = alpha_ * delta;
            for (auto i : x_t.active) w_[i] += step;
        }
        ++updates_applied_;
        return {delta, before, predict(x_t)};
    }

    void freeze() { frozen_ = true; }
    void unfreeze() { frozen_ = false; }

    bool frozen() const { return frozen_; }
    Scalar alpha() const { return alpha_; }
    Scalar gamma() const { return gamma_; }
    std::uint64_t updates_applied() const { return updates_applied_; }
    const Vector& weights() const { return w_; }
    Eigen::Index length() const { return w_.size(); }

private:
    static void check_hyperparameters(Scalar alpha, Scalar gamma) {
        if (!(alpha >= Scalar(0) && alpha <= Scalar(1))) throw ConfigError("learner.alpha", "must lie in [0, 1]");
        if (!(gamma >= Scalar(0) && gamma < Scalar(1))) throw ConfigError("learner.gamma", "must lie in [0, 1)");
    }

    void check_length(const FeatureVector& x) const {
        if (x.length != w_.size())
            throw DomainError("feature length " + std::to_string(x.length) + " != weight length " +
                              std::to_string(w_.size()));
    }

    Vector w_;
    Scalar alpha_;
    Scalar gamma_;
    bool frozen_ = false;
    std::uint64_t updates_applied_ = 0;
};

}  // namespace pfb
