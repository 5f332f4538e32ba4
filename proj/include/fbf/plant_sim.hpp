#pragma once

#include "fbf/lifted_systems.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace fbf {

/**
 * @brief Virtual plant configuration.
 *
 * kind = nonlinear: nominal linear response followed by an output-stage cubic
 * softening and Coulomb-like friction,
 *
 *   y = y_lin - g * y_lin^3 / S^2 - f * sign(y_lin(k) - y_lin(k-1)).
 *
 * kind = hybrid_consistent: y = y_lin + e with e generated by the same linear
 * regression the hybrid model learns, driven by the plant's own history. Its
 * weights are set from outside each batch, which lets tests build plants the
 * hybrid model describes exactly.
 */
struct PlantConfig {
    enum class Kind { nonlinear, hybrid_consistent };

    ContinuousTransferFunction nominal;
    Kind kind = Kind::nonlinear;
    double cubic_stiffness_gain = 0.0;
    double amplitude_scale = 1.0;  // S above, output units
    double friction_coefficient = 0.0;
    double resonance_detune = 1.0;  // scales the two mid-band denominator coefficients
    double noise_sigma = 0.0;
    int delay_batches = 1;
    int batch_length = 70;
    double Ts = 0.001;

    void validate() const;
};

struct Batch {
    int index = 0;
    std::vector<double> values;
};

/// Copy of `tf` with denominator coefficients n/2-1 and n/2 multiplied by `factor`
/// (n = number of denominator coefficients).
ContinuousTransferFunction detune_resonance(const ContinuousTransferFunction& tf, double factor);

class Plant {
public:
    Plant(const PlantConfig& config, std::uint64_t seed);

    /// Apply u over batch u.index (must be the next index) and return the true output.
    Batch step_batch(const Batch& u);

    /// Measured batch j once batch j + delay_batches has been commanded, else nullopt.
    /// Throws std::invalid_argument for a batch that was never produced.
    std::optional<Batch> fetch_measurement(int j) const;

    /// Weights [bias, y_lin taps (q), error taps (p)] of the hybrid-consistent error recursion.
    void set_error_model(int q, int p, const Eigen::VectorXd& weights);

    int last_commanded() const { return next_batch_ - 1; }
    const PlantConfig& config() const { return config_; }
    const DiscreteStateSpace& model() const { return model_; }
    const std::vector<double>& linear_output() const { return y_lin_; }
    const std::vector<double>& true_output() const { return y_true_; }
    const std::vector<double>& measured_output() const { return y_meas_; }

private:
    PlantConfig config_;
    DiscreteStateSpace model_;
    Eigen::VectorXd x_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> noise_;
    int next_batch_ = 0;
    std::vector<double> y_lin_, y_true_, y_meas_, e_;
    int q_ = 0, p_ = 0;
    Eigen::VectorXd w_;
};

}  // namespace fbf
