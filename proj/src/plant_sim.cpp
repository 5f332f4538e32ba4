#include "fbf/plant_sim.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace fbf {

void PlantConfig::validate() const {
    if (!(noise_sigma >= 0.0)) throw std::invalid_argument("plant: noise_sigma must be >= 0");
    if (delay_batches < 0) throw std::invalid_argument("plant: delay_batches must be >= 0");
    if (batch_length < 1) throw std::invalid_argument("plant: batch_length must be >= 1");
    if (!(Ts > 0.0)) throw std::invalid_argument("plant: Ts must be positive");
    if (!(amplitude_scale > 0.0)) throw std::invalid_argument("plant: amplitude_scale must be positive");
    if (!(resonance_detune > 0.0)) throw std::invalid_argument("plant: resonance_detune must be positive");
    if (!std::isfinite(cubic_stiffness_gain) || !std::isfinite(friction_coefficient))
        throw std::invalid_argument("plant: nonlinear gains must be finite");
}

ContinuousTransferFunction detune_resonance(const ContinuousTransferFunction& tf, double factor) {
    std::vector<double> den = tf.denominator;
    const std::size_t n = den.size();
    if (n < 3) throw std::invalid_argument("detune_resonance: denominator order too low");
    den[n / 2 - 1] *= factor;
    den[n / 2] *= factor;
    return {tf.numerator, den};
}

Plant::Plant(const PlantConfig& config, std::uint64_t seed)
    : config_(config),
      model_([&] {
          config.validate();
          const auto tf = config.resonance_detune == 1.0 ? config.nominal
                                                         : detune_resonance(config.nominal, config.resonance_detune);
          return discretize_zoh(tf, config.Ts);
      }()),
      x_(Eigen::VectorXd::Zero(model_.order())),
      rng_(seed),
      noise_(0.0, 1.0) {}

void Plant::set_error_model(int q, int p, const Eigen::VectorXd& weights) {
    if (config_.kind != PlantConfig::Kind::hybrid_consistent)
        throw std::invalid_argument("plant: error model only applies to hybrid_consistent plants");
    if (q < 0 || p < 0 || weights.size() != 1 + q + p)
        throw std::invalid_argument("plant: error model weights have the wrong length");
    q_ = q;
    p_ = p;
    w_ = weights;
}

Batch Plant::step_batch(const Batch& u) {
    if (u.index != next_batch_) {
        std::ostringstream os;
        os << "plant: batch " << u.index << " commanded out of order (expected " << next_batch_ << ")";
        throw std::invalid_argument(os.str());
    }
    if (static_cast<int>(u.values.size()) != config_.batch_length)
        throw std::invalid_argument("plant: input batch has the wrong length");

    const bool consistent = config_.kind == PlantConfig::Kind::hybrid_consistent;
    Batch out{u.index, std::vector<double>(u.values.size())};
    for (std::size_t i = 0; i < u.values.size(); ++i) {
        const double uk = u.values[i];
        const double ylin = model_.C().dot(x_) + model_.D() * uk;
        if (model_.order() > 0) x_ = model_.A() * x_ + model_.B() * uk;
        const long k = static_cast<long>(y_lin_.size());
        y_lin_.push_back(ylin);

        double y = ylin;
        if (consistent) {
            double e = 0.0;
            if (w_.size() > 0) {
                e = w_(0);
                for (int t = 0; t < q_; ++t) {
                    const long idx = k - q_ + 1 + t;
                    if (idx >= 0) e += w_(1 + t) * y_lin_[idx];
                }
                for (int t = 0; t < p_; ++t) {
                    const long idx = k - p_ + t;
                    if (idx >= 0) e += w_(1 + q_ + t) * e_[idx];
                }
            }
            e_.push_back(e);
            y += e;
        } else {
            const double S = config_.amplitude_scale;
            y -= config_.cubic_stiffness_gain * ylin * ylin * ylin / (S * S);
            if (config_.friction_coefficient != 0.0) {
                const double dv = k > 0 ? ylin - y_lin_[k - 1] : ylin;
                const double sgn = dv > 0.0 ? 1.0 : (dv < 0.0 ? -1.0 : 0.0);
                y -= config_.friction_coefficient * sgn;
            }
        }
        y_true_.push_back(y);
        // Draw every step so the noise sequence does not depend on sigma.
        y_meas_.push_back(y + config_.noise_sigma * noise_(rng_));
        out.values[i] = y;
    }
    ++next_batch_;
    return out;
}

std::optional<Batch> Plant::fetch_measurement(int j) const {
    if (j < 0 || j > last_commanded()) {
        std::ostringstream os;
        os << "plant: batch " << j << " has not been produced";
        throw std::invalid_argument(os.str());
    }
    if (j + config_.delay_batches > last_commanded()) return std::nullopt;
    const std::size_t N = static_cast<std::size_t>(config_.batch_length);
    Batch b{j, std::vector<double>(y_meas_.begin() + j * N, y_meas_.begin() + (j + 1) * N)};
    return b;
}

}  // namespace fbf
