#pragma once

#include "fbf/basis.hpp"
#include "fbf/hybrid_model.hpp"
#include "fbf/linalg.hpp"
#include "fbf/plant_sim.hpp"
#include "fbf/stability_monitor.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fbf {

enum class ControlMode { none, standard, hybrid };
enum class Mitigation { freeze_learning, revert_standard, halt, monitor_only };

ControlMode parse_control_mode(const std::string& s);
Mitigation parse_mitigation(const std::string& s);
std::string to_string(ControlMode m);
std::string to_string(Mitigation m);

/**
 * @brief Scales the error-feedback taps of the active weights over time.
 *
 * s(j) ramps linearly from scale_start at start_batch to scale_end after
 * ramp_batches. With explicit weights the schedule replaces learning entirely.
 */
struct InstabilityInjection {
    bool enabled = false;
    int start_batch = 0;
    int ramp_batches = 1;
    double scale_start = 1.0;
    double scale_end = 1.0;
    std::optional<Eigen::VectorXd> weights;

    double scale(int j) const;
};

struct ControllerConfig {
    ControlMode mode = ControlMode::hybrid;
    int warmup_batches = 78;
    bool learning = true;
    std::optional<Eigen::VectorXd> initial_weights;  // used while learning is off
    Mitigation mitigation = Mitigation::freeze_learning;
    double stability_threshold = 0.97;
    bool monitor = true;
    double pinv_tolerance = 1e-10;
    InstabilityInjection instability;
    bool keep_window_traces = false;
};

struct WindowSolution {
    Eigen::VectorXd gamma_C;
    bool rank_deficient = false;
};

/// gamma_C = M (y_d - L_a PsiT_PC gamma_P - L_uy ypb_past - L_ue e_tail - L_u1), M = window_gain(lift, basis).
WindowSolution optimize_window(const Eigen::VectorXd& y_d, const BasisSet& basis, const DataDrivenLift& lift,
                               const Pseudoinverse& gain, const Eigen::VectorXd& gamma_P,
                               const Eigen::VectorXd& ypb_past, const Eigen::VectorXd& e_tail);
WindowSolution optimize_window(const Eigen::VectorXd& y_d, const BasisSet& basis, const DataDrivenLift& lift,
                               const Eigen::VectorXd& gamma_P, const Eigen::VectorXd& ypb_past,
                               const Eigen::VectorXd& e_tail, double rel_tol = 1e-10);

/// First batch of Psi_C gamma_C + Psi_PC gamma_P.
Eigen::VectorXd reconstruct_input(const Eigen::VectorXd& gamma_C, const Eigen::VectorXd& gamma_P,
                                  const BasisSet& basis);

/// Past coefficients of the next window: drop the oldest batch worth, append the committed ones.
Eigen::VectorXd advance_past_coefficients(const Eigen::VectorXd& gamma_P, const Eigen::VectorXd& gamma_C,
                                          const BasisSet& basis);

struct WindowTrace {
    int window = 0;
    Eigen::VectorXd weights;
    Eigen::VectorXd gamma_P, gamma_C;
    Eigen::VectorXd y_d;         // window reference
    Eigen::VectorXd yh_window;   // hybrid prediction over the window
    Eigen::VectorXd ypb_window;  // physics prediction over the window
};

/// Per-step traces and per-window monitor output of one run.
struct TrackingRecord {
    int batch_length = 0;
    std::vector<double> y_d, u, y_true, y_meas, y_hat_pb, y_hat_h;
    std::vector<double> spectral_radius;  // NaN when not evaluated
    std::vector<std::string> verdict;
    std::vector<double> weight_change_norm;
    std::vector<bool> rank_deficient;
    std::vector<WindowTrace> traces;
    std::optional<int> alarm_window;
    int mitigated_windows = 0;

    std::size_t steps() const { return u.size(); }
    double error(std::size_t k) const { return y_d[k] - y_meas[k]; }
};

struct TrackingSetup {
    PlantConfig plant;  // the controller models plant.nominal, undetuned
    BasisConfig basis;
    HybridConfig hybrid;
    ControllerConfig controller;
    std::vector<double> y_d;  // at least batches * N + window_length samples
    int batches = 0;
    std::uint64_t seed = 0;
};

/// Raised when the monitor alarms under the halt policy.
class StabilityHalt : public std::runtime_error {
public:
    StabilityHalt(int window, double radius);
    int window;
    double radius;
};

/// Runs the batch loop, filling `record` as it goes so a partial record survives exceptions.
void run_tracking(const TrackingSetup& setup, TrackingRecord& record);
TrackingRecord run_tracking(const TrackingSetup& setup);

}  // namespace fbf
