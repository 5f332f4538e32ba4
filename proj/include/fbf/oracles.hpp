#pragma once

// Brute-force reference computations. Deliberately naive and independent of
// the production paths they check.

#include "fbf/basis.hpp"
#include "fbf/hybrid_model.hpp"
#include "fbf/lifted_systems.hpp"
#include "fbf/stability_monitor.hpp"

#include <Eigen/Dense>

#include <vector>

namespace fbf::oracle {

/// Closed-form ZOH of 1/(s + a): pole exp(-a Ts), input gain (1 - exp(-a Ts)) / a.
struct FirstOrderZoh {
    double pole, gain;
};
FirstOrderZoh first_order_zoh(double a, double Ts);

/// Continuous step response at k * Ts, k = 0..n-1, by RK4 in long double on the
/// unscaled companion form with `substeps` per sample.
std::vector<double> continuous_step_response(const ContinuousTransferFunction& tf, double Ts, int n,
                                             int substeps = 2000);

/// FIR h realized as a delay line (all poles at 0).
DiscreteStateSpace fir_state_space(const std::vector<double>& h, double Ts = 1.0);

/// Ridge solution (Phi'Phi + lambda I)^{-1} Phi'e via long double Gaussian elimination.
Eigen::VectorXd ridge_normal_equations(const Eigen::MatrixXd& Phi, const Eigen::VectorXd& e, double lambda);

/// Training design matrix from global histories: rows phi(k) for k in [0, e.size()).
Eigen::MatrixXd training_design(const HybridConfig& config, const std::vector<double>& ypb,
                                const std::vector<double>& e);

/// Feature vector at k replayed step by step from the start: measured errors
/// for k' < measured, estimates from the scalar recursion afterwards.
Eigen::VectorXd replay_feature_vector(const HybridConfig& config, const Eigen::VectorXd& w,
                                      const std::vector<double>& ypb, const std::vector<double>& e_measured,
                                      long k);

/// Single-batch predictions chained: first the unmeasured batch from the
/// measured tail, its estimates substituted as errors, then the next batches.
/// ypb covers [-N, 3N) local; returns y_h over [N, 3N).
Eigen::VectorXd chained_window_prediction(const HybridConfig& config, const Eigen::VectorXd& w,
                                          const Eigen::VectorXd& ypb, const Eigen::VectorXd& e_tail);

/// Lift columns by pushing unit vectors through the scalar recursion.
DataDrivenLift unit_vector_lift(const HybridConfig& config, const Eigen::VectorXd& w, DataDrivenLift::Scope scope);

/// Dense eigenvalues of the full (unreduced) A + BK.
double full_closed_loop_radius(const ClosedLoopSystem& system);

/// Smallest s with radius(error taps scaled by s) >= 1, bracketed in [lo, hi].
double bisect_unit_radius(const HybridConfig& config, const BasisSet& basis, const Eigen::VectorXd& base_weights,
                          double lo, double hi, double tol = 1e-6);

/// Number of sampled splines whose support contains steps on both sides of
/// each batch boundary, counted by direct Cox-de Boor evaluation.
int splines_crossing_boundary(const BasisConfig& config);

/// Availability flags of batches 0..commanded after commanding `commanded`, by queue replay.
std::vector<bool> measurement_availability(int delay, int commanded);

/// Full-horizon least squares tracking with the same basis, for in-span checks:
/// returns the residual RMS of min |y_d - G Psi gamma| over all samples.
double full_horizon_lsq_residual(const BasisConfig& config, const DiscreteStateSpace& model,
                                 const std::vector<double>& y_d);

}  // namespace fbf::oracle
