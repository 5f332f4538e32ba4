#pragma once

#include "fbf/basis.hpp"
#include "fbf/hybrid_model.hpp"
#include "fbf/linalg.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>

namespace fbf {

/// (L_a * PsiT_C)^+ : the reference gain shared by the optimizer and the monitor.
Pseudoinverse window_gain(const DataDrivenLift& lift, const BasisSet& basis, double rel_tol = 1e-10);

/**
 * @brief Window-to-window closed loop under frozen weights.
 *
 *   x[j+1] = A x[j] + B gamma_C[j],   gamma_C[j] = K x[j] + M y_d[j]
 *
 * State blocks, in order: measured-as-predicted output of batches j-2, j-1, j
 * (h2, h1, h0), committed physics predictions of the same batches (p2, p1, p0),
 * past coefficients (n_p), and a constant 1. The h0 and p0 blocks are never
 * read, and the constant's row is zero, so callers propagating the affine part
 * reset the last entry to 1 after each step.
 */
struct ClosedLoopSystem {
    Eigen::MatrixXd A, B, K, M;
    int N = 0, n_p = 0, n_c = 0;
    bool rank_deficient = false;

    int state_dim() const { return 6 * N + n_p + 1; }
    int h2() const { return 0; }
    int h1() const { return N; }
    int h0() const { return 2 * N; }
    int p2() const { return 3 * N; }
    int p1() const { return 4 * N; }
    int p0() const { return 5 * N; }
    int g() const { return 6 * N; }
    int bias() const { return 6 * N + n_p; }

    Eigen::MatrixXd closed_loop() const { return A + B * K; }
    /// One window with the constant entry held at 1.
    Eigen::VectorXd step(const Eigen::VectorXd& x, const Eigen::VectorXd& y_d) const;
    /// A + BK restricted to [h2, h1, p2, p1, past coefficients]; same nonzero spectrum.
    Eigen::MatrixXd reduced_closed_loop() const;
};

ClosedLoopSystem assemble_closed_loop(const DataDrivenLift& lift, const BasisSet& basis, double rel_tol = 1e-10);

struct RadiusEstimate {
    double value = 0.0;
    enum class Method { power, dense, failed } method = Method::failed;
};

/// Power iteration first, dense eigensolver as fallback; +inf if both fail.
RadiusEstimate spectral_radius(const Eigen::MatrixXd& closed_loop);
RadiusEstimate spectral_radius(const ClosedLoopSystem& system);

enum class Verdict { stable, warning, alarm };

Verdict check_stability(double radius, double threshold = 0.97);
std::string to_string(Verdict v);

/// Per-window evaluation with a cache keyed on the lift weights.
class StabilityMonitor {
public:
    StabilityMonitor(const BasisSet& basis, const HybridConfig& hybrid, double threshold, double rel_tol = 1e-10);

    struct Result {
        double radius = 0.0;
        Verdict verdict = Verdict::stable;
        bool cached = false;
    };

    /// `lift`, when given, must be the window lift of `weights`.
    Result evaluate(const Eigen::VectorXd& weights, const DataDrivenLift* lift = nullptr);
    double threshold() const { return threshold_; }

private:
    const BasisSet& basis_;
    HybridConfig hybrid_;
    double threshold_;
    double rel_tol_;
    std::optional<Eigen::VectorXd> last_weights_;
    Result last_;
};

}  // namespace fbf
