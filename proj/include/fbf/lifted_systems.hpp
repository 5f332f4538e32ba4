#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace fbf {

/**
 * @brief Continuous SISO transfer function, coefficients in descending powers of s.
 *
 * Must be proper (deg num <= deg den) with a nonzero leading denominator
 * coefficient. Leading zeros of the numerator are dropped on construction.
 */
struct ContinuousTransferFunction {
    std::vector<double> numerator;
    std::vector<double> denominator;

    ContinuousTransferFunction() = default;
    ContinuousTransferFunction(std::vector<double> num, std::vector<double> den);

    int order() const { return static_cast<int>(denominator.size()) - 1; }
    double dc_gain() const;
};

/**
 * @brief Discrete, stable SISO state-space model
 *
 *   x(k+1) = A x(k) + B u(k)
 *   y(k)   = C x(k) + D u(k)
 *
 * Construction rejects inconsistent dimensions and any eigenvalue of A on or
 * outside the unit circle. A zero-state model (n = 0) is a static gain D.
 */
class DiscreteStateSpace {
public:
    DiscreteStateSpace(Eigen::MatrixXd A, Eigen::VectorXd B, Eigen::RowVectorXd C, double D, double Ts);

    static DiscreteStateSpace static_gain(double gain, double Ts);
    static DiscreteStateSpace unit_delay(double Ts);

    const Eigen::MatrixXd& A() const { return A_; }
    const Eigen::VectorXd& B() const { return B_; }
    const Eigen::RowVectorXd& C() const { return C_; }
    double D() const { return D_; }
    double Ts() const { return Ts_; }
    int order() const { return static_cast<int>(A_.rows()); }

    /// Largest eigenvalue modulus of A (0 for a static gain).
    double pole_radius() const;
    double dc_gain() const;

private:
    Eigen::MatrixXd A_;
    Eigen::VectorXd B_;
    Eigen::RowVectorXd C_;
    double D_;
    double Ts_;
};

/// Exact zero-order-hold discretization of a stable, proper transfer function.
DiscreteStateSpace discretize_zoh(const ContinuousTransferFunction& ctf, double Ts);

/// h(0) = D, h(k) = C A^{k-1} B.
std::vector<double> impulse_response(const DiscreteStateSpace& model, int n);

/**
 * @brief Impulse response truncated once |h(k)| stays below 1e-12 max|h|.
 *
 * The returned length is never shorter than five dominant time constants.
 */
std::vector<double> truncated_impulse_response(const DiscreteStateSpace& model,
                                               double relative_tolerance = 1e-12);

/// Simulate from state x0; returns y for each input sample.
std::vector<double> simulate(const DiscreteStateSpace& model, std::span<const double> input,
                             const Eigen::VectorXd& x0);
std::vector<double> simulate(const DiscreteStateSpace& model, std::span<const double> input);

/**
 * @brief Convolve input with an impulse response, continuing a prior history.
 *
 * output(k) = sum_i h(i) x(k - i), where x is initial_tail followed by input.
 * Output has the length of input.
 */
std::vector<double> lifted_filter(std::span<const double> h, std::span<const double> input,
                                  std::span<const double> initial_tail = {});

/// Lower-triangular Toeplitz operator mapping an input block to an output block.
struct LiftedOperator {
    Eigen::MatrixXd matrix;
    int row_offset = 0;  // output sample r corresponds to input time r + row_offset

    static LiftedOperator from_impulse_response(std::span<const double> h, int rows, int cols,
                                                int row_offset = 0);
};

}  // namespace fbf
