#pragma once

#include <Eigen/Dense>

#include <complex>
#include <optional>

namespace fbf {

/// Truncated SVD pseudoinverse; singular values below rel_tol * s_max are dropped.
struct Pseudoinverse {
    Eigen::MatrixXd matrix;
    Eigen::VectorXd singular_values;
    int rank = 0;
    bool rank_deficient = false;  // rank < number of columns of the source
};

Pseudoinverse pseudo_inverse(const Eigen::MatrixXd& a, double rel_tol = 1e-10);

/// Largest eigenvalue modulus by a dense nonsymmetric eigensolver (values only).
/// Returns nullopt if the solver does not converge or yields non-finite values.
std::optional<double> spectral_radius_dense(const Eigen::MatrixXd& a);

/**
 * @brief Largest eigenvalue modulus by power iteration.
 *
 * Handles a dominant complex-conjugate pair by fitting the two-term recurrence
 * x_{k+2} = c1 x_{k+1} + c0 x_k over successive iterates. Returns nullopt when
 * the estimate has not settled to rel_tol within max_iter iterations, e.g. when
 * several eigenvalues share the largest modulus.
 */
std::optional<double> spectral_radius_power(const Eigen::MatrixXd& a, int max_iter = 400, double rel_tol = 1e-9);

}  // namespace fbf
