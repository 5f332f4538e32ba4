#pragma once

#include "fbf/lifted_systems.hpp"

#include <Eigen/Dense>

namespace fbf {

/**
 * @brief Uniform B-spline parameterization of the control input.
 *
 * Knots sit on multiples of knot_spacing time steps. batch_length must be a
 * multiple of knot_spacing so that every window sees the same filtered
 * blocks, and window_length is twice the batch length.
 */
struct BasisConfig {
    int degree = 5;
    int knot_spacing = 10;
    int batch_length = 70;
    int window_length = 140;

    void validate() const;
    int support_steps() const { return (degree + 1) * knot_spacing; }
    int current_count() const { return window_length / knot_spacing; }
    int committed_per_batch() const { return batch_length / knot_spacing; }
};

/// Cardinal B-spline of the given degree on knots 0, 1, ..., degree + 1 (Cox-de Boor).
double cardinal_bspline(int degree, double x);

/**
 * @brief Sampled basis over time steps [0, horizon).
 *
 * Column c is the spline whose support starts at (c - degree) * knot_spacing,
 * so the first `degree` columns are functions already active at step 0. Their
 * coefficients are zero for a trajectory that starts at rest.
 */
Eigen::MatrixXd build_bspline_basis(const BasisConfig& config, int horizon);

/// Support start (time step) of column c of build_bspline_basis.
inline int basis_column_start(const BasisConfig& config, int column) {
    return (column - config.degree) * config.knot_spacing;
}

/**
 * @brief Unfiltered and filtered basis blocks for one receding-horizon window.
 *
 * Current coefficients belong to splines starting inside the window
 * (n_c = window_length / knot_spacing). Past coefficients are ordered oldest
 * first and cover every earlier spline whose filtered response still reaches
 * the window through the truncated impulse response, so
 *
 *   y_pb(window) = PsiT_C * gamma_C + PsiT_PC * gamma_P
 *
 * holds to the truncation tolerance. The future blocks of the full lifted
 * structure are never needed by the optimizer and are not formed.
 */
struct BasisSet {
    BasisConfig config;
    Eigen::MatrixXd Psi_C;    // window_length x n_c
    Eigen::MatrixXd Psi_PC;   // window_length x n_p
    Eigen::MatrixXd PsiT_C;   // filtered Psi_C
    Eigen::MatrixXd PsiT_PC;  // filtered Psi_PC
    int n_c = 0;
    int n_p = 0;
    int impulse_length = 0;
    double condition_number = 0.0;
};

/**
 * @brief Filter the basis through the model and partition it around window `window_index`.
 *
 * The window index only shifts the time origin, so the result is identical for
 * every index. Throws std::invalid_argument when PsiT_C is rank deficient or its
 * condition number exceeds max_condition; the message lists the singular values.
 */
BasisSet filter_and_partition(const BasisConfig& config, const DiscreteStateSpace& model, int window_index = 0,
                              double max_condition = 1e8);

}  // namespace fbf
