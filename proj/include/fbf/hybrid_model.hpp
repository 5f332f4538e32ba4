#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace fbf {

/**
 * @brief Data-driven error model sizes.
 *
 * The physics-model error is regressed on
 *   phi(k) = [1, y_pb(k-q+1) ... y_pb(k), e_pb(k-p) ... e_pb(k-1)]
 * with ridge factor lambda. p <= batch_length and q - 1 <= batch_length keep
 * every lift referencing at most the batch before its first predicted batch.
 */
struct HybridConfig {
    int q = 4;
    int p = 50;
    double lambda = 0.01;
    int batch_length = 70;

    void validate() const;
    int feature_length() const { return 1 + q + p; }
};

/**
 * @brief Linear operators of the unrolled error recursion over a horizon.
 *
 * Local time 0 is the first step whose error is not measured. The prediction
 * over the output rows is
 *
 *   y_h = L_a * y_pb(out) + L_uy * y_pb(past) + L_ue * e_tail + L_u1
 *
 * batch scope: out = [0, N), past = [-N, 0).
 * window scope (one batch of measurement delay): out = [N, 3N) covering the two
 * batches being optimized, past = [-N, N), where [0, N) is the batch whose
 * error is still unmeasured and gets replaced by its own estimate.
 * e_tail is the last p measured errors before local 0; L_ue_full embeds L_ue in
 * the last p of N columns so it acts on a whole measured batch.
 */
struct DataDrivenLift {
    enum class Scope { batch, window };

    Scope scope = Scope::window;
    Eigen::MatrixXd L_a;
    Eigen::MatrixXd L_uy;
    Eigen::MatrixXd L_ue;
    Eigen::MatrixXd L_ue_full;
    Eigen::VectorXd L_u1;

    static DataDrivenLift identity(const HybridConfig& config, Scope scope);

    Eigen::VectorXd apply(const Eigen::VectorXd& ypb_out, const Eigen::VectorXd& ypb_past,
                          const Eigen::VectorXd& e_tail) const;
    bool is_identity() const;
};

/// Number of predicted steps (local [0, S)) and output rows for a scope.
int lift_span(const HybridConfig& config, DataDrivenLift::Scope scope);
int lift_rows(const HybridConfig& config, DataDrivenLift::Scope scope);

/// Lift built by propagating each error estimate as a row over the input columns.
DataDrivenLift build_lift(const HybridConfig& config, const Eigen::VectorXd& weights, DataDrivenLift::Scope scope);

/**
 * @brief Step the error recursion forward.
 *
 * ypb covers local [-N, S), e_tail the last p measured errors before local 0.
 * Returns y_h over [0, S).
 */
std::vector<double> predict_recursive(const HybridConfig& config, const Eigen::VectorXd& weights,
                                      std::span<const double> ypb, std::span<const double> e_tail);

/**
 * @brief Online hybrid model: physics-prediction and error histories plus the
 * recursive ridge estimate of the regression weights.
 *
 * The weights are kept in square-root information form: R'R = lambda I + sum phi phi',
 * R'z = sum phi e, updated with Givens rotations. This is algebraically the
 * recursive least squares recursion started from covariance I / lambda, and
 * stays equal to the batch ridge solution at every step.
 */
class HybridModel {
public:
    explicit HybridModel(HybridConfig config);

    const HybridConfig& config() const { return config_; }
    const Eigen::VectorXd& weights() const { return w_; }
    /// (R'R)^{-1}
    Eigen::MatrixXd covariance() const;
    int batches_trained() const { return batches_trained_; }

    /// Store the committed physics prediction of batch j (batches in order).
    void record_physics(int j, std::span<const double> ypb_batch);
    /// Measured errors of batch j (batches in order, physics prediction already recorded).
    /// Throws std::runtime_error, leaving the state unchanged, if the update loses
    /// positive definiteness.
    void train_update(int j, std::span<const double> e_measured);
    /// Store measured errors of batch j without training on them.
    void record_errors(int j, std::span<const double> e_measured);
    /// e = y - y_pb for batch j, then train_update (or record_errors when train is false).
    std::vector<double> ingest(int j, std::span<const double> y_measured, bool train = true);

    /// Feature vector at global step k; unmeasured errors are replaced by estimates
    /// from the current weights.
    Eigen::VectorXd feature_vector(long k) const;
    /// Estimated errors over [measured_steps(), until) from the current weights.
    std::vector<double> estimated_errors(long until) const;
    /// Ridge objective sum (e - w'phi)^2 + lambda |w|^2 over all training steps.
    double objective(const Eigen::VectorXd& w) const;

    long measured_steps() const { return static_cast<long>(e_.size()); }
    long physics_steps() const { return static_cast<long>(ypb_.size()); }
    const std::vector<double>& physics_history() const { return ypb_; }
    const std::vector<double>& error_history() const { return e_; }

    /// Last p measured errors before global step `start` (zero padded).
    Eigen::VectorXd error_tail(long start) const;
    /// Physics predictions over [start, start + len) (zero before step 0).
    Eigen::VectorXd physics_segment(long start, int len) const;

private:
    Eigen::VectorXd training_features(long k) const;

    HybridConfig config_;
    Eigen::MatrixXd R_;
    Eigen::VectorXd z_;
    Eigen::VectorXd w_;
    std::vector<double> ypb_;
    std::vector<double> e_;
    int batches_trained_ = 0;
};

}  // namespace fbf
