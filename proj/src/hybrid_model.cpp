#include "fbf/hybrid_model.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace fbf {

void HybridConfig::validate() const {
    if (q < 1) throw std::invalid_argument("hybrid: q must be >= 1");
    if (p < 1) throw std::invalid_argument("hybrid: p must be >= 1");
    if (!(lambda > 0.0)) throw std::invalid_argument("hybrid: lambda must be > 0");
    if (batch_length < 1) throw std::invalid_argument("hybrid: batch_length must be >= 1");
    if (p > batch_length) throw std::invalid_argument("hybrid: p must not exceed the batch length");
    if (q - 1 > batch_length) throw std::invalid_argument("hybrid: q - 1 must not exceed the batch length");
}

int lift_span(const HybridConfig& config, DataDrivenLift::Scope scope) {
    return scope == DataDrivenLift::Scope::batch ? config.batch_length : 3 * config.batch_length;
}

int lift_rows(const HybridConfig& config, DataDrivenLift::Scope scope) {
    return scope == DataDrivenLift::Scope::batch ? config.batch_length : 2 * config.batch_length;
}

namespace {

void finish_full(DataDrivenLift& lift, int N) {
    lift.L_ue_full = Eigen::MatrixXd::Zero(lift.L_ue.rows(), N);
    lift.L_ue_full.rightCols(lift.L_ue.cols()) = lift.L_ue;
}

}  // namespace

DataDrivenLift DataDrivenLift::identity(const HybridConfig& config, Scope scope) {
    const int N = config.batch_length;
    const int rows = lift_rows(config, scope);
    const int past = lift_span(config, scope) - rows + N;
    DataDrivenLift lift;
    lift.scope = scope;
    lift.L_a = Eigen::MatrixXd::Identity(rows, rows);
    lift.L_uy = Eigen::MatrixXd::Zero(rows, past);
    lift.L_ue = Eigen::MatrixXd::Zero(rows, config.p);
    lift.L_u1 = Eigen::VectorXd::Zero(rows);
    finish_full(lift, N);
    return lift;
}

Eigen::VectorXd DataDrivenLift::apply(const Eigen::VectorXd& ypb_out, const Eigen::VectorXd& ypb_past,
                                      const Eigen::VectorXd& e_tail) const {
    if (ypb_out.size() != L_a.cols() || ypb_past.size() != L_uy.cols() || e_tail.size() != L_ue.cols())
        throw std::invalid_argument("lift: operand sizes do not match");
    return L_a * ypb_out + L_uy * ypb_past + L_ue * e_tail + L_u1;
}

bool DataDrivenLift::is_identity() const {
    return L_a.isIdentity(0.0) && L_uy.isZero(0.0) && L_ue.isZero(0.0) && L_u1.isZero(0.0);
}

DataDrivenLift build_lift(const HybridConfig& config, const Eigen::VectorXd& weights, DataDrivenLift::Scope scope) {
    config.validate();
    const int q = config.q, p = config.p, N = config.batch_length;
    if (weights.size() != config.feature_length()) throw std::invalid_argument("build_lift: weight length mismatch");
    if (weights.isZero(0.0)) return DataDrivenLift::identity(config, scope);

    const int S = lift_span(config, scope);
    const int rows = lift_rows(config, scope);
    // Columns: bias | y_pb over [-N, S) | e_tail over [-p, 0)
    const int col_y = 1, col_e = 1 + N + S, ncols = 1 + N + S + p;
    auto ycol = [&](int t) { return col_y + N + t; };

    Eigen::MatrixXd E = Eigen::MatrixXd::Zero(S, ncols);
    const double* w = weights.data();
    for (int k = 0; k < S; ++k) {
        auto row = E.row(k);
        row(0) = w[0];
        for (int i = 0; i < q; ++i) row(ycol(k - q + 1 + i)) += w[1 + i];
        for (int i = 0; i < p; ++i) {
            const double wi = w[1 + q + i];
            if (wi == 0.0) continue;
            const int t = k - p + i;
            if (t < 0)
                row(col_e + p + t) += wi;
            else
                row += wi * E.row(t);
        }
    }

    const int out0 = S - rows;
    DataDrivenLift lift;
    lift.scope = scope;
    lift.L_a = E.block(out0, ycol(out0), rows, rows);
    lift.L_a.diagonal().array() += 1.0;
    lift.L_uy = E.block(out0, ycol(-N), rows, N + out0);
    lift.L_ue = E.block(out0, col_e, rows, p);
    lift.L_u1 = E.block(out0, 0, rows, 1);
    finish_full(lift, N);
    return lift;
}

std::vector<double> predict_recursive(const HybridConfig& config, const Eigen::VectorXd& weights,
                                      std::span<const double> ypb, std::span<const double> e_tail) {
    const int q = config.q, p = config.p, N = config.batch_length;
    if (weights.size() != config.feature_length()) throw std::invalid_argument("predict: weight length mismatch");
    if (static_cast<int>(e_tail.size()) != p) throw std::invalid_argument("predict: error tail must have p samples");
    const int S = static_cast<int>(ypb.size()) - N;
    if (S < 1) throw std::invalid_argument("predict: physics prediction must cover [-N, S) with S >= 1");
    std::vector<double> e(p + S, 0.0);  // e[p + t] is the error at local t
    std::copy(e_tail.begin(), e_tail.end(), e.begin());
    std::vector<double> yh(S);
    for (int k = 0; k < S; ++k) {
        double acc = weights(0);
        for (int i = 0; i < q; ++i) acc += weights(1 + i) * ypb[N + k - q + 1 + i];
        for (int i = 0; i < p; ++i) acc += weights(1 + q + i) * e[k + i];
        e[p + k] = acc;
        yh[k] = ypb[N + k] + acc;
    }
    return yh;
}

HybridModel::HybridModel(HybridConfig config) : config_(config) {
    config_.validate();
    const int n = config_.feature_length();
    R_ = std::sqrt(config_.lambda) * Eigen::MatrixXd::Identity(n, n);
    z_ = Eigen::VectorXd::Zero(n);
    w_ = Eigen::VectorXd::Zero(n);
}

Eigen::MatrixXd HybridModel::covariance() const {
    const int n = config_.feature_length();
    const Eigen::MatrixXd Rinv =
        R_.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(n, n));
    return Rinv * Rinv.transpose();
}

void HybridModel::record_physics(int j, std::span<const double> ypb_batch) {
    const int N = config_.batch_length;
    if (static_cast<long>(j) * N != physics_steps()) {
        std::ostringstream os;
        os << "hybrid model: physics prediction for batch " << j << " recorded out of order";
        throw std::invalid_argument(os.str());
    }
    if (static_cast<int>(ypb_batch.size()) != N) throw std::invalid_argument("hybrid model: wrong batch length");
    ypb_.insert(ypb_.end(), ypb_batch.begin(), ypb_batch.end());
}

Eigen::VectorXd HybridModel::training_features(long k) const {
    const int q = config_.q, p = config_.p;
    Eigen::VectorXd phi = Eigen::VectorXd::Zero(config_.feature_length());
    phi(0) = 1.0;
    for (int i = 0; i < q; ++i) {
        const long t = k - q + 1 + i;
        if (t >= 0) phi(1 + i) = ypb_[t];
    }
    for (int i = 0; i < p; ++i) {
        const long t = k - p + i;
        if (t >= 0) phi(1 + q + i) = e_[t];
    }
    return phi;
}

void HybridModel::train_update(int j, std::span<const double> e_measured) {
    const int N = config_.batch_length;
    const long start = static_cast<long>(j) * N;
    if (start != measured_steps()) {
        std::ostringstream os;
        os << "hybrid model: measurement for batch " << j << " ingested out of order";
        throw std::invalid_argument(os.str());
    }
    if (static_cast<int>(e_measured.size()) != N) throw std::invalid_argument("hybrid model: wrong batch length");
    if (start + N > physics_steps()) {
        std::ostringstream os;
        os << "hybrid model: no stored physics prediction for batch " << j;
        throw std::invalid_argument(os.str());
    }

    const int n = config_.feature_length();
    Eigen::MatrixXd R = R_;
    Eigen::VectorXd z = z_;
    const std::size_t old_size = e_.size();
    e_.insert(e_.end(), e_measured.begin(), e_measured.end());
    for (int i = 0; i < N; ++i) {
        Eigen::VectorXd row = training_features(start + i);
        double target = e_measured[i];
        for (int c = 0; c < n; ++c) {
            if (row(c) == 0.0) continue;
            Eigen::JacobiRotation<double> g;
            g.makeGivens(R(c, c), row(c));
            // Rotate [R(c, c:) ; row(c:)] and [z(c) ; target] together.
            for (int cc = c; cc < n; ++cc) {
                const double a = R(c, cc), b = row(cc);
                R(c, cc) = g.c() * a - g.s() * b;
                row(cc) = g.s() * a + g.c() * b;
            }
            const double a = z(c), b = target;
            z(c) = g.c() * a - g.s() * b;
            target = g.s() * a + g.c() * b;
        }
    }
    // Keep a positive diagonal; flip whole rows where the rotation made it negative.
    for (int c = 0; c < n; ++c)
        if (R(c, c) < 0.0) {
            R.row(c) *= -1.0;
            z(c) *= -1.0;
        }
    const double dmin = R.diagonal().minCoeff();
    if (!(dmin > 0.0) || !R.allFinite() || !z.allFinite()) {
        e_.resize(old_size);
        throw std::runtime_error("hybrid model: information factor lost positive definiteness; update rejected");
    }
    R_ = std::move(R);
    z_ = std::move(z);
    w_ = R_.triangularView<Eigen::Upper>().solve(z_);
    ++batches_trained_;
}

void HybridModel::record_errors(int j, std::span<const double> e_measured) {
    const int N = config_.batch_length;
    const long start = static_cast<long>(j) * N;
    if (start != measured_steps()) {
        std::ostringstream os;
        os << "hybrid model: measurement for batch " << j << " ingested out of order";
        throw std::invalid_argument(os.str());
    }
    if (static_cast<int>(e_measured.size()) != N) throw std::invalid_argument("hybrid model: wrong batch length");
    e_.insert(e_.end(), e_measured.begin(), e_measured.end());
}

std::vector<double> HybridModel::ingest(int j, std::span<const double> y_measured, bool train) {
    const int N = config_.batch_length;
    const long start = static_cast<long>(j) * N;
    if (start + N > physics_steps()) {
        std::ostringstream os;
        os << "hybrid model: no stored physics prediction for batch " << j;
        throw std::invalid_argument(os.str());
    }
    if (static_cast<int>(y_measured.size()) != N) throw std::invalid_argument("hybrid model: wrong batch length");
    std::vector<double> e(N);
    for (int i = 0; i < N; ++i) e[i] = y_measured[i] - ypb_[start + i];
    if (train)
        train_update(j, e);
    else
        record_errors(j, e);
    return e;
}

std::vector<double> HybridModel::estimated_errors(long until) const {
    const int q = config_.q, p = config_.p;
    const long m = measured_steps();
    if (until > physics_steps()) throw std::invalid_argument("hybrid model: estimates need physics predictions");
    std::vector<double> est(std::max(0L, until - m));
    auto err = [&](long t) { return t < 0 ? 0.0 : (t < m ? e_[t] : est[t - m]); };
    for (long k = m; k < until; ++k) {
        double acc = w_(0);
        for (int i = 0; i < q; ++i) {
            const long t = k - q + 1 + i;
            if (t >= 0) acc += w_(1 + i) * ypb_[t];
        }
        for (int i = 0; i < p; ++i) acc += w_(1 + q + i) * err(k - p + i);
        est[k - m] = acc;
    }
    return est;
}

Eigen::VectorXd HybridModel::feature_vector(long k) const {
    const int q = config_.q, p = config_.p;
    const long m = measured_steps();
    Eigen::VectorXd phi = Eigen::VectorXd::Zero(config_.feature_length());
    phi(0) = 1.0;
    for (int i = 0; i < q; ++i) {
        const long t = k - q + 1 + i;
        if (t >= 0 && t < physics_steps()) phi(1 + i) = ypb_[t];
    }
    const std::vector<double> est = k > m ? estimated_errors(std::min(k, physics_steps())) : std::vector<double>{};
    for (int i = 0; i < p; ++i) {
        const long t = k - p + i;
        if (t < 0) continue;
        if (t < m)
            phi(1 + q + i) = e_[t];
        else if (t - m < static_cast<long>(est.size()))
            phi(1 + q + i) = est[t - m];
    }
    return phi;
}

double HybridModel::objective(const Eigen::VectorXd& w) const {
    double acc = config_.lambda * w.squaredNorm();
    for (long k = 0; k < measured_steps(); ++k) {
        const double r = e_[k] - training_features(k).dot(w);
        acc += r * r;
    }
    return acc;
}

Eigen::VectorXd HybridModel::error_tail(long start) const {
    const int p = config_.p;
    if (start > measured_steps()) throw std::invalid_argument("hybrid model: error tail reaches unmeasured steps");
    Eigen::VectorXd tail = Eigen::VectorXd::Zero(p);
    for (int i = 0; i < p; ++i) {
        const long t = start - p + i;
        if (t >= 0) tail(i) = e_[t];
    }
    return tail;
}

Eigen::VectorXd HybridModel::physics_segment(long start, int len) const {
    Eigen::VectorXd seg = Eigen::VectorXd::Zero(len);
    for (int i = 0; i < len; ++i) {
        const long t = start + i;
        if (t >= physics_steps()) throw std::invalid_argument("hybrid model: physics segment not recorded yet");
        if (t >= 0) seg(i) = ypb_[t];
    }
    return seg;
}

}  // namespace fbf
