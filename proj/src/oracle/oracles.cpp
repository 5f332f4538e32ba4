#include "fbf/oracles.hpp"

#include <cmath>
#include <stdexcept>

namespace fbf::oracle {

FirstOrderZoh first_order_zoh(double a, double Ts) {
    const double pole = std::exp(-a * Ts);
    return {pole, (1.0 - pole) / a};
}

std::vector<double> continuous_step_response(const ContinuousTransferFunction& tf, double Ts, int n, int substeps) {
    using ld = long double;
    const int order = tf.order();
    const ld lead = tf.denominator.front();
    std::vector<ld> a(order + 1), b(order + 1, 0.0L);
    for (int i = 0; i <= order; ++i) a[i] = tf.denominator[order - i] / lead;
    const int m = static_cast<int>(tf.numerator.size()) - 1;
    for (int i = 0; i <= m; ++i) b[i] = tf.numerator[m - i] / lead;
    const ld D = b[order];
    // x' = A x + e_n u, y = sum (b_i - D a_i) x_i + D u, u = 1
    auto deriv = [&](const std::vector<ld>& x) {
        std::vector<ld> dx(order);
        for (int i = 0; i + 1 < order; ++i) dx[i] = x[i + 1];
        ld acc = 1.0L;
        for (int i = 0; i < order; ++i) acc -= a[i] * x[i];
        dx[order - 1] = acc;
        return dx;
    };
    auto output = [&](const std::vector<ld>& x) {
        ld y = D;
        for (int i = 0; i < order; ++i) y += (b[i] - D * a[i]) * x[i];
        return static_cast<double>(y);
    };
    std::vector<ld> x(order, 0.0L);
    std::vector<double> y(n);
    const ld h = static_cast<ld>(Ts) / substeps;
    for (int k = 0; k < n; ++k) {
        y[k] = output(x);
        for (int s = 0; s < substeps; ++s) {
            auto k1 = deriv(x);
            std::vector<ld> t(order);
            for (int i = 0; i < order; ++i) t[i] = x[i] + h / 2 * k1[i];
            auto k2 = deriv(t);
            for (int i = 0; i < order; ++i) t[i] = x[i] + h / 2 * k2[i];
            auto k3 = deriv(t);
            for (int i = 0; i < order; ++i) t[i] = x[i] + h * k3[i];
            auto k4 = deriv(t);
            for (int i = 0; i < order; ++i) x[i] += h / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
        }
    }
    return y;
}

DiscreteStateSpace fir_state_space(const std::vector<double>& h, double Ts) {
    const int n = static_cast<int>(h.size()) - 1;  // x_i = u(k - 1 - i)
    if (n < 0) throw std::invalid_argument("fir_state_space: empty h");
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    for (int i = 1; i < n; ++i) A(i, i - 1) = 1.0;
    Eigen::VectorXd B = Eigen::VectorXd::Zero(n);
    if (n > 0) B(0) = 1.0;
    Eigen::RowVectorXd C(n);
    for (int i = 0; i < n; ++i) C(i) = h[i + 1];
    return {A, B, C, h[0], Ts};
}

Eigen::VectorXd ridge_normal_equations(const Eigen::MatrixXd& Phi, const Eigen::VectorXd& e, double lambda) {
    using ld = long double;
    const int n = static_cast<int>(Phi.cols());
    std::vector<std::vector<ld>> G(n, std::vector<ld>(n + 1, 0.0L));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            ld acc = 0.0L;
            for (Eigen::Index r = 0; r < Phi.rows(); ++r) acc += static_cast<ld>(Phi(r, i)) * Phi(r, j);
            G[i][j] = acc + (i == j ? static_cast<ld>(lambda) : 0.0L);
        }
        ld rhs = 0.0L;
        for (Eigen::Index r = 0; r < Phi.rows(); ++r) rhs += static_cast<ld>(Phi(r, i)) * e(r);
        G[i][n] = rhs;
    }
    for (int c = 0; c < n; ++c) {
        int piv = c;
        for (int r = c + 1; r < n; ++r)
            if (std::fabs(G[r][c]) > std::fabs(G[piv][c])) piv = r;
        std::swap(G[c], G[piv]);
        for (int r = c + 1; r < n; ++r) {
            const ld f = G[r][c] / G[c][c];
            for (int k = c; k <= n; ++k) G[r][k] -= f * G[c][k];
        }
    }
    Eigen::VectorXd w(n);
    for (int i = n - 1; i >= 0; --i) {
        ld acc = G[i][n];
        for (int k = i + 1; k < n; ++k) acc -= G[i][k] * static_cast<ld>(w(k));
        w(i) = static_cast<double>(acc / G[i][i]);
    }
    return w;
}

Eigen::MatrixXd training_design(const HybridConfig& c, const std::vector<double>& ypb, const std::vector<double>& e) {
    const long n = static_cast<long>(e.size());
    Eigen::MatrixXd Phi = Eigen::MatrixXd::Zero(n, c.feature_length());
    for (long k = 0; k < n; ++k) {
        Phi(k, 0) = 1.0;
        for (int i = 0; i < c.q; ++i) {
            const long t = k - c.q + 1 + i;
            if (t >= 0) Phi(k, 1 + i) = ypb[t];
        }
        for (int i = 0; i < c.p; ++i) {
            const long t = k - c.p + i;
            if (t >= 0) Phi(k, 1 + c.q + i) = e[t];
        }
    }
    return Phi;
}

Eigen::VectorXd replay_feature_vector(const HybridConfig& c, const Eigen::VectorXd& w, const std::vector<double>& ypb,
                                      const std::vector<double>& e_measured, long k) {
    // Extend the error sequence one step at a time until k - 1.
    std::vector<double> e = e_measured;
    while (static_cast<long>(e.size()) < k) {
        const long t = static_cast<long>(e.size());
        double acc = w(0);
        for (int i = 0; i < c.q; ++i) {
            const long s = t - c.q + 1 + i;
            if (s >= 0) acc += w(1 + i) * ypb[s];
        }
        for (int i = 0; i < c.p; ++i) {
            const long s = t - c.p + i;
            if (s >= 0) acc += w(1 + c.q + i) * e[s];
        }
        e.push_back(acc);
    }
    Eigen::VectorXd phi = Eigen::VectorXd::Zero(c.feature_length());
    phi(0) = 1.0;
    for (int i = 0; i < c.q; ++i) {
        const long s = k - c.q + 1 + i;
        if (s >= 0 && s < static_cast<long>(ypb.size())) phi(1 + i) = ypb[s];
    }
    for (int i = 0; i < c.p; ++i) {
        const long s = k - c.p + i;
        if (s >= 0) phi(1 + c.q + i) = e[s];
    }
    return phi;
}

namespace {

// One batch of the recursion: ypb over [-N, N) relative to the batch, tail of p errors.
Eigen::VectorXd one_batch(const HybridConfig& c, const Eigen::VectorXd& w, const Eigen::VectorXd& ypb,
                          const Eigen::VectorXd& tail, Eigen::VectorXd& e_out) {
    const int N = c.batch_length;
    Eigen::VectorXd yh(N);
    std::vector<double> e(tail.data(), tail.data() + tail.size());
    for (int k = 0; k < N; ++k) {
        double acc = w(0);
        for (int i = 0; i < c.q; ++i) acc += w(1 + i) * ypb(N + k - c.q + 1 + i);
        for (int i = 0; i < c.p; ++i) acc += w(1 + c.q + i) * e[e.size() - c.p + i];
        e.push_back(acc);
        yh(k) = ypb(N + k) + acc;
    }
    e_out = Eigen::Map<Eigen::VectorXd>(e.data() + e.size() - c.p, c.p);
    return yh;
}

}  // namespace

Eigen::VectorXd chained_window_prediction(const HybridConfig& c, const Eigen::VectorXd& w, const Eigen::VectorXd& ypb,
                                          const Eigen::VectorXd& e_tail) {
    const int N = c.batch_length;
    Eigen::VectorXd tail1, tail2, tail3;
    // batch j-1: only an estimate exists; its error e = y_h - y_pb becomes the tail for batch j
    const Eigen::VectorXd yh1 = one_batch(c, w, ypb.segment(0, 2 * N), e_tail, tail1);
    Eigen::VectorXd sub = yh1.tail(c.p) - ypb.segment(2 * N - c.p, c.p);
    const Eigen::VectorXd yh2 = one_batch(c, w, ypb.segment(N, 2 * N), sub, tail2);
    sub = yh2.tail(c.p) - ypb.segment(3 * N - c.p, c.p);
    const Eigen::VectorXd yh3 = one_batch(c, w, ypb.segment(2 * N, 2 * N), sub, tail3);
    Eigen::VectorXd out(2 * N);
    out << yh2, yh3;
    return out;
}

DataDrivenLift unit_vector_lift(const HybridConfig& c, const Eigen::VectorXd& w, DataDrivenLift::Scope scope) {
    const int N = c.batch_length;
    const int S = lift_span(c, scope), rows = lift_rows(c, scope), out0 = S - rows;
    auto run = [&](const std::vector<double>& ypb, const std::vector<double>& tail) {
        const auto yh = predict_recursive(c, w, ypb, tail);
        return Eigen::Map<const Eigen::VectorXd>(yh.data() + out0, rows).eval();
    };
    const std::vector<double> zy(N + S, 0.0), ze(c.p, 0.0);
    const Eigen::VectorXd base = run(zy, ze);
    DataDrivenLift L;
    L.scope = scope;
    L.L_u1 = base;
    L.L_a.resize(rows, rows);
    L.L_uy.resize(rows, N + out0);
    L.L_ue.resize(rows, c.p);
    for (int t = -N; t < S; ++t) {
        std::vector<double> y = zy;
        y[N + t] = 1.0;
        const Eigen::VectorXd col = run(y, ze) - base;
        if (t >= out0)
            L.L_a.col(t - out0) = col;
        else
            L.L_uy.col(t + N) = col;
    }
    for (int i = 0; i < c.p; ++i) {
        std::vector<double> e = ze;
        e[i] = 1.0;
        L.L_ue.col(i) = run(zy, e) - base;
    }
    L.L_ue_full = Eigen::MatrixXd::Zero(rows, N);
    L.L_ue_full.rightCols(c.p) = L.L_ue;
    return L;
}

double full_closed_loop_radius(const ClosedLoopSystem& s) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(s.closed_loop(), false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

double bisect_unit_radius(const HybridConfig& c, const BasisSet& basis, const Eigen::VectorXd& base, double lo,
                          double hi, double tol) {
    auto radius = [&](double s) {
        Eigen::VectorXd w = base;
        w.tail(c.p) *= s;
        const auto sys = assemble_closed_loop(build_lift(c, w, DataDrivenLift::Scope::window), basis);
        Eigen::EigenSolver<Eigen::MatrixXd> es(sys.reduced_closed_loop(), false);
        return es.eigenvalues().cwiseAbs().maxCoeff();
    };
    if (radius(lo) >= 1.0 || radius(hi) < 1.0) throw std::invalid_argument("bisect: radius does not cross 1 in range");
    while (hi - lo > tol * std::max(1.0, std::abs(hi))) {
        const double mid = 0.5 * (lo + hi);
        (radius(mid) >= 1.0 ? hi : lo) = mid;
    }
    return hi;
}

int splines_crossing_boundary(const BasisConfig& c) {
    // Evaluate a long sampled basis and count columns with nonzero samples both
    // before and at/after the boundary between batches 1 and 2.
    const int horizon = 4 * c.batch_length;
    const Eigen::MatrixXd B = build_bspline_basis(c, horizon);
    const int boundary = 2 * c.batch_length;
    int count = 0;
    for (Eigen::Index col = 0; col < B.cols(); ++col) {
        bool before = false, after = false;
        for (int k = 0; k < horizon; ++k) {
            if (B(k, col) == 0.0) continue;
            (k < boundary ? before : after) = true;
        }
        count += before && after;
    }
    return count;
}

std::vector<bool> measurement_availability(int delay, int commanded) {
    // FIFO of produced batches; each command releases the batch produced `delay` commands earlier.
    std::vector<bool> available(commanded + 1, false);
    std::vector<int> queue;
    int released = -1;
    for (int cmd = 0; cmd <= commanded; ++cmd) {
        queue.push_back(cmd);
        while (!queue.empty() && queue.front() + delay <= cmd) {
            released = queue.front();
            queue.erase(queue.begin());
        }
    }
    for (int j = 0; j <= released; ++j) available[j] = true;
    return available;
}

double full_horizon_lsq_residual(const BasisConfig& c, const DiscreteStateSpace& model, const std::vector<double>& y_d) {
    const int n = static_cast<int>(y_d.size());
    const Eigen::MatrixXd Psi = build_bspline_basis(c, n);
    const auto h = impulse_response(model, n);
    const LiftedOperator G = LiftedOperator::from_impulse_response(h, n, n);
    const Eigen::MatrixXd F = G.matrix * Psi;
    const Eigen::VectorXd yd = Eigen::Map<const Eigen::VectorXd>(y_d.data(), n);
    const Eigen::VectorXd gamma = F.colPivHouseholderQr().solve(yd);
    return std::sqrt((yd - F * gamma).squaredNorm() / n);
}

}  // namespace fbf::oracle
