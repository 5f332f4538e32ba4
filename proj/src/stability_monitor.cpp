#include "fbf/stability_monitor.hpp"

#include <limits>
#include <stdexcept>

namespace fbf {

Pseudoinverse window_gain(const DataDrivenLift& lift, const BasisSet& basis, double rel_tol) {
    if (lift.L_a.cols() != basis.PsiT_C.rows())
        throw std::invalid_argument("window gain: lift and basis window lengths differ");
    return pseudo_inverse(lift.L_a * basis.PsiT_C, rel_tol);
}

ClosedLoopSystem assemble_closed_loop(const DataDrivenLift& lift, const BasisSet& basis, double rel_tol) {
    const int N = basis.config.batch_length;
    const int Nw = basis.config.window_length;
    if (lift.scope != DataDrivenLift::Scope::window || lift.L_a.rows() != Nw || lift.L_a.cols() != Nw ||
        lift.L_uy.cols() != 2 * N || lift.L_ue_full.cols() != N)
        throw std::invalid_argument("assemble_closed_loop: lift does not match the basis window");
    const int step = basis.config.committed_per_batch();
    if (basis.n_p < step) throw std::invalid_argument("assemble_closed_loop: fewer past coefficients than one batch");

    ClosedLoopSystem s;
    s.N = N;
    s.n_p = basis.n_p;
    s.n_c = basis.n_c;
    const int n = s.state_dim();
    s.A = Eigen::MatrixXd::Zero(n, n);
    s.B = Eigen::MatrixXd::Zero(n, s.n_c);

    s.A.block(s.h2(), s.h1(), N, N).setIdentity();
    // new [h1; h0] is the window prediction
    auto win = s.A.middleRows(s.h1(), Nw);
    win.middleCols(s.h2(), N) = lift.L_ue_full;
    win.middleCols(s.p2(), N) = lift.L_uy.leftCols(N) - lift.L_ue_full;
    win.middleCols(s.p1(), N) = lift.L_uy.rightCols(N);
    win.middleCols(s.g(), s.n_p) = lift.L_a * basis.PsiT_PC;
    win.col(s.bias()) = lift.L_u1;
    s.B.middleRows(s.h1(), Nw) = lift.L_a * basis.PsiT_C;

    s.A.block(s.p2(), s.p1(), N, N).setIdentity();
    s.A.block(s.p1(), s.g(), Nw, s.n_p) = basis.PsiT_PC;
    s.B.middleRows(s.p1(), Nw) = basis.PsiT_C;

    // coefficient shift register: drop the oldest `step`, append the committed ones
    s.A.block(s.g(), s.g() + step, s.n_p - step, s.n_p - step).setIdentity();
    s.B.block(s.g() + s.n_p - step, 0, step, step).setIdentity();

    const Pseudoinverse M = window_gain(lift, basis, rel_tol);
    s.M = M.matrix;
    s.rank_deficient = M.rank_deficient;
    s.K = -s.M * s.A.middleRows(s.h1(), Nw);
    return s;
}

Eigen::VectorXd ClosedLoopSystem::step(const Eigen::VectorXd& x, const Eigen::VectorXd& y_d) const {
    const Eigen::VectorXd gamma_C = K * x + M * y_d;
    Eigen::VectorXd next = A * x + B * gamma_C;
    next(bias()) = 1.0;
    return next;
}

Eigen::MatrixXd ClosedLoopSystem::reduced_closed_loop() const {
    // kept blocks: h2, h1, p2, p1, past coefficients
    const std::vector<std::pair<int, int>> keep = {{h2(), N}, {h1(), N}, {p2(), N}, {p1(), N}, {g(), n_p}};
    int m = 0;
    for (auto [o, len] : keep) m += len;
    Eigen::MatrixXd Ar(m, m), Br(m, n_c), Kr(n_c, m);
    int ro = 0;
    for (auto [r, rl] : keep) {
        int co = 0;
        for (auto [c, cl] : keep) {
            Ar.block(ro, co, rl, cl) = A.block(r, c, rl, cl);
            co += cl;
        }
        Br.middleRows(ro, rl) = B.middleRows(r, rl);
        Kr.middleCols(ro, rl) = K.middleCols(r, rl);
        ro += rl;
    }
    return Ar + Br * Kr;
}

RadiusEstimate spectral_radius(const Eigen::MatrixXd& closed_loop) {
    if (auto r = spectral_radius_power(closed_loop)) return {*r, RadiusEstimate::Method::power};
    if (auto r = spectral_radius_dense(closed_loop)) return {*r, RadiusEstimate::Method::dense};
    return {std::numeric_limits<double>::infinity(), RadiusEstimate::Method::failed};
}

RadiusEstimate spectral_radius(const ClosedLoopSystem& system) { return spectral_radius(system.reduced_closed_loop()); }

Verdict check_stability(double radius, double threshold) {
    if (!(threshold > 0.0 && threshold <= 1.0)) throw std::invalid_argument("check_stability: threshold must be in (0, 1]");
    if (!(radius < 1.0)) return Verdict::alarm;  // NaN also alarms
    if (radius >= threshold) return Verdict::warning;
    return Verdict::stable;
}

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::stable: return "stable";
        case Verdict::warning: return "warning";
        case Verdict::alarm: return "alarm";
    }
    return "unknown";
}

StabilityMonitor::StabilityMonitor(const BasisSet& basis, const HybridConfig& hybrid, double threshold,
                                   double rel_tol)
    : basis_(basis), hybrid_(hybrid), threshold_(threshold), rel_tol_(rel_tol) {
    check_stability(0.0, threshold);
}

StabilityMonitor::Result StabilityMonitor::evaluate(const Eigen::VectorXd& weights, const DataDrivenLift* lift) {
    if (last_weights_ && last_weights_->size() == weights.size() && *last_weights_ == weights) {
        Result r = last_;
        r.cached = true;
        return r;
    }
    const RadiusEstimate est =
        lift ? spectral_radius(assemble_closed_loop(*lift, basis_, rel_tol_))
             : spectral_radius(assemble_closed_loop(build_lift(hybrid_, weights, DataDrivenLift::Scope::window),
                                                    basis_, rel_tol_));
    last_ = {est.value, check_stability(est.value, threshold_), false};
    last_weights_ = weights;
    return last_;
}

}  // namespace fbf
