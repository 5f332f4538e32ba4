#include "fbf/controller.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace fbf {

ControlMode parse_control_mode(const std::string& s) {
    if (s == "none") return ControlMode::none;
    if (s == "standard") return ControlMode::standard;
    if (s == "hybrid") return ControlMode::hybrid;
    throw std::invalid_argument("unknown controller mode '" + s + "' (none, standard, hybrid)");
}

Mitigation parse_mitigation(const std::string& s) {
    if (s == "freeze-learning") return Mitigation::freeze_learning;
    if (s == "revert-standard") return Mitigation::revert_standard;
    if (s == "halt") return Mitigation::halt;
    if (s == "monitor-only") return Mitigation::monitor_only;
    throw std::invalid_argument("unknown mitigation '" + s +
                                "' (freeze-learning, revert-standard, halt, monitor-only)");
}

std::string to_string(ControlMode m) {
    switch (m) {
        case ControlMode::none: return "none";
        case ControlMode::standard: return "standard";
        case ControlMode::hybrid: return "hybrid";
    }
    return "?";
}

std::string to_string(Mitigation m) {
    switch (m) {
        case Mitigation::freeze_learning: return "freeze-learning";
        case Mitigation::revert_standard: return "revert-standard";
        case Mitigation::halt: return "halt";
        case Mitigation::monitor_only: return "monitor-only";
    }
    return "?";
}

double InstabilityInjection::scale(int j) const {
    if (!enabled) return 1.0;
    if (j <= start_batch) return scale_start;
    const double f = std::min(1.0, static_cast<double>(j - start_batch) / std::max(ramp_batches, 1));
    return scale_start + f * (scale_end - scale_start);
}

StabilityHalt::StabilityHalt(int w, double r)
    : std::runtime_error([&] {
          std::ostringstream os;
          os << "stability alarm at window " << w << " (spectral radius " << r << "); halting";
          return os.str();
      }()),
      window(w),
      radius(r) {}

WindowSolution optimize_window(const Eigen::VectorXd& y_d, const BasisSet& basis, const DataDrivenLift& lift,
                               const Pseudoinverse& gain, const Eigen::VectorXd& gamma_P,
                               const Eigen::VectorXd& ypb_past, const Eigen::VectorXd& e_tail) {
    if (y_d.size() != basis.config.window_length || gamma_P.size() != basis.n_p)
        throw std::invalid_argument("optimize_window: operand sizes do not match the basis");
    if (gain.matrix.rows() != basis.n_c || gain.matrix.cols() != y_d.size())
        throw std::invalid_argument("optimize_window: gain does not match the basis");
    const Eigen::VectorXd free_response = basis.PsiT_PC * gamma_P;
    const Eigen::VectorXd rhs =
        y_d - lift.L_a * free_response - lift.L_uy * ypb_past - lift.L_ue * e_tail - lift.L_u1;
    return {gain.matrix * rhs, gain.rank_deficient};
}

WindowSolution optimize_window(const Eigen::VectorXd& y_d, const BasisSet& basis, const DataDrivenLift& lift,
                               const Eigen::VectorXd& gamma_P, const Eigen::VectorXd& ypb_past,
                               const Eigen::VectorXd& e_tail, double rel_tol) {
    return optimize_window(y_d, basis, lift, window_gain(lift, basis, rel_tol), gamma_P, ypb_past, e_tail);
}

Eigen::VectorXd reconstruct_input(const Eigen::VectorXd& gamma_C, const Eigen::VectorXd& gamma_P,
                                  const BasisSet& basis) {
    if (gamma_C.size() != basis.n_c || gamma_P.size() != basis.n_p)
        throw std::invalid_argument("reconstruct_input: coefficient sizes do not match the basis");
    const int N = basis.config.batch_length;
    return basis.Psi_C.topRows(N) * gamma_C + basis.Psi_PC.topRows(N) * gamma_P;
}

Eigen::VectorXd advance_past_coefficients(const Eigen::VectorXd& gamma_P, const Eigen::VectorXd& gamma_C,
                                          const BasisSet& basis) {
    const int step = basis.config.committed_per_batch();
    const int n_p = basis.n_p;
    Eigen::VectorXd next(n_p);
    next.head(n_p - step) = gamma_P.tail(n_p - step);
    next.tail(step) = gamma_C.head(step);
    return next;
}

namespace {

struct ActiveLift {
    Eigen::VectorXd weights;
    DataDrivenLift lift;
    Pseudoinverse gain;
};

void check_setup(const TrackingSetup& s) {
    s.basis.validate();
    s.hybrid.validate();
    s.plant.validate();
    const int N = s.basis.batch_length;
    if (s.hybrid.batch_length != N || s.plant.batch_length != N)
        throw std::invalid_argument("tracking: basis, hybrid model and plant batch lengths differ");
    if (s.batches < 1) throw std::invalid_argument("tracking: at least one batch is required");
    const std::size_t need = static_cast<std::size_t>(s.batches) * N + s.basis.window_length;
    if (s.y_d.size() < need) throw std::invalid_argument("tracking: reference shorter than batches + one window");
    const auto& c = s.controller;
    if (c.mode == ControlMode::hybrid && s.plant.delay_batches != 1)
        throw std::invalid_argument("tracking: the hybrid controller assumes a measurement delay of one batch");
    if (c.warmup_batches < 0) throw std::invalid_argument("tracking: warmup_batches must be >= 0");
    const int nw = s.hybrid.feature_length();
    if (c.initial_weights && c.initial_weights->size() != nw)
        throw std::invalid_argument("tracking: initial weights must have 1 + q + p entries");
    if (c.instability.weights && c.instability.weights->size() != nw)
        throw std::invalid_argument("tracking: instability weights must have 1 + q + p entries");
    check_stability(0.0, c.stability_threshold);
}

}  // namespace

void run_tracking(const TrackingSetup& setup, TrackingRecord& rec) {
    check_setup(setup);
    const auto& cc = setup.controller;
    const int N = setup.basis.batch_length;
    const int Nw = setup.basis.window_length;
    const int nw = setup.hybrid.feature_length();
    const int q = setup.hybrid.q, p = setup.hybrid.p;

    const DiscreteStateSpace nominal = discretize_zoh(setup.plant.nominal, setup.plant.Ts);
    const BasisSet basis = filter_and_partition(setup.basis, nominal);
    Plant plant(setup.plant, setup.seed);
    HybridModel model(setup.hybrid);
    StabilityMonitor monitor(basis, setup.hybrid, cc.stability_threshold, cc.pinv_tolerance);

    auto make_active = [&](const Eigen::VectorXd& w) {
        ActiveLift a{w, build_lift(setup.hybrid, w, DataDrivenLift::Scope::window), {}};
        a.gain = window_gain(a.lift, basis, cc.pinv_tolerance);
        return a;
    };
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(nw);
    ActiveLift active = make_active(zero);

    rec = TrackingRecord{};
    rec.batch_length = N;
    Eigen::VectorXd gamma_P = Eigen::VectorXd::Zero(basis.n_p);
    Eigen::VectorXd accepted = zero, prev_weights = zero;
    Eigen::VectorXd x_open = Eigen::VectorXd::Zero(nominal.order());
    bool frozen = false, reverted = false;
    int next_ingest = 0;
    const bool hybrid = cc.mode == ControlMode::hybrid;
    const bool scheduled = cc.instability.enabled && cc.instability.weights.has_value();

    for (int j = 0; j < setup.batches; ++j) {
        const long start = static_cast<long>(j) * N;

        if (hybrid) {
            while (next_ingest <= plant.last_commanded()) {
                const auto meas = plant.fetch_measurement(next_ingest);
                if (!meas) break;
                model.ingest(next_ingest, meas->values, cc.learning && !frozen && !scheduled);
                ++next_ingest;
            }
        }

        // candidate weights for this window
        const bool hybrid_active = hybrid && j >= cc.warmup_batches && !reverted;
        Eigen::VectorXd candidate = zero;
        if (hybrid_active) {
            if (frozen) {
                candidate = accepted;
            } else {
                candidate = cc.instability.weights ? *cc.instability.weights
                                                   : (cc.learning ? model.weights() : cc.initial_weights.value_or(zero));
                if (cc.instability.enabled) candidate.tail(p) *= cc.instability.scale(j);
            }
        }
        if (candidate != active.weights) active = make_active(candidate);

        double radius = std::numeric_limits<double>::quiet_NaN();
        std::string verdict = "off";
        if (cc.mode != ControlMode::none && cc.monitor) {
            const auto res = monitor.evaluate(active.weights, &active.lift);
            radius = res.radius;
            verdict = to_string(res.verdict);
            if (hybrid_active && res.verdict == Verdict::alarm) {
                if (!rec.alarm_window) rec.alarm_window = j;
                switch (cc.mitigation) {
                    case Mitigation::freeze_learning:
                        frozen = true;
                        if (accepted != active.weights) active = make_active(accepted);
                        ++rec.mitigated_windows;
                        break;
                    case Mitigation::revert_standard:
                        reverted = true;
                        if (!active.weights.isZero(0.0)) active = make_active(zero);
                        ++rec.mitigated_windows;
                        break;
                    case Mitigation::halt:
                        throw StabilityHalt(j, res.radius);
                    case Mitigation::monitor_only:
                        break;
                }
            } else if (hybrid_active) {
                accepted = active.weights;
            }
        }

        const Eigen::VectorXd y_d_win = Eigen::Map<const Eigen::VectorXd>(setup.y_d.data() + start, Nw);
        Eigen::VectorXd u, ypb, yh;
        if (cc.mode == ControlMode::none) {
            u = y_d_win.head(N);
            ypb.resize(N);
            for (int i = 0; i < N; ++i) {
                ypb(i) = nominal.C().dot(x_open) + nominal.D() * u(i);
                if (nominal.order() > 0) x_open = nominal.A() * x_open + nominal.B() * u(i);
            }
            yh = ypb;
        } else {
            const Eigen::VectorXd ypb_past = model.physics_segment(start - 2 * N, 2 * N);
            const Eigen::VectorXd e_tail = hybrid ? model.error_tail(start - N) : Eigen::VectorXd::Zero(p);
            const WindowSolution sol =
                optimize_window(y_d_win, basis, active.lift, active.gain, gamma_P, ypb_past, e_tail);
            u = reconstruct_input(sol.gamma_C, gamma_P, basis);
            const Eigen::VectorXd ypb_win = basis.PsiT_C * sol.gamma_C + basis.PsiT_PC * gamma_P;
            const Eigen::VectorXd yh_win = active.lift.apply(ypb_win, ypb_past, e_tail);
            ypb = ypb_win.head(N);
            yh = yh_win.head(N);
            if (cc.keep_window_traces)
                rec.traces.push_back({j, active.weights, gamma_P, sol.gamma_C, y_d_win, yh_win, ypb_win});
            rec.rank_deficient.push_back(sol.rank_deficient);
            gamma_P = advance_past_coefficients(gamma_P, sol.gamma_C, basis);
        }
        if (!u.allFinite()) {
            std::ostringstream os;
            os << "tracking: non-finite input in batch " << j;
            throw std::runtime_error(os.str());
        }
        model.record_physics(j, std::span<const double>(ypb.data(), N));

        if (setup.plant.kind == PlantConfig::Kind::hybrid_consistent) plant.set_error_model(q, p, active.weights);
        plant.step_batch({j, std::vector<double>(u.data(), u.data() + N)});

        for (int i = 0; i < N; ++i) {
            rec.y_d.push_back(setup.y_d[start + i]);
            rec.u.push_back(u(i));
            rec.y_true.push_back(plant.true_output()[start + i]);
            rec.y_meas.push_back(plant.measured_output()[start + i]);
            rec.y_hat_pb.push_back(ypb(i));
            rec.y_hat_h.push_back(yh(i));
        }
        rec.spectral_radius.push_back(radius);
        rec.verdict.push_back(verdict);
        rec.weight_change_norm.push_back((active.weights - prev_weights).norm());
        prev_weights = active.weights;
    }
}

TrackingRecord run_tracking(const TrackingSetup& setup) {
    TrackingRecord rec;
    run_tracking(setup, rec);
    return rec;
}

}  // namespace fbf
