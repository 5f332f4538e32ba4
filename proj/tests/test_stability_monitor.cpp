#include "closed_loop_fidelity.hpp"

#include "fbf/experiment.hpp"
#include "fbf/oracles.hpp"
#include "fbf/stability_monitor.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace fbf;

namespace {

using Scope = DataDrivenLift::Scope;

const BasisSet& table_basis() {
    static const BasisSet b = filter_and_partition(BasisConfig{}, discretize_zoh(printer_x_axis(), 0.001));
    return b;
}

// e(k) = a e(k-1) + b y_pb(k)
Eigen::VectorXd feedback_weights(double b, double a) {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(55);
    w(4) = b;
    w(54) = a;
    return w;
}

Eigen::MatrixXd with_spectrum(const Eigen::MatrixXd& D, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    Eigen::MatrixXd V(D.rows(), D.cols());
    for (Eigen::Index i = 0; i < V.size(); ++i) V(i) = d(rng);
    V += 3.0 * Eigen::MatrixXd::Identity(D.rows(), D.cols());
    return V * D * V.inverse();
}

}  // namespace

TEST_CASE("identity lift closed loop structure") {
    const BasisSet& b = table_basis();
    const ClosedLoopSystem s = assemble_closed_loop(DataDrivenLift::identity(HybridConfig{}, Scope::window), b);
    CHECK(s.state_dim() == 6 * 70 + b.n_p + 1);
    CHECK(s.A.rows() == s.state_dim());
    CHECK(s.B.cols() == 14);
    CHECK(s.K.middleCols(s.h2(), 70).isZero(0.0));
    CHECK(s.K.middleCols(s.h1(), 140).isZero(0.0));
    CHECK(s.K.middleCols(s.p2(), 210).isZero(0.0));
    CHECK(s.K.col(s.bias()).isZero(0.0));
    const Eigen::MatrixXd M = pseudo_inverse(b.PsiT_C).matrix;
    CHECK((s.M - M).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((s.K.middleCols(s.g(), b.n_p) + M * b.PsiT_PC).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(s.A.row(s.bias()).isZero(0.0));
}

TEST_CASE("zero-weight spectral radius regression value") {
    const BasisSet& b = table_basis();
    const ClosedLoopSystem s = assemble_closed_loop(DataDrivenLift::identity(HybridConfig{}, Scope::window), b);
    const double full = oracle::full_closed_loop_radius(s);
    const RadiusEstimate est = spectral_radius(s);
    CHECK(full == doctest::Approx(0.48886267323841581).epsilon(1e-9));
    CHECK(std::abs(est.value - full) <= 1e-6);
    CHECK(std::abs(*spectral_radius_dense(s.reduced_closed_loop()) - full) <= 1e-6);
}

TEST_CASE("synthetic spectra") {
    const Eigen::MatrixXd half = 0.5 * Eigen::MatrixXd::Identity(20, 20);
    CHECK(spectral_radius(half).value == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(*spectral_radius_dense(half) == doctest::Approx(0.5).epsilon(1e-12));

    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> small(-0.5, 0.5);
    for (int trial = 0; trial < 6; ++trial) {
        Eigen::MatrixXd D = Eigen::MatrixXd::Zero(40, 40);
        for (int i = 2; i < 40; ++i) D(i, i) = small(rng);
        const double r = 0.8 + 0.05 * trial;
        if (trial % 2 == 0) {
            D(0, 0) = r;
            D(1, 1) = -0.6;
        } else {
            const double th = 0.3 * trial;
            D(0, 0) = D(1, 1) = r * std::cos(th);
            D(0, 1) = -r * std::sin(th);
            D(1, 0) = r * std::sin(th);
        }
        const Eigen::MatrixXd A = with_spectrum(D, rng);
        const auto p = spectral_radius_power(A);
        const auto d = spectral_radius_dense(A);
        REQUIRE(p.has_value());
        REQUIRE(d.has_value());
        CHECK(std::abs(*p - *d) <= 1e-6);
        CHECK(*d == doctest::Approx(r).epsilon(1e-9));
    }
}

TEST_CASE("verdicts") {
    CHECK(check_stability(0.5) == Verdict::stable);
    CHECK(check_stability(0.97) == Verdict::warning);
    CHECK(check_stability(0.999) == Verdict::warning);
    CHECK(check_stability(1.0) == Verdict::alarm);
    CHECK(check_stability(3.0) == Verdict::alarm);
    CHECK(check_stability(std::numeric_limits<double>::quiet_NaN()) == Verdict::alarm);
    CHECK(check_stability(std::numeric_limits<double>::infinity()) == Verdict::alarm);
    CHECK(check_stability(0.9, 0.8) == Verdict::warning);
    CHECK_THROWS_AS(check_stability(0.5, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(check_stability(0.5, 1.2), std::invalid_argument);
    CHECK(to_string(Verdict::alarm) == "alarm");
}

TEST_CASE("monitor caches repeated weights") {
    StabilityMonitor mon(table_basis(), HybridConfig{}, 0.97);
    const auto a = mon.evaluate(Eigen::VectorXd::Zero(55));
    const auto b = mon.evaluate(Eigen::VectorXd::Zero(55));
    CHECK_FALSE(a.cached);
    CHECK(b.cached);
    CHECK(a.radius == b.radius);
    CHECK(a.verdict == Verdict::stable);
}

TEST_CASE("unit-radius crossing of the error-feedback scale sits at the recursion pole") {
    const HybridConfig c;
    const Eigen::VectorXd w = feedback_weights(-0.5, 0.4);
    const double s_star = oracle::bisect_unit_radius(c, table_basis(), w, 2.3, 2.7, 1e-4);
    CHECK(s_star == doctest::Approx(2.5).epsilon(1e-3));

    StabilityMonitor mon(table_basis(), c, 0.97);
    Eigen::VectorXd below = w, above = w;
    below.tail(50) *= 2.4;
    above.tail(50) *= 2.6;
    CHECK(mon.evaluate(below).radius < 1.0);
    CHECK(mon.evaluate(above).verdict == Verdict::alarm);
}

namespace {

TrackingRecord frozen_run(const Eigen::VectorXd& w, int batches) {
    TrackingSetup s;
    s.plant.nominal = printer_x_axis();
    s.plant.kind = PlantConfig::Kind::hybrid_consistent;
    s.controller.mode = ControlMode::hybrid;
    s.controller.warmup_batches = 0;
    s.controller.learning = false;
    s.controller.initial_weights = w;
    s.controller.keep_window_traces = true;
    s.batches = batches;
    s.y_d.resize(batches * 70 + 140);
    for (std::size_t k = 0; k < s.y_d.size(); ++k)
        s.y_d[k] = 0.5 * smoothstep9(std::min(1.0, k / 250.0)) * std::sin(2.0 * M_PI * 10.0 * k * 0.001);
    return run_tracking(s);
}

}  // namespace

TEST_CASE("state equation reproduces a frozen-weight run") {
    Eigen::VectorXd w = feedback_weights(-0.2, 0.5);
    w(3) = 0.05;
    w(30) = 0.1;
    const ClosedLoopSystem sys = assemble_closed_loop(build_lift(HybridConfig{}, w, Scope::window), table_basis());
    const auto f = testing::closed_loop_fidelity(sys, frozen_run(w, 12));
    CHECK(f.windows == 11);
    CHECK(f.max_state_error <= 1e-9);
    CHECK(f.max_input_error <= 1e-9);

    Eigen::VectorXd x = Eigen::VectorXd::Zero(sys.state_dim());
    CHECK(sys.step(x, Eigen::VectorXd::Zero(140))(sys.bias()) == 1.0);
}

TEST_CASE("a bias weight only disturbs the start-up transition") {
    Eigen::VectorXd w = feedback_weights(-0.2, 0.5);
    w(0) = 0.003;
    const ClosedLoopSystem sys = assemble_closed_loop(build_lift(HybridConfig{}, w, Scope::window), table_basis());
    const TrackingRecord rec = frozen_run(w, 12);
    CHECK(testing::closed_loop_fidelity(sys, rec).max_state_error > 1e-3);
    const auto f = testing::closed_loop_fidelity(sys, rec, 2);
    CHECK(f.windows == 9);
    CHECK(f.max_state_error <= 1e-9);
    CHECK(f.max_input_error <= 1e-9);
}
