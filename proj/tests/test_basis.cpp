#include "fbf/basis.hpp"
#include "fbf/experiment.hpp"
#include "fbf/oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace fbf;

TEST_CASE("linear splines are hat functions") {
    BasisConfig c;
    c.degree = 1;
    c.knot_spacing = 1;
    const Eigen::MatrixXd B = build_bspline_basis(c, 12);
    for (Eigen::Index col = 0; col < B.cols(); ++col) {
        const int peak = basis_column_start(c, static_cast<int>(col)) + 1;
        for (int k = 0; k < 12; ++k) CHECK(B(k, col) == (k == peak ? 1.0 : 0.0));
    }
}

TEST_CASE("cardinal spline values") {
    CHECK(cardinal_bspline(3, 2.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(cardinal_bspline(3, 1.0) == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
    CHECK(cardinal_bspline(5, 3.0) == doctest::Approx(0.55).epsilon(1e-14));
    CHECK(cardinal_bspline(5, 0.0) == 0.0);
    CHECK(cardinal_bspline(5, 6.0) == 0.0);
    CHECK(cardinal_bspline(5, -1.0) == 0.0);
}

TEST_CASE("partition of unity at every sample") {
    for (int degree : {1, 3, 5}) {
        BasisConfig c;
        c.degree = degree;
        const Eigen::MatrixXd B = build_bspline_basis(c, 700);
        const Eigen::VectorXd s = B.rowwise().sum();
        CHECK((s.array() - 1.0).abs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("support counts around a batch boundary") {
    const BasisConfig c;
    // Splines live on (s, s + 60); sampled at integers, those starting 10..50 steps
    // before a boundary have samples on both sides of it.
    CHECK(oracle::splines_crossing_boundary(c) == c.degree);
    // Inside a knot interval, degree + 1 splines are active.
    const Eigen::MatrixXd B = build_bspline_basis(c, 280);
    for (int k : {141, 145, 149}) CHECK((B.row(k).array() != 0.0).count() == c.degree + 1);
    CHECK((B.row(140).array() != 0.0).count() == c.degree);
}

TEST_CASE("basis config validation") {
    BasisConfig c;
    CHECK_NOTHROW(c.validate());
    c.batch_length = 75;
    c.window_length = 150;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = BasisConfig{};
    c.window_length = 100;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = BasisConfig{};
    c.degree = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    CHECK_THROWS_AS(build_bspline_basis(BasisConfig{}, 59), std::invalid_argument);
    CHECK_NOTHROW(build_bspline_basis(BasisConfig{}, 60));
}

TEST_CASE("identity filtering leaves the basis unchanged") {
    const BasisSet s = filter_and_partition(BasisConfig{}, DiscreteStateSpace::static_gain(1.0, 0.001));
    CHECK(s.PsiT_C == s.Psi_C);
    CHECK(s.PsiT_PC == s.Psi_PC);
    CHECK(s.n_c == 14);
    CHECK(s.n_p == 7);
}

TEST_CASE("one-step delay shifts the basis down one row") {
    const BasisSet s = filter_and_partition(BasisConfig{}, DiscreteStateSpace::unit_delay(0.001));
    CHECK(s.PsiT_C.row(0).isZero(0.0));
    CHECK(s.PsiT_C.bottomRows(139) == s.Psi_C.topRows(139));
    CHECK(s.PsiT_PC.bottomRows(139) == s.Psi_PC.topRows(139));
}

TEST_CASE("zero model is rejected with its singular values") {
    try {
        filter_and_partition(BasisConfig{}, DiscreteStateSpace::static_gain(0.0, 0.001));
        FAIL("expected rejection");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("singular values") != std::string::npos);
    }
}

TEST_CASE("printer model: past coefficient count follows the impulse-response length") {
    const auto m = discretize_zoh(printer_x_axis(), 0.001);
    const BasisSet s = filter_and_partition(BasisConfig{}, m);
    CHECK(s.n_c == 14);
    CHECK(s.n_p == (60 + s.impulse_length - 2) / 10);
    CHECK(s.condition_number < 1e8);
    // unfiltered past block: only the last 5 past splines reach the window
    for (int r = 0; r < s.n_p - 5; ++r) CHECK(s.Psi_PC.col(r).isZero(0.0));
    CHECK(!s.Psi_PC.col(s.n_p - 5).isZero(0.0));
}

TEST_CASE("window blocks match absolute-time filtering") {
    const BasisConfig c;
    const auto m = discretize_zoh(printer_x_axis(), 0.001);
    const BasisSet s = filter_and_partition(c, m, 40);
    const BasisSet s0 = filter_and_partition(c, m, 0);
    CHECK(s.PsiT_C == s0.PsiT_C);
    CHECK(s.PsiT_PC == s0.PsiT_PC);

    // Build the absolute basis, push the needed columns through the state recursion
    // and cut out window 40.
    const int j = 40, W = j * c.batch_length, H = W + c.window_length;
    const Eigen::MatrixXd B = build_bspline_basis(c, H);
    auto abs_col = [&](int start) { return start / c.knot_spacing + c.degree; };
    auto filtered = [&](int col) {
        std::vector<double> u(B.col(col).data(), B.col(col).data() + H);
        const auto y = simulate(m, u);
        return Eigen::Map<const Eigen::VectorXd>(y.data() + W, c.window_length).eval();
    };
    double worst = 0.0;
    for (int cc = 0; cc < s.n_c; ++cc)
        worst = std::max(worst, (filtered(abs_col(W + cc * c.knot_spacing)) - s.PsiT_C.col(cc)).cwiseAbs().maxCoeff());
    for (int r = 0; r < s.n_p; ++r) {
        const int col = abs_col(W - (s.n_p - r) * c.knot_spacing);
        REQUIRE(col >= 0);
        worst = std::max(worst, (filtered(col) - s.PsiT_PC.col(r)).cwiseAbs().maxCoeff());
    }
    CHECK(worst <= 1e-12);
}

TEST_CASE("window output reconstructs the filtered coefficient sequence") {
    const BasisConfig c;
    const auto m = discretize_zoh(printer_x_axis(), 0.001);
    const BasisSet s = filter_and_partition(c, m);
    const auto h = truncated_impulse_response(m);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> d;
    Eigen::VectorXd gC(s.n_c), gP(s.n_p);
    for (auto* v : {&gC, &gP})
        for (Eigen::Index i = 0; i < v->size(); ++i) (*v)(i) = d(rng);

    // local time runs from the start of the oldest past spline to the window end
    const int m_ = c.knot_spacing, offset = s.n_p * m_;
    const int T = offset + c.window_length;
    std::vector<double> u(T, 0.0);
    auto add = [&](int start, double g) {
        for (int t = 1; t < c.support_steps(); ++t) {
            const int k = offset + start + t;
            if (k >= 0 && k < T) u[k] += g * cardinal_bspline(c.degree, static_cast<double>(t) / m_);
        }
    };
    for (int r = 0; r < s.n_p; ++r) add(-(s.n_p - r) * m_, gP(r));
    for (int cc = 0; cc < s.n_c; ++cc) add(cc * m_, gC(cc));
    const auto y = lifted_filter(h, u);
    const Eigen::VectorXd ref = Eigen::Map<const Eigen::VectorXd>(y.data() + offset, c.window_length);
    CHECK((s.PsiT_C * gC + s.PsiT_PC * gP - ref).cwiseAbs().maxCoeff() <= 1e-10);
}
