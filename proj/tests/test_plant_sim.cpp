#include "fbf/experiment.hpp"
#include "fbf/oracles.hpp"
#include "fbf/plant_sim.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace fbf;

namespace {

PlantConfig linear_x() {
    PlantConfig c;
    c.nominal = printer_x_axis();
    return c;
}

std::vector<double> run_plant(Plant& plant, const std::vector<double>& u) {
    const int N = plant.config().batch_length;
    std::vector<double> y;
    for (std::size_t j = 0; j * N < u.size(); ++j) {
        Batch b{static_cast<int>(j), std::vector<double>(u.begin() + j * N, u.begin() + (j + 1) * N)};
        const Batch out = plant.step_batch(b);
        y.insert(y.end(), out.values.begin(), out.values.end());
    }
    return y;
}

std::vector<double> sine(double amp, double hz, int n, double Ts = 0.001) {
    std::vector<double> u(n);
    for (int k = 0; k < n; ++k) u[k] = amp * std::sin(2.0 * M_PI * hz * k * Ts);
    return u;
}

}  // namespace

TEST_CASE("zero nonlinear gains reproduce the linear model") {
    Plant plant(linear_x(), 3);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    std::vector<double> u(70 * 20);
    for (double& v : u) v = d(rng);
    const auto y = run_plant(plant, u);
    const auto ref = simulate(discretize_zoh(printer_x_axis(), 0.001), u);
    double err = 0.0;
    for (std::size_t k = 0; k < y.size(); ++k) err = std::max(err, std::abs(y[k] - ref[k]));
    CHECK(err <= 1e-12);
    CHECK(plant.measured_output() == plant.true_output());
}

TEST_CASE("zero input gives zero output with every nonlinearity on") {
    PlantConfig c = linear_x();
    c.cubic_stiffness_gain = 0.2;
    c.amplitude_scale = 0.5;
    c.friction_coefficient = 0.01;
    Plant plant(c, 1);
    const auto y = run_plant(plant, std::vector<double>(700, 0.0));
    for (double v : y) CHECK(v == 0.0);
}

TEST_CASE("cubic stiffness makes the response amplitude dependent") {
    PlantConfig c = linear_x();
    c.cubic_stiffness_gain = 0.2;
    c.amplitude_scale = 0.5;
    auto peak_ratio = [&](double a) {
        Plant plant(c, 1);
        const auto y = run_plant(plant, sine(a, 10.0, 1400));
        double peak = 0.0;
        for (double v : y) peak = std::max(peak, std::abs(v));
        return peak / a;
    };
    const double r1 = peak_ratio(0.5), r3 = peak_ratio(1.5);
    CHECK(std::abs(r3 / r1 - 1.0) > 0.01);
}

TEST_CASE("friction opposes the velocity of the linear response") {
    PlantConfig c = linear_x();
    c.friction_coefficient = 0.01;
    Plant plant(c, 1);
    const auto y = run_plant(plant, sine(0.5, 10.0, 700));
    const auto& lin = plant.linear_output();
    for (std::size_t k = 1; k < y.size(); ++k) {
        const double dv = lin[k] - lin[k - 1];
        const double expected = dv > 0 ? -0.01 : (dv < 0 ? 0.01 : 0.0);
        CHECK(y[k] - lin[k] == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("measurement availability matches a queue replay") {
    for (int delay : {0, 1, 2}) {
        PlantConfig c = linear_x();
        c.delay_batches = delay;
        Plant plant(c, 1);
        for (int j = 0; j < 6; ++j) {
            plant.step_batch({j, std::vector<double>(70, 0.1)});
            const auto expect = oracle::measurement_availability(delay, j);
            for (int i = 0; i <= j; ++i) CHECK(plant.fetch_measurement(i).has_value() == expect[i]);
        }
    }
}

TEST_CASE("delayed measurement equals the stored output") {
    PlantConfig c = linear_x();
    c.noise_sigma = 0.01;
    Plant plant(c, 5);
    for (int j = 0; j < 3; ++j) plant.step_batch({j, std::vector<double>(70, 0.2)});
    const auto b = plant.fetch_measurement(1);
    REQUIRE(b.has_value());
    CHECK(b->index == 1);
    for (int i = 0; i < 70; ++i) CHECK(b->values[i] == plant.measured_output()[70 + i]);
}

TEST_CASE("requests for batches never produced or out of order are rejected") {
    Plant plant(linear_x(), 1);
    CHECK_THROWS_AS(plant.fetch_measurement(0), std::invalid_argument);
    plant.step_batch({0, std::vector<double>(70, 0.0)});
    CHECK_THROWS_AS(plant.fetch_measurement(3), std::invalid_argument);
    CHECK_THROWS_AS(plant.fetch_measurement(-1), std::invalid_argument);
    CHECK_THROWS_AS(plant.step_batch({2, std::vector<double>(70, 0.0)}), std::invalid_argument);
    CHECK_THROWS_AS(plant.step_batch({1, std::vector<double>(69, 0.0)}), std::invalid_argument);
}

TEST_CASE("noise is seeded and only touches the measured channel") {
    PlantConfig quiet = linear_x(), noisy = linear_x();
    noisy.noise_sigma = 0.003;
    const auto u = sine(0.5, 35.0, 700);
    Plant a(noisy, 42), b(noisy, 42), c(quiet, 42);
    run_plant(a, u);
    run_plant(b, u);
    run_plant(c, u);
    CHECK(a.measured_output() == b.measured_output());
    CHECK(a.true_output() == c.true_output());

    std::mt19937_64 rng(42);
    std::normal_distribution<double> n(0.0, 1.0);
    for (std::size_t k = 0; k < u.size(); ++k) {
        const double z = n(rng);
        CHECK(a.measured_output()[k] - a.true_output()[k] == doctest::Approx(0.003 * z).epsilon(1e-9));
    }
}

TEST_CASE("resonance detuning scales the two middle denominator coefficients") {
    const auto tf = printer_x_axis();
    const auto d = detune_resonance(tf, 1.15);
    const std::size_t n = tf.denominator.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double f = (i == n / 2 - 1 || i == n / 2) ? 1.15 : 1.0;
        CHECK(d.denominator[i] == doctest::Approx(f * tf.denominator[i]).epsilon(1e-15));
    }
    PlantConfig c = linear_x();
    c.resonance_detune = 1.15;
    Plant plant(c, 1);
    CHECK(plant.model().pole_radius() < 1.0);
    CHECK(plant.model().A() != discretize_zoh(tf, 0.001).A());
}

TEST_CASE("hybrid-consistent plant follows the error recursion") {
    PlantConfig c = linear_x();
    c.kind = PlantConfig::Kind::hybrid_consistent;
    Plant plant(c, 1);
    const int q = 2, p = 3;
    Eigen::VectorXd w(1 + q + p);
    w << 0.01, 0.2, -0.1, 0.05, -0.2, 0.3;
    plant.set_error_model(q, p, w);
    const auto y = run_plant(plant, sine(0.5, 10.0, 280));
    const auto& lin = plant.linear_output();
    std::vector<double> e(y.size());
    for (std::size_t k = 0; k < y.size(); ++k) {
        double acc = w(0);
        for (int i = 0; i < q; ++i) {
            const long t = static_cast<long>(k) - q + 1 + i;
            if (t >= 0) acc += w(1 + i) * lin[t];
        }
        for (int i = 0; i < p; ++i) {
            const long t = static_cast<long>(k) - p + i;
            if (t >= 0) acc += w(1 + q + i) * e[t];
        }
        e[k] = acc;
        CHECK(y[k] - lin[k] == doctest::Approx(e[k]).epsilon(1e-12));
    }

    Plant nonlinear(linear_x(), 1);
    CHECK_THROWS_AS(nonlinear.set_error_model(q, p, w), std::invalid_argument);
    CHECK_THROWS_AS(plant.set_error_model(q, p + 1, w), std::invalid_argument);
}

TEST_CASE("invalid plant configurations are rejected") {
    PlantConfig c = linear_x();
    c.noise_sigma = -1.0;
    CHECK_THROWS_AS(Plant(c, 1), std::invalid_argument);
    c = linear_x();
    c.amplitude_scale = 0.0;
    CHECK_THROWS_AS(Plant(c, 1), std::invalid_argument);
    c = linear_x();
    c.delay_batches = -1;
    CHECK_THROWS_AS(Plant(c, 1), std::invalid_argument);
}
