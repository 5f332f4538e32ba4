#include "fbf/config.hpp"
#include "fbf/experiment.hpp"
#include "fbf/trajectory.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace fbf;

namespace {

double max_rate(const std::vector<double>& y, int order, double Ts) {
    double m = 0.0;
    for (std::size_t k = order; k < y.size(); ++k) {
        const double d = order == 1 ? y[k] - y[k - 1] : y[k] - 2 * y[k - 1] + y[k - 2];
        m = std::max(m, std::abs(d) / std::pow(Ts, order));
    }
    return m;
}

const char* small_run = R"(
experiment.seed = 4
experiment.duration = 1.4   # 20 batches
controller.mode = standard
controller.warmup_batches = 0
plant.cubic_stiffness_gain = 0.05
plant.amplitude_scale = 0.5
plant.noise_sigma = 0.002
trajectory.kind = sine-scan
trajectory.speed = 17.5
experiment.baseline = true
)";

std::string temp_dir(const std::string& name) {
    const auto d = std::filesystem::temp_directory_path() / ("fbf_test_" + name);
    std::filesystem::remove_all(d);
    return d.string();
}

std::string slurp(const std::string& path) {
    std::ifstream f(path);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("sine scan frequency is speed over wavelength") {
    TrajectoryConfig t;
    t.speed = 5.0;
    const auto y10 = generate_trajectory(t, 0.001, 1.0);
    t.speed = 17.5;
    const auto y35 = generate_trajectory(t, 0.001, 1.0);
    REQUIRE(y10.size() == 1000);
    for (int k = 300; k < 700; ++k) {
        CHECK(y10[k] == doctest::Approx(0.5 * std::sin(2 * M_PI * 10.0 * k * 0.001)).epsilon(1e-12));
        CHECK(y35[k] == doctest::Approx(0.5 * std::sin(2 * M_PI * 35.0 * k * 0.001)).epsilon(1e-12));
    }
    CHECK(y10.front() == 0.0);
    CHECK(std::abs(y10.back()) < 1e-6);
}

TEST_CASE("smoothstep endpoints") {
    CHECK(smoothstep9(0.0) == 0.0);
    CHECK(smoothstep9(1.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(smoothstep9(0.5) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(smoothstep9(-1.0) == 0.0);
    CHECK(smoothstep9(2.0) == 1.0);
}

TEST_CASE("jerk-limited move respects its limits") {
    for (double dist : {2.0, 0.05, 10.0}) {
        const auto y = scurve_move(dist, 60.0, 3000.0, 6e6, 0.001);
        CHECK(y.back() == doctest::Approx(dist).epsilon(1e-12));
        CHECK(max_rate(y, 1, 0.001) <= 60.0 * (1 + 1e-9));
        CHECK(max_rate(y, 2, 0.001) <= 3000.0 * (1 + 1e-9));
        CHECK(scurve_duration(dist, 60.0, 3000.0, 6e6) == doctest::Approx((y.size() - 1) * 0.001).epsilon(0.01));
    }
    // long moves cruise at the velocity limit
    const auto y = scurve_move(10.0, 60.0, 3000.0, 6e6, 0.001);
    CHECK(max_rate(y, 1, 0.001) == doctest::Approx(60.0).epsilon(0.01));
    CHECK_THROWS_AS(scurve_move(1.0, 0.0, 3000.0, 6e6, 0.001), std::invalid_argument);
}

TEST_CASE("square loop stays within its kinematic limits") {
    TrajectoryConfig t;
    t.kind = "square-loop";
    t.side = 5.0;
    t.v_lim = 100.0;
    t.a_lim = 10000.0;
    t.j_lim = 5e6;
    t.infill_strokes = 2;
    const auto y = generate_trajectory(t, 0.001, 4.0);
    CHECK(y.size() == 4000);
    CHECK(max_rate(y, 1, 0.001) <= 100.0 * (1 + 1e-9));
    CHECK(max_rate(y, 2, 0.001) <= 10000.0 * (1 + 1e-9));
    double lo = 0.0, hi = 0.0;
    for (double v : y) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    CHECK(lo >= -1e-12);
    CHECK(hi == doctest::Approx(5.0).epsilon(1e-9));
}

TEST_CASE("custom samples are resampled") {
    const std::string dir = temp_dir("samples");
    std::filesystem::create_directories(dir);
    {
        std::ofstream f(dir + "/pairs.csv");
        f << "# t, y\n0, 0\n0.01, 1\n0.02, 0\n";
    }
    TrajectoryConfig t;
    t.kind = "custom-samples";
    t.file = dir + "/pairs.csv";
    const auto y = generate_trajectory(t, 0.001, 0.03);
    REQUIRE(y.size() == 30);
    CHECK(y[5] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(y[10] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(y[15] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(y[25] == doctest::Approx(0.0).epsilon(1e-12));
    t.file = dir + "/missing.csv";
    CHECK_THROWS_AS(generate_trajectory(t, 0.001, 0.03), std::invalid_argument);
}

TEST_CASE("config file syntax") {
    const auto f = ConfigFile::parse(
        "a.x = 1.5  # comment\n"
        "# whole line\n"
        "a.list = [1, 2.5, -3]\n"
        "a.name = \"two words\"\n"
        "a.flag = true\n");
    std::vector<std::string> P;
    CHECK(f.get_double("a.x", 0.0, P) == 1.5);
    CHECK(f.get_array("a.list", {}, P) == std::vector<double>{1.0, 2.5, -3.0});
    CHECK(f.get_string("a.name", "", P) == "two words");
    CHECK(f.get_bool("a.flag", false, P));
    CHECK(P.empty());
    CHECK(f.get_int("a.x", 0, P) == 0);
    CHECK(P.size() == 1);

    CHECK_THROWS_AS(ConfigFile::parse("a = 1\na = 2\n"), ConfigError);
    CHECK_THROWS_AS(ConfigFile::parse("just words\n"), ConfigError);
}

TEST_CASE("every configuration problem is reported at once") {
    const auto f = ConfigFile::parse(
        "hybrid.q = 0\n"
        "plant.noise_sigma = -1\n"
        "controller.mode = turbo\n"
        "bogus.key = 3\n");
    try {
        load_experiment(f);
        FAIL("expected a config error");
    } catch (const ConfigError& e) {
        CHECK(e.problems.size() >= 4);
        const std::string msg = e.what();
        CHECK(msg.find("bogus.key") != std::string::npos);
        CHECK(msg.find("turbo") != std::string::npos);
    }
}

TEST_CASE("hybrid runs need a one-batch measurement delay and enough batches") {
    CHECK_THROWS_AS(load_experiment(ConfigFile::parse("plant.delay_batches = 2\n")), ConfigError);
    CHECK_THROWS_AS(load_experiment(ConfigFile::parse("experiment.duration = 5\n")), ConfigError);
    CHECK_NOTHROW(load_experiment(ConfigFile::parse("controller.mode = standard\nplant.delay_batches = 2\n")));
}

TEST_CASE("step output rows, recomputed RMS and byte-identical reruns") {
    const ExperimentConfig c = load_experiment(ConfigFile::parse(small_run));
    CHECK(c.steps() == 1400);
    const auto a = run_experiment(c), b = run_experiment(c);
    std::ostringstream sa, sb;
    write_step_csv(sa, a.record, c.plant.Ts);
    write_step_csv(sb, b.record, c.plant.Ts);
    CHECK(sa.str() == sb.str());

    std::istringstream in(sa.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "step,t,y_d,u,y_true,y_meas,y_hat_pb,y_hat_h,e");
    double sq = 0.0;
    long rows = 0;
    while (std::getline(in, line)) {
        sq += std::pow(std::stod(line.substr(line.rfind(',') + 1)), 2);
        ++rows;
    }
    CHECK(rows == 1400);
    CHECK(std::sqrt(sq / rows) == doctest::Approx(a.summary.rms_error_total).epsilon(1e-12));

    // compensation beats feeding the reference straight through
    REQUIRE(a.baseline.has_value());
    CHECK(a.summary.rms_error_post_warmup < 0.1 * a.baseline->rms_error_post_warmup);
}

TEST_CASE("run_and_write produces the three files and exit codes") {
    ExperimentConfig c = load_experiment(ConfigFile::parse(small_run));
    c.output_dir = temp_dir("write");
    c.name = "small";
    std::ostringstream log;
    CHECK(run_and_write(c, log) == exit_ok);
    for (const char* ext : {".steps.csv", ".windows.csv", ".summary.json"})
        CHECK(std::filesystem::exists(c.output_dir + "/small" + ext));
    CHECK(slurp(c.output_dir + "/small.summary.json").find("\"uncompensated\"") != std::string::npos);

    // an alarm under the halt policy still writes the partial record
    ExperimentConfig h = load_experiment(ConfigFile::parse(
        "controller.mode = hybrid\n"
        "controller.warmup_batches = 2\n"
        "controller.mitigation = halt\n"
        "experiment.duration = 0.84\n"
        "plant.kind = hybrid-consistent\n"
        "instability.enabled = true\n"
        "instability.scale_start = 3\n"
        "instability.scale_end = 3\n"
        "instability.weights = [0, 0, 0, 0, -0.5, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, "
        "0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0.4]\n"));
    h.output_dir = c.output_dir;
    h.name = "halted";
    CHECK(run_and_write(h, log) == exit_halt);
    const std::string steps = slurp(c.output_dir + "/halted.steps.csv");
    CHECK(std::count(steps.begin(), steps.end(), '\n') == 141);
    CHECK(slurp(c.output_dir + "/halted.summary.json").find("\"completed\": false") != std::string::npos);
}

TEST_CASE("sweep expansion names each run") {
    const auto base = ConfigFile::parse("output.name = base\n");
    const auto runs = expand_sweep(base, "plant.noise_sigma", {"0.001", "0.003"});
    REQUIRE(runs.size() == 2);
    CHECK(runs[1].raw("plant.noise_sigma") == "0.003");
    CHECK(runs[1].raw("output.name") == "base_plant.noise_sigma_0.003");
    CHECK_THROWS_AS(expand_sweep(base, "x", {}), ConfigError);
}

TEST_CASE("number formatting round-trips") {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 123456789.123456789}) CHECK(std::stod(format_number(v)) == v);
    CHECK(format_number(std::nan("")) == "nan");
}
