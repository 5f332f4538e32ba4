// Command-line front end: run / sweep / validate / oracle.

#include "fbf/experiment.hpp"
#include "fbf/oracles.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <iostream>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

using namespace fbf;

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string item;
    while (std::getline(in, item, sep)) out.push_back(item);
    return out;
}

int cmd_run(const std::string& path, const std::string& out_dir) {
    ExperimentConfig cfg;
    try {
        cfg = load_experiment(path);
    } catch (const std::exception& e) {
        std::cerr << "config error:\n" << e.what() << "\n";
        return exit_config;
    }
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    return run_and_write(cfg, std::cout);
}

int cmd_validate(const std::string& path) {
    try {
        const ExperimentConfig cfg = load_experiment(path);
        std::cout << path << ": ok (" << to_string(cfg.controller.mode) << ", " << cfg.batches() << " batches)\n";
        return exit_ok;
    } catch (const std::exception& e) {
        std::cerr << "config error:\n" << e.what() << "\n";
        return exit_config;
    }
}

int cmd_sweep(const std::string& path, const std::string& param, const std::string& out_dir, int jobs) {
    std::vector<ExperimentConfig> configs;
    try {
        const auto eq = param.find('=');
        if (eq == std::string::npos) throw ConfigError({"--param expects key=v1,v2,..."});
        const ConfigFile base = ConfigFile::load(path);
        for (const auto& f : expand_sweep(base, param.substr(0, eq), split(param.substr(eq + 1), ','))) {
            configs.push_back(load_experiment(f));
            if (!out_dir.empty()) configs.back().output_dir = out_dir;
        }
    } catch (const std::exception& e) {
        std::cerr << "config error:\n" << e.what() << "\n";
        return exit_config;
    }

    const int workers = std::max(1, std::min<int>(jobs > 0 ? jobs : std::thread::hardware_concurrency(),
                                                   static_cast<int>(configs.size())));
    std::vector<int> codes(configs.size(), exit_ok);
    std::vector<std::string> logs(configs.size());
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i; (i = next++) < configs.size();) {
                std::ostringstream log;
                try {
                    codes[i] = run_and_write(configs[i], log);
                } catch (const std::exception& e) {
                    log << configs[i].name << ": " << e.what() << "\n";
                    codes[i] = exit_runtime;
                }
                logs[i] = log.str();
            }
        });
    for (auto& t : pool) t.join();
    for (const auto& l : logs) std::cout << l;
    return *std::max_element(codes.begin(), codes.end());
}

int cmd_oracle(const std::string& which, const std::vector<std::string>& args) {
    auto arg = [&](std::size_t i, double fallback) { return i < args.size() ? std::stod(args[i]) : fallback; };
    std::cout.precision(17);
    if (which == "zoh-first-order") {
        const auto z = oracle::first_order_zoh(arg(0, 10.0), arg(1, 0.001));
        std::cout << "pole " << z.pole << "\ngain " << z.gain << "\n";
    } else if (which == "ridge") {
        const int n = static_cast<int>(arg(0, 500)), dim = static_cast<int>(arg(1, 55));
        std::mt19937_64 rng(static_cast<std::uint64_t>(arg(2, 7)));
        std::normal_distribution<double> d;
        Eigen::MatrixXd Phi(n, dim);
        Eigen::VectorXd e(n);
        for (int r = 0; r < n; ++r) {
            for (int c = 0; c < dim; ++c) Phi(r, c) = d(rng);
            e(r) = d(rng);
        }
        std::cout << oracle::ridge_normal_equations(Phi, e, arg(3, 0.01)).transpose() << "\n";
    } else if (which == "zero-weight-radius") {
        const auto model = discretize_zoh(printer_x_axis(), 0.001);
        const BasisSet basis = filter_and_partition(BasisConfig{}, model);
        const auto sys = assemble_closed_loop(DataDrivenLift::identity(HybridConfig{}, DataDrivenLift::Scope::window), basis);
        std::cout << "state_dim " << sys.state_dim() << "\nn_p " << basis.n_p << "\nradius "
                  << oracle::full_closed_loop_radius(sys) << "\n";
    } else if (which == "bisect") {
        if (args.empty()) throw std::invalid_argument("oracle bisect <config> [lo hi]");
        const ExperimentConfig cfg = load_experiment(args[0]);
        if (!cfg.controller.instability.weights) throw std::invalid_argument("config has no instability.weights");
        const auto model = discretize_zoh(cfg.plant.nominal, cfg.plant.Ts);
        const BasisSet basis = filter_and_partition(cfg.basis, model);
        std::cout << "s_star "
                  << oracle::bisect_unit_radius(cfg.hybrid, basis, *cfg.controller.instability.weights, arg(1, 0.0),
                                                arg(2, 4.0))
                  << "\n";
    } else if (which == "crossings") {
        std::cout << oracle::splines_crossing_boundary(BasisConfig{}) << "\n";
    } else if (which == "availability") {
        const auto a = oracle::measurement_availability(static_cast<int>(arg(0, 1)), static_cast<int>(arg(1, 5)));
        for (std::size_t j = 0; j < a.size(); ++j) std::cout << j << ' ' << (a[j] ? "available" : "pending") << "\n";
    } else {
        std::cerr << "unknown oracle '" << which
                  << "' (zoh-first-order, ridge, zero-weight-radius, bisect, crossings, availability)\n";
        return exit_config;
    }
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hybrid filtered-basis-function feedforward tracking experiments"};
    app.require_subcommand(1);

    std::string config, out_dir, param, which;
    int jobs = 0;
    std::vector<std::string> oracle_args;

    auto* run = app.add_subcommand("run", "Run one experiment");
    run->add_option("config", config, "Experiment config file")->required();
    run->add_option("--output-dir", out_dir, "Override output.dir");

    auto* sweep = app.add_subcommand("sweep", "Run one experiment per parameter value, in parallel");
    sweep->add_option("config", config, "Experiment config file")->required();
    sweep->add_option("--param", param, "key=v1,v2,...")->required();
    sweep->add_option("--output-dir", out_dir, "Override output.dir");
    sweep->add_option("--jobs", jobs, "Worker threads (default: hardware concurrency)");

    auto* validate = app.add_subcommand("validate", "Check a config file and list every problem");
    validate->add_option("config", config, "Experiment config file")->required();

    auto* orc = app.add_subcommand("oracle", "Brute-force reference computations");
    orc->add_option("name", which, "zoh-first-order | ridge | zero-weight-radius | bisect | crossings | availability")
        ->required();
    orc->add_option("args", oracle_args, "Positional arguments");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? exit_ok : exit_config;
    }

    try {
        if (*run) return cmd_run(config, out_dir);
        if (*sweep) return cmd_sweep(config, param, out_dir, jobs);
        if (*validate) return cmd_validate(config);
        if (*orc) return cmd_oracle(which, oracle_args);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_runtime;
    }
    return exit_ok;
}
