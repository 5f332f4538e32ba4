#pragma once

#include "fbf/config.hpp"
#include "fbf/controller.hpp"
#include "fbf/trajectory.hpp"

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace fbf {

/// G_pb for the x and y axes (mm in, mm out).
ContinuousTransferFunction printer_x_axis();
ContinuousTransferFunction printer_y_axis();

struct ExperimentConfig {
    PlantConfig plant;
    BasisConfig basis;
    HybridConfig hybrid;
    ControllerConfig controller;
    TrajectoryConfig trajectory;
    std::uint64_t seed = 1;
    double duration = 10.0;
    bool baseline = false;  // also run the uncompensated input and report it
    std::string output_dir = "results";
    std::string name = "experiment";

    long steps() const;
    int batches() const;
};

/// Builds and validates; throws ConfigError listing every problem.
ExperimentConfig load_experiment(const ConfigFile& file);
ExperimentConfig load_experiment(const std::string& path);

struct SummaryMetrics {
    double rms_error_total = 0.0;
    double rms_error_post_warmup = 0.0;
    double peak_error = 0.0;
    double max_spectral_radius = 0.0;  // NaN if never evaluated
    std::optional<int> alarm_window;
    double weight_change_max = 0.0;
    double weight_change_mean = 0.0;
    double weight_change_final = 0.0;
    long steps = 0;
    long post_warmup_start = 0;
    bool completed = true;
    std::string status = "ok";
};

SummaryMetrics summarize(const TrackingRecord& record, long post_warmup_start);

struct ExperimentResult {
    TrackingRecord record;
    SummaryMetrics summary;
    std::optional<SummaryMetrics> baseline;
};

TrackingSetup make_setup(const ExperimentConfig& config);

/// Runs without touching the filesystem. Exceptions carry on; `partial` keeps what ran.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Fixed 17-significant-digit formatting used by every output file.
std::string format_number(double v);

void write_step_csv(std::ostream& os, const TrackingRecord& record, double Ts);
void write_window_csv(std::ostream& os, const TrackingRecord& record);
std::string summary_json(const SummaryMetrics& summary, const std::optional<SummaryMetrics>& baseline,
                         const ExperimentConfig& config);

enum ExitCode { exit_ok = 0, exit_config = 1, exit_runtime = 2, exit_halt = 3 };

/**
 * @brief Run and write <dir>/<name>.steps.csv, .windows.csv and .summary.json.
 *
 * Partial records are still written when the run aborts or halts.
 */
int run_and_write(const ExperimentConfig& config, std::ostream& log);

/// One config per value of `key`, named <name>_<key>_<value>.
std::vector<ConfigFile> expand_sweep(const ConfigFile& base, const std::string& key,
                                     const std::vector<std::string>& values);

}  // namespace fbf
