#include "fbf/experiment.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace fbf {

ContinuousTransferFunction printer_x_axis() {
    return {{-62.48, 5.91e4, 3.82e6, 2.96e9, 1.96e11, 2.29e13}, {1, 242.6, 1.36e5, 1.73e7, 4.22e9, 2.75e11, 2.29e13}};
}

ContinuousTransferFunction printer_y_axis() {
    return {{-84.79, 2.87e4, -8.03e6, 6.45e9, 3.86e11, 3.29e14, 3.74e16},
            {1, 211.2, 2.56e5, 4.11e7, 2.07e10, 2.39e12, 5.28e14, 3.74e16}};
}

long ExperimentConfig::steps() const { return std::llround(duration / plant.Ts); }

int ExperimentConfig::batches() const {
    const long N = basis.batch_length;
    return static_cast<int>((steps() + N - 1) / N);
}

namespace {

template <class F>
void capture(std::vector<std::string>& problems, F&& f) {
    try {
        f();
    } catch (const std::exception& e) {
        problems.emplace_back(e.what());
    }
}

}  // namespace

ExperimentConfig load_experiment(const ConfigFile& f) {
    std::vector<std::string> P;
    ExperimentConfig c;

    c.seed = static_cast<std::uint64_t>(f.get_int("experiment.seed", 1, P));
    c.duration = f.get_double("experiment.duration", c.duration, P);
    c.baseline = f.get_bool("experiment.baseline", c.baseline, P);
    c.output_dir = f.get_string("output.dir", c.output_dir, P);
    {
        std::string stem = std::filesystem::path(f.origin()).stem().string();
        if (stem.empty() || stem.front() == '<') stem = c.name;
        c.name = f.get_string("output.name", stem, P);
    }

    // plant
    auto& pl = c.plant;
    const std::string axis = f.get_string("plant.axis", "x", P);
    ContinuousTransferFunction tf = axis == "y" ? printer_y_axis() : printer_x_axis();
    if (axis != "x" && axis != "y") P.push_back("plant.axis: expected x or y, got '" + axis + "'");
    if (f.has("plant.numerator") || f.has("plant.denominator")) {
        const auto num = f.get_array("plant.numerator", tf.numerator, P);
        const auto den = f.get_array("plant.denominator", tf.denominator, P);
        capture(P, [&] { tf = ContinuousTransferFunction(num, den); });
    }
    pl.nominal = tf;
    const std::string kind = f.get_string("plant.kind", "nonlinear", P);
    if (kind == "nonlinear")
        pl.kind = PlantConfig::Kind::nonlinear;
    else if (kind == "hybrid-consistent")
        pl.kind = PlantConfig::Kind::hybrid_consistent;
    else
        P.push_back("plant.kind: expected nonlinear or hybrid-consistent, got '" + kind + "'");
    pl.cubic_stiffness_gain = f.get_double("plant.cubic_stiffness_gain", pl.cubic_stiffness_gain, P);
    pl.amplitude_scale = f.get_double("plant.amplitude_scale", pl.amplitude_scale, P);
    pl.friction_coefficient = f.get_double("plant.friction_coefficient", pl.friction_coefficient, P);
    pl.resonance_detune = f.get_double("plant.resonance_detune", pl.resonance_detune, P);
    pl.noise_sigma = f.get_double("plant.noise_sigma", pl.noise_sigma, P);
    pl.delay_batches = static_cast<int>(f.get_int("plant.delay_batches", pl.delay_batches, P));
    pl.Ts = f.get_double("plant.sample_time", pl.Ts, P);

    auto& b = c.basis;
    b.degree = static_cast<int>(f.get_int("basis.degree", b.degree, P));
    b.knot_spacing = static_cast<int>(f.get_int("basis.knot_spacing", b.knot_spacing, P));
    b.batch_length = static_cast<int>(f.get_int("basis.batch_length", b.batch_length, P));
    b.window_length = static_cast<int>(f.get_int("basis.window_length", 2 * b.batch_length, P));
    pl.batch_length = b.batch_length;

    auto& h = c.hybrid;
    h.q = static_cast<int>(f.get_int("hybrid.q", h.q, P));
    h.p = static_cast<int>(f.get_int("hybrid.p", h.p, P));
    h.lambda = f.get_double("hybrid.lambda", h.lambda, P);
    h.batch_length = b.batch_length;

    auto& cc = c.controller;
    capture(P, [&] { cc.mode = parse_control_mode(f.get_string("controller.mode", "hybrid", P)); });
    cc.warmup_batches = static_cast<int>(f.get_int("controller.warmup_batches", cc.warmup_batches, P));
    cc.learning = f.get_bool("controller.learning", cc.learning, P);
    if (f.has("controller.initial_weights")) {
        const auto w = f.get_array("controller.initial_weights", {}, P);
        cc.initial_weights = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
    }
    capture(P, [&] { cc.mitigation = parse_mitigation(f.get_string("controller.mitigation", "freeze-learning", P)); });
    cc.stability_threshold = f.get_double("controller.stability_threshold", cc.stability_threshold, P);
    cc.monitor = f.get_bool("controller.monitor", cc.monitor, P);
    cc.pinv_tolerance = f.get_double("controller.pinv_tolerance", cc.pinv_tolerance, P);

    auto& inj = cc.instability;
    inj.enabled = f.get_bool("instability.enabled", inj.enabled, P);
    inj.start_batch = static_cast<int>(f.get_int("instability.start_batch", inj.start_batch, P));
    inj.ramp_batches = static_cast<int>(f.get_int("instability.ramp_batches", inj.ramp_batches, P));
    inj.scale_start = f.get_double("instability.scale_start", inj.scale_start, P);
    inj.scale_end = f.get_double("instability.scale_end", inj.scale_end, P);
    if (f.has("instability.weights")) {
        const auto w = f.get_array("instability.weights", {}, P);
        inj.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
    }

    auto& t = c.trajectory;
    t.kind = f.get_string("trajectory.kind", t.kind, P);
    t.amplitude = f.get_double("trajectory.amplitude", t.amplitude, P);
    t.speed = f.get_double("trajectory.speed", t.speed, P);
    t.wavelength = f.get_double("trajectory.wavelength", t.wavelength, P);
    t.ramp_time = f.get_double("trajectory.ramp_time", t.ramp_time, P);
    t.side = f.get_double("trajectory.side", t.side, P);
    t.v_lim = f.get_double("trajectory.v_lim", t.v_lim, P);
    t.a_lim = f.get_double("trajectory.a_lim", t.a_lim, P);
    t.j_lim = f.get_double("trajectory.j_lim", t.j_lim, P);
    t.dwell = f.get_double("trajectory.dwell", t.dwell, P);
    t.infill_strokes = static_cast<int>(f.get_int("trajectory.infill_strokes", t.infill_strokes, P));
    t.infill_fraction = f.get_double("trajectory.infill_fraction", t.infill_fraction, P);
    t.file = f.get_string("trajectory.file", t.file, P);
    if (!t.file.empty() && std::filesystem::path(t.file).is_relative() && f.origin().front() != '<')
        t.file = (std::filesystem::path(f.origin()).parent_path() / t.file).string();
    t.sample_rate = f.get_double("trajectory.sample_rate", t.sample_rate, P);

    for (const auto& k : f.unused_keys()) P.push_back(k + ": unknown key");

    // cross-field validation
    capture(P, [&] { pl.validate(); });
    capture(P, [&] { b.validate(); });
    capture(P, [&] { h.validate(); });
    capture(P, [&] { t.validate(); });
    capture(P, [&] { check_stability(0.0, cc.stability_threshold); });
    if (!(c.duration > 0.0)) P.push_back("experiment.duration must be positive");
    if (cc.warmup_batches < 0) P.push_back("controller.warmup_batches must be >= 0");
    if (cc.mode == ControlMode::hybrid && pl.delay_batches != 1)
        P.push_back("plant.delay_batches must be 1 for the hybrid controller");
    if (c.duration > 0.0 && pl.Ts > 0.0 && b.batch_length > 0 && c.batches() < cc.warmup_batches + 10)
        P.push_back("experiment.duration must cover controller.warmup_batches + 10 batches");
    const long nw = 1 + h.q + h.p;
    if (cc.initial_weights && cc.initial_weights->size() != nw)
        P.push_back("controller.initial_weights must have 1 + q + p entries");
    if (inj.weights && inj.weights->size() != nw) P.push_back("instability.weights must have 1 + q + p entries");
    if (inj.enabled && inj.ramp_batches < 1) P.push_back("instability.ramp_batches must be >= 1");
    if (P.empty())
        capture(P, [&] {
            const auto model = discretize_zoh(pl.nominal, pl.Ts);
            (void)model;
        });
    if (!P.empty()) throw ConfigError(P);
    return c;
}

ExperimentConfig load_experiment(const std::string& path) { return load_experiment(ConfigFile::load(path)); }

SummaryMetrics summarize(const TrackingRecord& r, long post_warmup_start) {
    SummaryMetrics s;
    s.steps = static_cast<long>(r.steps());
    s.post_warmup_start = std::min(post_warmup_start, s.steps);
    double acc = 0.0, acc_post = 0.0;
    for (long k = 0; k < s.steps; ++k) {
        const double e = r.error(k);
        acc += e * e;
        if (k >= s.post_warmup_start) acc_post += e * e;
        s.peak_error = std::max(s.peak_error, std::abs(e));
    }
    s.rms_error_total = s.steps > 0 ? std::sqrt(acc / s.steps) : 0.0;
    const long n_post = s.steps - s.post_warmup_start;
    s.rms_error_post_warmup = n_post > 0 ? std::sqrt(acc_post / n_post) : std::numeric_limits<double>::quiet_NaN();
    s.max_spectral_radius = std::numeric_limits<double>::quiet_NaN();
    for (double v : r.spectral_radius)
        if (!std::isnan(v)) s.max_spectral_radius = std::isnan(s.max_spectral_radius) ? v : std::max(s.max_spectral_radius, v);
    s.alarm_window = r.alarm_window;
    double wsum = 0.0;
    for (double v : r.weight_change_norm) {
        s.weight_change_max = std::max(s.weight_change_max, v);
        wsum += v;
    }
    if (!r.weight_change_norm.empty()) {
        s.weight_change_mean = wsum / r.weight_change_norm.size();
        s.weight_change_final = r.weight_change_norm.back();
    }
    return s;
}

TrackingSetup make_setup(const ExperimentConfig& c) {
    TrackingSetup s;
    s.plant = c.plant;
    s.basis = c.basis;
    s.hybrid = c.hybrid;
    s.controller = c.controller;
    s.seed = c.seed;
    s.batches = c.batches();
    const std::size_t need = static_cast<std::size_t>(s.batches) * c.basis.batch_length + c.basis.window_length;
    s.y_d = extend_with_hold(generate_trajectory(c.trajectory, c.plant.Ts, c.duration), need);
    return s;
}

namespace {

void truncate(TrackingRecord& r, long steps) {
    const std::size_t n = std::min<std::size_t>(r.steps(), static_cast<std::size_t>(steps));
    for (auto* v : {&r.y_d, &r.u, &r.y_true, &r.y_meas, &r.y_hat_pb, &r.y_hat_h}) v->resize(n);
}

void run_into(const ExperimentConfig& c, ExperimentResult& out) {
    const TrackingSetup setup = make_setup(c);
    const long warm = static_cast<long>(c.controller.warmup_batches) * c.basis.batch_length;
    if (c.baseline) {
        TrackingSetup base = setup;
        base.controller.mode = ControlMode::none;
        TrackingRecord rb = run_tracking(base);
        truncate(rb, c.steps());
        out.baseline = summarize(rb, warm);
    }
    try {
        run_tracking(setup, out.record);
    } catch (...) {
        truncate(out.record, c.steps());
        out.summary = summarize(out.record, warm);
        out.summary.completed = false;
        throw;
    }
    truncate(out.record, c.steps());
    out.summary = summarize(out.record, warm);
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
    ExperimentResult out;
    run_into(config, out);
    return out;
}

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_step_csv(std::ostream& os, const TrackingRecord& r, double Ts) {
    os << "step,t,y_d,u,y_true,y_meas,y_hat_pb,y_hat_h,e\n";
    for (std::size_t k = 0; k < r.steps(); ++k) {
        os << k << ',' << format_number(k * Ts) << ',' << format_number(r.y_d[k]) << ',' << format_number(r.u[k])
           << ',' << format_number(r.y_true[k]) << ',' << format_number(r.y_meas[k]) << ','
           << format_number(r.y_hat_pb[k]) << ',' << format_number(r.y_hat_h[k]) << ','
           << format_number(r.error(k)) << '\n';
    }
}

void write_window_csv(std::ostream& os, const TrackingRecord& r) {
    os << "window,spectral_radius,verdict,weight_change_norm\n";
    for (std::size_t j = 0; j < r.spectral_radius.size(); ++j)
        os << j << ',' << format_number(r.spectral_radius[j]) << ',' << r.verdict[j] << ','
           << format_number(j < r.weight_change_norm.size() ? r.weight_change_norm[j]
                                                            : std::numeric_limits<double>::quiet_NaN())
           << '\n';
}

namespace {

nlohmann::json metrics_json(const SummaryMetrics& s) {
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
    nlohmann::json j;
    j["rms_error_total"] = num(s.rms_error_total);
    j["rms_error_post_warmup"] = num(s.rms_error_post_warmup);
    j["peak_error"] = num(s.peak_error);
    j["max_spectral_radius"] = num(s.max_spectral_radius);
    j["alarm_window"] = s.alarm_window ? nlohmann::json(*s.alarm_window) : nlohmann::json(nullptr);
    j["weight_change_norm"] = {{"max", num(s.weight_change_max)},
                               {"mean", num(s.weight_change_mean)},
                               {"final", num(s.weight_change_final)}};
    j["steps"] = s.steps;
    j["post_warmup_start"] = s.post_warmup_start;
    j["completed"] = s.completed;
    j["status"] = s.status;
    return j;
}

}  // namespace

std::string summary_json(const SummaryMetrics& s, const std::optional<SummaryMetrics>& baseline,
                         const ExperimentConfig& c) {
    nlohmann::json j = metrics_json(s);
    j["mode"] = to_string(c.controller.mode);
    j["seed"] = c.seed;
    j["duration"] = c.duration;
    j["sample_time"] = c.plant.Ts;
    if (baseline) j["uncompensated"] = metrics_json(*baseline);
    return j.dump(2) + "\n";
}

int run_and_write(const ExperimentConfig& c, std::ostream& log) {
    ExperimentResult res;
    int code = exit_ok;
    try {
        run_into(c, res);
    } catch (const StabilityHalt& e) {
        res.summary.status = e.what();
        code = exit_halt;
    } catch (const std::exception& e) {
        res.summary.status = e.what();
        code = exit_runtime;
    }
    if (code != exit_ok) log << c.name << ": " << res.summary.status << "\n";

    std::filesystem::create_directories(c.output_dir);
    const auto base = std::filesystem::path(c.output_dir) / c.name;
    {
        std::ofstream f(base.string() + ".steps.csv");
        write_step_csv(f, res.record, c.plant.Ts);
    }
    {
        std::ofstream f(base.string() + ".windows.csv");
        write_window_csv(f, res.record);
    }
    {
        std::ofstream f(base.string() + ".summary.json");
        f << summary_json(res.summary, res.baseline, c);
    }
    log << c.name << ": rms_total=" << format_number(res.summary.rms_error_total)
        << " rms_post_warmup=" << format_number(res.summary.rms_error_post_warmup)
        << " max_radius=" << format_number(res.summary.max_spectral_radius);
    if (res.baseline) log << " uncompensated_rms_post_warmup=" << format_number(res.baseline->rms_error_post_warmup);
    log << "\n";
    return code;
}

std::vector<ConfigFile> expand_sweep(const ConfigFile& base, const std::string& key,
                                     const std::vector<std::string>& values) {
    if (values.empty()) throw ConfigError({"sweep: no values given for '" + key + "'"});
    std::vector<std::string> P;
    const std::string name = base.get_string(
        "output.name", std::filesystem::path(base.origin()).stem().string(), P);
    std::vector<ConfigFile> out;
    for (const auto& v : values) {
        ConfigFile f = base;
        f.set(key, v);
        std::string tag = v;
        for (char& ch : tag)
            if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '.' && ch != '-') ch = '_';
        f.set("output.name", name + "_" + key + "_" + tag);
        out.push_back(std::move(f));
    }
    return out;
}

}  // namespace fbf
