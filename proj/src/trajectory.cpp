#include "fbf/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace fbf {

void TrajectoryConfig::validate() const {
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (kind == "sine-scan") {
        if (!positive(speed) || !positive(wavelength))
            throw std::invalid_argument("trajectory: speed and wavelength must be positive");
        if (!std::isfinite(amplitude)) throw std::invalid_argument("trajectory: amplitude must be finite");
        if (!(ramp_time >= 0.0)) throw std::invalid_argument("trajectory: ramp_time must be >= 0");
    } else if (kind == "square-loop") {
        if (!positive(v_lim) || !positive(a_lim) || !positive(j_lim))
            throw std::invalid_argument("trajectory: kinematic limits must be positive and finite");
        if (!positive(side)) throw std::invalid_argument("trajectory: side must be positive");
        if (infill_strokes < 0) throw std::invalid_argument("trajectory: infill_strokes must be >= 0");
        if (infill_strokes > 0 && !(infill_fraction > 0.0 && infill_fraction <= 1.0))
            throw std::invalid_argument("trajectory: infill_fraction must be in (0, 1]");
    } else if (kind == "custom-samples") {
        if (file.empty()) throw std::invalid_argument("trajectory: custom-samples needs a file");
        if (!positive(sample_rate)) throw std::invalid_argument("trajectory: sample_rate must be positive");
    } else {
        throw std::invalid_argument("trajectory: unknown kind '" + kind +
                                    "' (sine-scan, square-loop, custom-samples)");
    }
}

double smoothstep9(double x) {
    x = std::clamp(x, 0.0, 1.0);
    const double x5 = x * x * x * x * x;
    return x5 * (126.0 + x * (-420.0 + x * (540.0 + x * (-315.0 + x * 70.0))));
}

namespace {

struct Segment {
    double jerk, duration;
};

// Jerk segments of one acceleration phase reaching velocity vp from rest.
std::vector<Segment> accel_phase(double vp, double a, double j) {
    if (vp * j >= a * a) return {{j, a / j}, {0.0, vp / a - a / j}, {-j, a / j}};
    const double tj = std::sqrt(vp / j);
    return {{j, tj}, {-j, tj}};
}

double accel_duration(double vp, double a, double j) {
    double t = 0.0;
    for (auto s : accel_phase(vp, a, j)) t += s.duration;
    return t;
}

std::vector<Segment> move_segments(double distance, double v, double a, double j) {
    if (!(v > 0.0 && a > 0.0 && j > 0.0) || !std::isfinite(v * a * j))
        throw std::invalid_argument("scurve: kinematic limits must be positive and finite");
    const double D = std::abs(distance);
    if (D == 0.0) return {};
    // The velocity profile of an acceleration phase is point-symmetric, so it covers vp * T / 2.
    auto dist = [&](double vp) { return vp * accel_duration(vp, a, j); };
    double vp = v, cruise = 0.0;
    if (dist(v) <= D) {
        cruise = (D - dist(v)) / v;
    } else {
        double lo = 0.0, hi = v;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            (dist(mid) < D ? lo : hi) = mid;
        }
        vp = 0.5 * (lo + hi);
    }
    std::vector<Segment> segs = accel_phase(vp, a, j);
    segs.push_back({0.0, cruise});
    for (auto s : accel_phase(vp, a, j)) segs.push_back({-s.jerk, s.duration});
    if (distance < 0.0)
        for (auto& s : segs) s.jerk = -s.jerk;
    return segs;
}

}  // namespace

double scurve_duration(double distance, double v_lim, double a_lim, double j_lim) {
    double t = 0.0;
    for (auto s : move_segments(distance, v_lim, a_lim, j_lim)) t += s.duration;
    return t;
}

std::vector<double> scurve_move(double distance, double v_lim, double a_lim, double j_lim, double Ts) {
    const auto segs = move_segments(distance, v_lim, a_lim, j_lim);
    double total = 0.0;
    for (auto s : segs) total += s.duration;
    const long n = static_cast<long>(std::ceil(total / Ts - 1e-9)) + 1;
    std::vector<double> out(n, distance);
    // Exact cubic integration through the piecewise-constant jerk.
    double t0 = 0.0, p = 0.0, vel = 0.0, acc = 0.0;
    std::size_t seg = 0;
    for (long k = 0; k < n; ++k) {
        const double t = k * Ts;
        while (seg < segs.size() && t >= t0 + segs[seg].duration) {
            const double d = segs[seg].duration, jj = segs[seg].jerk;
            p += vel * d + acc * d * d / 2.0 + jj * d * d * d / 6.0;
            vel += acc * d + jj * d * d / 2.0;
            acc += jj * d;
            t0 += d;
            ++seg;
        }
        if (seg >= segs.size()) break;  // remaining samples hold the end position
        const double tau = t - t0, jj = segs[seg].jerk;
        out[k] = p + vel * tau + acc * tau * tau / 2.0 + jj * tau * tau * tau / 6.0;
    }
    return out;
}

namespace {

std::vector<double> sine_scan(const TrajectoryConfig& c, double Ts, long n) {
    const double f = c.speed / c.wavelength;
    const double t_end = (n - 1) * Ts;
    std::vector<double> y(n);
    for (long k = 0; k < n; ++k) {
        const double t = k * Ts;
        double r = 1.0;
        if (c.ramp_time > 0.0) r = std::min(smoothstep9(t / c.ramp_time), smoothstep9((t_end - t) / c.ramp_time));
        y[k] = c.amplitude * std::sin(2.0 * std::numbers::pi * f * t) * r;
    }
    return y;
}

std::vector<double> square_loop(const TrajectoryConfig& c, double Ts, long n) {
    std::vector<double> y;
    y.reserve(n);
    double pos = 0.0;
    auto move = [&](double d) {
        const auto m = scurve_move(d, c.v_lim, c.a_lim, c.j_lim, Ts);
        for (std::size_t i = 1; i < m.size() && static_cast<long>(y.size()) < n; ++i) y.push_back(pos + m[i]);
        pos += d;
    };
    auto dwell = [&](double d) {
        const double t = c.dwell >= 0.0 ? c.dwell : scurve_duration(d, c.v_lim, c.a_lim, c.j_lim);
        const long steps = std::lround(t / Ts);
        for (long i = 0; i < steps && static_cast<long>(y.size()) < n; ++i) y.push_back(pos);
    };
    y.push_back(0.0);
    while (static_cast<long>(y.size()) < n) {
        const std::size_t before = y.size();
        move(c.side);
        dwell(c.side);
        move(-c.side);
        dwell(c.side);
        for (int s = 0; s < c.infill_strokes; ++s) {
            const double d = c.side * c.infill_fraction;
            move(d);
            move(-d);
        }
        if (y.size() == before) throw std::invalid_argument("trajectory: square loop makes no progress");
    }
    y.resize(n);
    return y;
}

std::vector<double> custom_samples(const TrajectoryConfig& c, double Ts, long n) {
    std::ifstream f(c.file);
    if (!f) throw std::invalid_argument("trajectory: cannot read samples file '" + c.file + "'");
    std::vector<double> t, v;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream in(line);
        double a = 0.0, b = 0.0;
        if (!(in >> a)) {
            if (lineno == 1) continue;  // header
            throw std::invalid_argument("trajectory: bad sample at line " + std::to_string(lineno));
        }
        if (in >> b) {
            t.push_back(a);
            v.push_back(b);
        } else {
            t.push_back(static_cast<double>(v.size()) / c.sample_rate);
            v.push_back(a);
        }
    }
    if (v.empty()) throw std::invalid_argument("trajectory: samples file is empty");
    for (std::size_t i = 1; i < t.size(); ++i)
        if (!(t[i] > t[i - 1])) throw std::invalid_argument("trajectory: sample times must increase");
    std::vector<double> y(n);
    std::size_t idx = 0;
    for (long k = 0; k < n; ++k) {
        const double tk = t.front() + k * Ts;
        while (idx + 1 < t.size() && t[idx + 1] <= tk) ++idx;
        if (idx + 1 >= t.size()) {
            y[k] = v.back();
        } else {
            const double w = (tk - t[idx]) / (t[idx + 1] - t[idx]);
            y[k] = v[idx] + w * (v[idx + 1] - v[idx]);
        }
    }
    return y;
}

}  // namespace

std::vector<double> generate_trajectory(const TrajectoryConfig& config, double Ts, double duration) {
    config.validate();
    if (!(Ts > 0.0) || !(duration > 0.0)) throw std::invalid_argument("trajectory: Ts and duration must be positive");
    const long n = std::llround(duration / Ts);
    if (config.kind == "sine-scan") return sine_scan(config, Ts, n);
    if (config.kind == "square-loop") return square_loop(config, Ts, n);
    return custom_samples(config, Ts, n);
}

std::vector<double> extend_with_hold(std::vector<double> y, std::size_t length) {
    const double last = y.empty() ? 0.0 : y.back();
    if (y.size() < length) y.resize(length, last);
    return y;
}

}  // namespace fbf
