#pragma once

#include <string>
#include <vector>

namespace fbf {

/**
 * @brief Desired-trajectory parameters, lengths in mm and times in s.
 *
 * sine-scan: amplitude * sin(2 pi (speed / wavelength) t), faded in over
 *   ramp_time and out over the last ramp_time with a C4 smoothstep.
 * square-loop: one axis of a hollow square traversed repeatedly. Each side is a
 *   jerk-limited rest-to-rest move of length `side` (alternating direction),
 *   followed by a dwell while the other axis moves. `infill_strokes` adds that
 *   many back-and-forth strokes of side * infill_fraction after each loop.
 * custom-samples: values read from `file` (one value per line, or `t,y`
 *   pairs), linearly resampled; single-column files use `sample_rate`.
 */
struct TrajectoryConfig {
    std::string kind = "sine-scan";
    double amplitude = 0.5;
    double speed = 17.5;
    double wavelength = 0.5;
    double ramp_time = 0.25;

    double side = 2.0;
    double v_lim = 60.0;
    double a_lim = 3000.0;
    double j_lim = 6e6;
    double dwell = -1.0;  // negative: dwell equals the move time
    int infill_strokes = 0;
    double infill_fraction = 0.5;

    std::string file;
    double sample_rate = 1000.0;

    void validate() const;
};

/// Samples k * Ts for k = 0 .. llround(duration / Ts) - 1.
std::vector<double> generate_trajectory(const TrajectoryConfig& config, double Ts, double duration);

/// Pad with the final value up to `length` samples.
std::vector<double> extend_with_hold(std::vector<double> y, std::size_t length);

/// Degree-9 smoothstep: 0 and 1 at the ends with four vanishing derivatives.
double smoothstep9(double x);

/**
 * @brief Rest-to-rest jerk-limited move sampled at Ts, starting at 0.
 *
 * Seven-segment profile respecting |v| <= v_lim, |a| <= a_lim, |j| <= j_lim.
 * Returns positions from the first sample until the move completes (inclusive).
 */
std::vector<double> scurve_move(double distance, double v_lim, double a_lim, double j_lim, double Ts);

/// Duration of the move above.
double scurve_duration(double distance, double v_lim, double a_lim, double j_lim);

}  // namespace fbf
