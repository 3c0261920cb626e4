#pragma once

#include "sgcat/dynamics.hpp"
#include "sgcat/protocol.hpp"

#include <utility>
#include <vector>

namespace sgcat {

struct ScalingFit {
    double coefficient = 0.0;  ///< kg m/s per second of T1 (mass * slope)
    std::vector<std::pair<double, double>> per_mass_slopes;  ///< (mass kg, slope m/s^2)
    double r_squared = 0.0;  ///< min over the per-mass linear fits
    std::vector<std::vector<std::pair<double, double>>> envelopes;  ///< (T1, max |dv|) per mass
};

struct StageOneConfig {
    double eta = 1e8;    ///< T/m^2 (the fit's validity condition)
    double z0 = 1e-4;    ///< m
    double b0 = 5.7e-4;  ///< T
    double t_max = 0.26; ///< s, largest end time on the grid
    std::size_t n_times = 13;  ///< end-time grid size
    double sample_dt = 1e-3;   ///< s, envelope sampling (1 kHz)
};

/// Runs rest-start spin-arm pairs in the stiff trap for each mass, extracts
/// the running max |dv| envelope on an end-time grid, fits slope per mass
/// through the origin, and reports the universal coefficient mass * slope
/// (averaged over masses). Throws FitFailure on degenerate envelopes.
ScalingFit fit_velocity_slope(const std::vector<double>& masses,
                              const StageOneConfig& cfg = StageOneConfig{},
                              const Constants& k = Constants{});

/// dZ0 = (5.4e-13 / m) (1 / sqrt(A)) (T1 / 1 s) * 1e-6 m. Throws on
/// T1 > t1_upper_bound(mass).
double predict_amplitude(double mass, double sqrt_A, double t1, double v_max = 0.14);

/// T1_max = v_max m / (5.4e-13 * 1e-6) s; v_max defaults to 1.4e5 um/s.
double t1_upper_bound(double mass, double v_max = 0.14);

}  // namespace sgcat
