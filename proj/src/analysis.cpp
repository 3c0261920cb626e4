#include "sgcat/analysis.hpp"

#include "sgcat/errors.hpp"

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

namespace sgcat {

namespace {

// Empirical stage-I prefactor: max |dv| ~ (kVelocityPrefactor / m) * T1 * kMicron,
// in m/s with T1 in seconds. Valid in the stiff trap (eta = 1e8 T/m^2).
constexpr double kVelocityPrefactor = 5.4e-13;  // kg
constexpr double kMicron = 1e-6;

struct OriginFit {
    double slope;
    double r_squared;
};

// Least squares through the origin; r^2 in the through-origin convention.
OriginFit fit_through_origin(const std::vector<std::pair<double, double>>& pts) {
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (const auto& [x, y] : pts) {
        sxy += x * y;
        sxx += x * x;
        syy += y * y;
    }
    if (sxx <= 0.0 || syy <= 0.0) throw FitFailure("degenerate velocity-difference envelope");
    const double slope = sxy / sxx;
    double ss_res = 0.0;
    for (const auto& [x, y] : pts) {
        const double r = y - slope * x;
        ss_res += r * r;
    }
    return OriginFit{slope, 1.0 - ss_res / syy};
}

}  // namespace

ScalingFit fit_velocity_slope(const std::vector<double>& masses, const StageOneConfig& cfg,
                              const Constants& k) {
    if (masses.empty()) throw InvalidParameter("fit_velocity_slope: need at least one mass");
    if (cfg.n_times < 2) throw InvalidParameter("fit_velocity_slope: need >= 2 end times");
    if (!(cfg.t_max > 0.0 && cfg.sample_dt > 0.0))
        throw InvalidParameter("fit_velocity_slope: t_max and sample_dt must be positive");

    const FieldParams field{cfg.b0, cfg.eta, 0.0};
    StepControl ctrl;
    ctrl.sample_dt = cfg.sample_dt;

    ScalingFit fit;
    fit.r_squared = 1.0;
    double coefficient_sum = 0.0;
    for (double mass : masses) {
        const ParticleParams base = diamond_preset(mass);
        const Trajectory up = propagate(cfg.z0, 0.0, base.with_spin(+1), field, cfg.t_max, ctrl);
        const Trajectory down =
            propagate(cfg.z0, 0.0, base.with_spin(-1), field, cfg.t_max, ctrl);
        const PairedSeries diff = superposition_series(up, down);

        // Running max |dv| evaluated on the end-time grid.
        std::vector<std::pair<double, double>> envelope;
        envelope.reserve(cfg.n_times);
        std::size_t cursor = 0;
        double running = 0.0;
        for (std::size_t i = 0; i < cfg.n_times; ++i) {
            const double t1 =
                cfg.t_max * static_cast<double>(i + 1) / static_cast<double>(cfg.n_times);
            while (cursor < diff.dv.size() && diff.dv[cursor].t <= t1 * (1.0 + 1e-12)) {
                running = std::max(running, std::abs(diff.dv[cursor].value));
                ++cursor;
            }
            envelope.emplace_back(t1, running);
        }

        const OriginFit of = fit_through_origin(envelope);
        fit.per_mass_slopes.emplace_back(mass, of.slope);
        fit.envelopes.push_back(std::move(envelope));
        fit.r_squared = std::min(fit.r_squared, of.r_squared);
        coefficient_sum += mass * of.slope;
    }
    fit.coefficient = coefficient_sum / static_cast<double>(masses.size());
    (void)k;
    return fit;
}

double predict_amplitude(double mass, double sqrt_A, double t1, double v_max) {
    if (mass <= 0.0 || sqrt_A <= 0.0 || t1 <= 0.0)
        throw InvalidParameter("predict_amplitude: mass, sqrt_A, t1 must be positive");
    if (t1 > t1_upper_bound(mass, v_max))
        throw DomainMismatch("predict_amplitude: T1 beyond the linear-fit validity bound");
    return (kVelocityPrefactor / mass) * (1.0 / sqrt_A) * t1 * kMicron;
}

double t1_upper_bound(double mass, double v_max) {
    if (mass <= 0.0 || v_max <= 0.0)
        throw InvalidParameter("t1_upper_bound: mass and v_max must be positive");
    return v_max * mass / (kVelocityPrefactor * kMicron);
}

}  // namespace sgcat
