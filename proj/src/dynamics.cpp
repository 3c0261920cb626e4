#include "sgcat/dynamics.hpp"

#include "sgcat/errors.hpp"

#include "detail.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

namespace sgcat {

namespace {

constexpr double kPi = 3.14159265358979323846;

void validate_particle(const ParticleParams& particle) {
    if (particle.mass <= 0.0) throw InvalidParameter("particle mass must be positive");
    if (particle.spin_z != 1 && particle.spin_z != -1)
        throw InvalidParameter("spin_z must be +1 or -1 for dynamics");
}

/// g e hbar / (m me): spin force per unit (eta z), m/s^2 per T... kept as the
/// combined coefficient so acceleration() mirrors the closed form.
double spin_coefficient(const ParticleParams& particle, const Constants& k) {
    return k.lande_g * k.electron_charge * k.hbar / (particle.mass * k.electron_mass);
}

struct State {
    double z, v;
};

// Dormand-Prince 5(4) tableau, FSAL.
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                 a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                 a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0,
                 b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;
constexpr double e1 = b1 - 5179.0 / 57600.0, e3 = b3 - 7571.0 / 16695.0,
                 e4 = b4 - 393.0 / 640.0, e5 = b5 + 92097.0 / 339200.0,
                 e6 = b6 - 187.0 / 2100.0, e7 = -1.0 / 40.0;

/// Cubic Hermite value at parameter th in [0, 1] given endpoint values and
/// endpoint derivatives scaled by the interval width h.
double hermite(double th, double y0, double d0, double y1, double d1, double h) {
    const double th2 = th * th;
    const double th3 = th2 * th;
    return (2.0 * th3 - 3.0 * th2 + 1.0) * y0 + (th3 - 2.0 * th2 + th) * h * d0 +
           (-2.0 * th3 + 3.0 * th2) * y1 + (th3 - th2) * h * d1;
}

struct Rhs {
    const ParticleParams& particle;
    const FieldParams& field;
    const Constants& k;

    State operator()(const State& y) const {
        return {y.v, acceleration(y.z, particle, field, k)};
    }
};

/// Hairer-style starting step estimate for an order-5 method.
double initial_step(const Rhs& f, const State& y0, const State& f0, double duration,
                    double atol, double rtol) {
    const auto sc = [&](double y) { return atol + rtol * std::fabs(y); };
    const double d0 = std::max(std::fabs(y0.z) / sc(y0.z), std::fabs(y0.v) / sc(y0.v));
    const double d1 = std::max(std::fabs(f0.z) / sc(y0.z), std::fabs(f0.v) / sc(y0.v));
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, duration);
    const State y1{y0.z + h0 * f0.z, y0.v + h0 * f0.v};
    const State f1 = f(y1);
    const double d2 = std::max(std::fabs(f1.z - f0.z) / sc(y0.z),
                               std::fabs(f1.v - f0.v) / sc(y0.v)) /
                      h0;
    double h1;
    if (std::max(d1, d2) <= 1e-15) {
        h1 = std::max(1e-6, h0 * 1e-3);
    } else {
        h1 = std::pow(0.01 / std::max(d1, d2), 0.2);
    }
    return std::min({100.0 * h0, h1, duration});
}

}  // namespace

double acceleration(double z, const ParticleParams& particle, const FieldParams& p,
                    const Constants& k) {
    validate_particle(particle);
    const double bz = p.b0 + p.eta * z * z;
    return (particle.chi_m / k.vacuum_permeability) * bz * 2.0 * p.eta * z -
           particle.spin_z * spin_coefficient(particle, k) * p.eta * z;
}

double acceleration_dz(double z, const ParticleParams& particle, const FieldParams& p,
                       const Constants& k) {
    validate_particle(particle);
    return (particle.chi_m / k.vacuum_permeability) *
               (2.0 * p.eta * p.b0 + 6.0 * p.eta * p.eta * z * z) -
           particle.spin_z * spin_coefficient(particle, k) * p.eta;
}

double potential_energy(double z, const ParticleParams& particle, const FieldParams& p,
                        const Constants& k) {
    validate_particle(particle);
    const double bz = p.b0 + p.eta * z * z;
    return -(particle.chi_m * particle.mass / (2.0 * k.vacuum_permeability)) * bz * bz +
           particle.spin_z * k.lande_g * k.bohr_magneton * bz;
}

double total_energy(double z, double v, const ParticleParams& particle, const FieldParams& p,
                    const Constants& k) {
    return 0.5 * particle.mass * v * v + potential_energy(z, particle, p, k);
}

std::size_t Trajectory::segment_index(double t) const {
    if (samples.size() < 2) throw InsufficientData("trajectory has fewer than two samples");
    const double slop = 1e-9 * std::max(1.0, duration());
    if (t < start_time() - slop || t > end_time() + slop)
        throw DomainMismatch("time outside trajectory domain");
    auto it = std::upper_bound(samples.begin(), samples.end(), t,
                               [](double tv, const TrajectorySample& s) { return tv < s.t; });
    std::size_t i = static_cast<std::size_t>(it - samples.begin());
    if (i > 0) --i;
    return std::min(i, samples.size() - 2);
}

double Trajectory::z_at(double t) const {
    const std::size_t i = segment_index(t);
    const TrajectorySample& s0 = samples[i];
    const TrajectorySample& s1 = samples[i + 1];
    const double h = s1.t - s0.t;
    const double th = std::clamp((t - s0.t) / h, 0.0, 1.0);
    return hermite(th, s0.z, s0.v, s1.z, s1.v, h);
}

double Trajectory::v_at(double t) const {
    const std::size_t i = segment_index(t);
    const TrajectorySample& s0 = samples[i];
    const TrajectorySample& s1 = samples[i + 1];
    const double h = s1.t - s0.t;
    const double th = std::clamp((t - s0.t) / h, 0.0, 1.0);
    return hermite(th, s0.v, s0.a, s1.v, s1.a, h);
}

namespace {

/// Integrates one adaptive DP45 step sequence from (t0, y) to t_end, invoking
/// on_step(t_prev, y_prev, a_prev, t_new, y_new, a_new) after each accepted
/// step. Returns the final state.
template <typename OnStep>
State integrate_adaptive(const Rhs& f, double t0, State y, double t_end, double atol,
                         double rtol, OnStep on_step) {
    const double duration = t_end - t0;
    State k1 = f(y);
    double h = initial_step(f, y, k1, duration, atol, rtol);
    double t = t0;
    double err_prev = 1.0;
    long long steps = 0;
    constexpr long long kMaxSteps = 100000000;

    while (t < t_end) {
        h = std::min(h, t_end - t);
        if (h < 1e-14 * std::max(1.0, std::fabs(t)))
            throw IntegrationFailure("adaptive step size underflow", t, y.z, y.v);
        if (++steps > kMaxSteps)
            throw IntegrationFailure("adaptive step budget exceeded", t, y.z, y.v);

        const State k2 = f({y.z + h * a21 * k1.z, y.v + h * a21 * k1.v});
        const State k3 = f({y.z + h * (a31 * k1.z + a32 * k2.z),
                            y.v + h * (a31 * k1.v + a32 * k2.v)});
        const State k4 = f({y.z + h * (a41 * k1.z + a42 * k2.z + a43 * k3.z),
                            y.v + h * (a41 * k1.v + a42 * k2.v + a43 * k3.v)});
        const State k5 =
            f({y.z + h * (a51 * k1.z + a52 * k2.z + a53 * k3.z + a54 * k4.z),
               y.v + h * (a51 * k1.v + a52 * k2.v + a53 * k3.v + a54 * k4.v)});
        const State k6 = f(
            {y.z + h * (a61 * k1.z + a62 * k2.z + a63 * k3.z + a64 * k4.z + a65 * k5.z),
             y.v + h * (a61 * k1.v + a62 * k2.v + a63 * k3.v + a64 * k4.v + a65 * k5.v)});
        const State y_new{
            y.z + h * (b1 * k1.z + b3 * k3.z + b4 * k4.z + b5 * k5.z + b6 * k6.z),
            y.v + h * (b1 * k1.v + b3 * k3.v + b4 * k4.v + b5 * k5.v + b6 * k6.v)};
        const State k7 = f(y_new);

        const double ez =
            h * (e1 * k1.z + e3 * k3.z + e4 * k4.z + e5 * k5.z + e6 * k6.z + e7 * k7.z);
        const double ev =
            h * (e1 * k1.v + e3 * k3.v + e4 * k4.v + e5 * k5.v + e6 * k6.v + e7 * k7.v);
        const double sz = atol + rtol * std::max(std::fabs(y.z), std::fabs(y_new.z));
        const double sv = atol + rtol * std::max(std::fabs(y.v), std::fabs(y_new.v));
        const double err = std::sqrt(0.5 * ((ez / sz) * (ez / sz) + (ev / sv) * (ev / sv)));

        if (!std::isfinite(err) || !std::isfinite(y_new.z) || !std::isfinite(y_new.v))
            throw IntegrationFailure("non-finite state during integration", t, y.z, y.v);

        if (err <= 1.0) {
            double t_new = t + h;
            if (t_end - t_new <= 1e-14 * std::max(1.0, std::fabs(t_end))) t_new = t_end;
            on_step(t, y, k1, t_new, y_new, k7);
            t = t_new;
            y = y_new;
            k1 = k7;
            const double e = std::max(err, 1e-10);
            double fac = 0.9 * std::pow(e, -0.7 / 5.0) * std::pow(err_prev, 0.4 / 5.0);
            err_prev = e;
            h *= std::clamp(fac, 0.2, 5.0);
        } else {
            h *= std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9);
        }
    }
    return y;
}

}  // namespace

Trajectory propagate(double z0, double v0, const ParticleParams& particle,
                     const FieldParams& p, double duration, const StepControl& ctrl,
                     double t_start, int stage_id, const Constants& k) {
    if (!(duration > 0.0)) throw InvalidParameter("propagation duration must be positive");
    if (ctrl.abs_tol <= 0.0 || ctrl.rel_tol < 0.0)
        throw InvalidParameter("tolerances must be positive");
    if (ctrl.mode == StepControl::Mode::fixed && ctrl.fixed_dt <= 0.0)
        throw InvalidParameter("fixed_dt must be positive");
    if (ctrl.sample_dt < 0.0) throw InvalidParameter("sample_dt must be non-negative");

    const Rhs f{particle, p, k};
    Trajectory traj;
    traj.spin_z = particle.spin_z;
    traj.field = p;
    traj.stage_id = stage_id;
    if (ctrl.sample_dt > 0.0)
        traj.samples.reserve(static_cast<std::size_t>(duration / ctrl.sample_dt) + 2);

    const double t_end = t_start + duration;
    const double a0 = acceleration(z0, particle, p, k);
    traj.samples.push_back({t_start, z0, v0, a0});

    std::size_t next_sample = 1;
    auto on_step = [&](double ts0, const State& y0, const State& f0, double ts1,
                       const State& y1, const State& f1) {
        if (ctrl.sample_dt <= 0.0) {
            traj.samples.push_back({ts1, y1.z, y1.v, f1.v});
            return;
        }
        const double h = ts1 - ts0;
        while (true) {
            double tg = t_start + static_cast<double>(next_sample) * ctrl.sample_dt;
            if (std::fabs(tg - t_end) <= 1e-9 * ctrl.sample_dt) tg = t_end;
            if (tg > ts1 + 1e-9 * ctrl.sample_dt) break;
            const double th = std::clamp((tg - ts0) / h, 0.0, 1.0);
            const double z = hermite(th, y0.z, y0.v, y1.z, y1.v, h);
            const double v = hermite(th, y0.v, f0.v, y1.v, f1.v, h);
            traj.samples.push_back({tg, z, v, acceleration(z, particle, p, k)});
            ++next_sample;
        }
    };

    State y_final{z0, v0};
    if (ctrl.mode == StepControl::Mode::adaptive) {
        y_final = integrate_adaptive(f, t_start, State{z0, v0}, t_end, ctrl.abs_tol,
                                     ctrl.rel_tol, on_step);
    } else {
        const long long n = std::max<long long>(
            1, static_cast<long long>(std::ceil(duration / ctrl.fixed_dt - 1e-12)));
        const double dt = duration / static_cast<double>(n);
        State y{z0, v0};
        State fy = f(y);
        for (long long i = 0; i < n; ++i) {
            const double t0s = t_start + static_cast<double>(i) * dt;
            double t1s = t_start + static_cast<double>(i + 1) * dt;
            if (i + 1 == n) t1s = t_end;
            const State k1 = fy;
            const State k2 = f({y.z + 0.5 * dt * k1.z, y.v + 0.5 * dt * k1.v});
            const State k3 = f({y.z + 0.5 * dt * k2.z, y.v + 0.5 * dt * k2.v});
            const State k4 = f({y.z + dt * k3.z, y.v + dt * k3.v});
            const State y1{y.z + dt / 6.0 * (k1.z + 2.0 * k2.z + 2.0 * k3.z + k4.z),
                           y.v + dt / 6.0 * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v)};
            if (!std::isfinite(y1.z) || !std::isfinite(y1.v))
                throw IntegrationFailure("non-finite state during integration", t0s, y.z,
                                         y.v);
            const State f1 = f(y1);
            on_step(t0s, y, k1, t1s, y1, f1);
            y = y1;
            fy = f1;
        }
        y_final = y;
    }

    if (t_end - traj.samples.back().t > 1e-12 * std::max(1.0, std::fabs(t_end))) {
        traj.samples.push_back(
            {t_end, y_final.z, y_final.v, acceleration(y_final.z, particle, p, k)});
    }
    return traj;
}

std::pair<double, double> state_at(const Trajectory& traj, double t,
                                   const ParticleParams& particle, const Constants& k) {
    const std::size_t i = traj.segment_index(t);
    const TrajectorySample& s = traj.samples[i];
    // exact sample hits return the recorded state; stage handoffs stay bit-stable
    const TrajectorySample& s1 = traj.samples[i + 1];
    if (t == s1.t) return {s1.z, s1.v};
    const double dt = t - s.t;
    if (dt <= 0.0) return {s.z, s.v};
    // below the adaptive step floor re-integration underflows; this close to a
    // node the Hermite interpolant is exact to machine precision anyway
    if (dt < 1e-13 * std::max(1.0, std::fabs(t))) return {traj.z_at(t), traj.v_at(t)};
    const Rhs f{particle, traj.field, k};
    const State y = integrate_adaptive(f, s.t, State{s.z, s.v}, t, 1e-14, 1e-12,
                                       [](double, const State&, const State&, double,
                                          const State&, const State&) {});
    return {y.z, y.v};
}

double harmonic_A(const ParticleParams& particle, double eta, double C, double b0,
                  const Constants& k) {
    if (particle.mass <= 0.0) throw InvalidParameter("particle mass must be positive");
    if (eta <= 0.0) throw InvalidParameter("eta must be positive");
    const double bracket = C * particle.chi_m * b0 / k.vacuum_permeability -
                           particle.spin_z * spin_coefficient(particle, k);
    const double A = -bracket * eta;
    if (A <= 0.0)
        throw ModelInapplicable("harmonic surrogate undefined: A <= 0 for these parameters");
    return A;
}

double correction_from_A(double A, const ParticleParams& particle, double eta, double b0,
                         const Constants& k) {
    if (particle.mass <= 0.0) throw InvalidParameter("particle mass must be positive");
    if (eta <= 0.0) throw InvalidParameter("eta must be positive");
    if (particle.chi_m == 0.0 || b0 == 0.0)
        throw InvalidParameter("correction factor undefined for chi_m = 0 or b0 = 0");
    return (particle.spin_z * spin_coefficient(particle, k) - A / eta) *
           k.vacuum_permeability / (particle.chi_m * b0);
}

double measured_period(const Trajectory& traj) {
    const auto& s = traj.samples;
    if (s.size() < 3) throw InsufficientData("trajectory too short to measure a period");
    double zmax = 0.0;
    for (const auto& smp : s) zmax = std::max(zmax, std::fabs(smp.z));
    if (zmax <= 0.0) throw NotFound("no oscillation: trajectory is identically zero");

    const bool rest_start = std::fabs(s.front().z) >= 0.5 * zmax;
    const bool origin_start = std::fabs(s.front().z) <= 0.1 * zmax;
    if (!rest_start && !origin_start)
        throw InvalidParameter(
            "period measurement needs a rest start or an origin-crossing start");

    const auto signal = [&](double t) { return rest_start ? traj.v_at(t) : traj.z_at(t); };
    const auto sig_sample = [&](std::size_t i) { return rest_start ? s[i].v : s[i].z; };

    int found = 0;
    double second_crossing = 0.0;
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
        const double f0 = sig_sample(i);
        const double f1 = sig_sample(i + 1);
        double tc;
        if (f0 == 0.0) {
            if (i == 0) continue;  // the start state itself is not a crossing
            tc = s[i].t;
        } else if ((f0 < 0.0) != (f1 < 0.0)) {
            tc = detail::brent_root(signal, s[i].t, s[i + 1].t, f0, f1,
                                    1e-13 * std::max(1.0, s[i + 1].t));
        } else {
            continue;
        }
        if (++found == 2) {
            second_crossing = tc;
            break;
        }
    }
    if (found < 2) throw NotFound("trajectory spans less than one full period");
    return second_crossing - s.front().t;
}

CorrectionFit fit_correction_factor(const Trajectory& exact, double eta,
                                    const ParticleParams& particle, const Constants& k) {
    const auto& s = exact.samples;
    if (s.size() < 16) throw InsufficientData("too few samples for a correction fit");
    double zmax = 0.0;
    for (const auto& smp : s) zmax = std::max(zmax, std::fabs(smp.z));
    if (zmax <= 0.0) throw FitFailure("degenerate trajectory: no displacement");

    const double t0 = s.front().t;
    double amplitude, phase0;
    if (std::fabs(s.front().z) >= 0.5 * zmax) {
        amplitude = std::fabs(s.front().z);
        phase0 = s.front().z > 0.0 ? 0.0 : kPi;
    } else if (std::fabs(s.front().z) <= 0.1 * zmax) {
        amplitude = zmax;
        phase0 = s.front().v >= 0.0 ? -0.5 * kPi : 0.5 * kPi;
    } else {
        throw FitFailure("trajectory start is neither at rest nor at the origin");
    }

    const double period = measured_period(exact);
    const double span = exact.duration();
    const double w_seed = 2.0 * kPi / period;
    const double dw = 0.5 * (2.0 * kPi / span);
    const double w_lo = std::max(w_seed - dw, 1e-6 * w_seed);
    const double w_hi = w_seed + dw;

    constexpr int kFitPoints = 4096;
    const auto objective = [&](double w) {
        detail::KahanSum jsum;
        for (int j = 0; j < kFitPoints; ++j) {
            const double tau = span * static_cast<double>(j) / (kFitPoints - 1);
            const double r = amplitude * std::cos(w * tau + phase0) - exact.z_at(t0 + tau);
            jsum.add(r * r);
        }
        return jsum.sum;
    };

    const double w_hat = detail::brent_minimize(objective, w_lo, w_hi, 1e-12 * w_seed);
    const double A = w_hat * w_hat;
    const double C = correction_from_A(A, particle, eta, exact.field.b0, k);

    HarmonicModel model;
    model.A = A;
    model.C_correction = C;
    model.amplitude = amplitude;
    model.phase = phase0 - w_hat * t0;
    return {C, model};
}

Deviation trajectory_deviation(const Trajectory& a, const Trajectory& b) {
    if (a.samples.size() < 2 || b.samples.size() < 2)
        throw InsufficientData("deviation needs at least two samples per trajectory");
    const double lo = std::max(a.start_time(), b.start_time());
    const double hi = std::min(a.end_time(), b.end_time());
    if (!(hi > lo)) throw DomainMismatch("trajectories do not overlap in time");

    const std::size_t n =
        std::clamp<std::size_t>(std::max(a.samples.size(), b.samples.size()), 64, 200000);
    Deviation dev;
    dev.series.reserve(n);
    for (std::size_t j = 0; j < n; ++j) {
        double t = lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(n - 1);
        t = std::min(t, hi);
        const double d = a.z_at(t) - b.z_at(t);
        dev.series.emplace_back(t, d);
        dev.max_abs = std::max(dev.max_abs, std::fabs(d));
    }
    return dev;
}

Trajectory sample_model(const HarmonicModel& model, double t0, double t1, double dt,
                        int spin_z) {
    if (!(t1 > t0)) throw InvalidParameter("sample window must have positive duration");
    if (!(dt > 0.0)) throw InvalidParameter("sample step must be positive");
    Trajectory traj;
    traj.spin_z = spin_z;
    traj.stage_id = 0;
    const auto n = static_cast<std::size_t>((t1 - t0) / dt + 1e-9) + 1;
    traj.samples.reserve(n + 1);
    for (std::size_t j = 0; j < n; ++j) {
        const double t = t0 + static_cast<double>(j) * dt;
        const double z = model.z_at(t);
        traj.samples.push_back({t, z, model.v_at(t), -model.A * z});
    }
    if (t1 - traj.samples.back().t > 1e-9 * dt) {
        const double z = model.z_at(t1);
        traj.samples.push_back({t1, z, model.v_at(t1), -model.A * z});
    }
    return traj;
}

}  // namespace sgcat
