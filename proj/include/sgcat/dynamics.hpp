#pragma once

#include "sgcat/field.hpp"
#include "sgcat/physconst.hpp"

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

namespace sgcat {

struct TrajectorySample {
    double t;  ///< s
    double z;  ///< m, magnetic coordinate
    double v;  ///< m/s
    double a;  ///< m/s^2
};

/// Sampled classical trajectory of one spin arm in the magnetic coordinate of
/// its stage. Timestamps are strictly increasing; the first sample is the
/// stage start. Between samples, z and v are evaluated by cubic Hermite
/// interpolation on the (z, v) pairs.
struct Trajectory {
    int spin_z = 0;
    std::vector<TrajectorySample> samples;
    FieldParams field;
    int stage_id = 0;

    double start_time() const { return samples.front().t; }
    double end_time() const { return samples.back().t; }
    double duration() const { return end_time() - start_time(); }

    /// Index of the sample segment [i, i+1] containing time t.
    std::size_t segment_index(double t) const;
    double z_at(double t) const;
    double v_at(double t) const;
};

/// Linear surrogate z(t) = amplitude * cos(sqrt(A) t + phase).
struct HarmonicModel {
    double A = 0.0;             ///< s^-2, squared angular frequency
    double C_correction = 0.0;  ///< dimensionless
    double amplitude = 0.0;     ///< m
    double phase = 0.0;         ///< rad

    double z_at(double t) const { return amplitude * std::cos(std::sqrt(A) * t + phase); }
    double v_at(double t) const {
        const double w = std::sqrt(A);
        return -amplitude * w * std::sin(w * t + phase);
    }
};

struct StepControl {
    enum class Mode { adaptive, fixed };
    Mode mode = Mode::adaptive;
    double abs_tol = 1e-12;  ///< m, adaptive absolute tolerance
    double rel_tol = 1e-10;  ///< adaptive relative tolerance
    double fixed_dt = 1e-5;  ///< s, fixed-step fallback (bit-stable runs)
    double sample_dt = 0.0;  ///< s, output cadence; 0 records every accepted step
};

/// a(z) = (chi_m/mu0)(B0 + eta z^2) 2 eta z - S_z (g e hbar / m me) eta z.
double acceleration(double z, const ParticleParams& particle, const FieldParams& p,
                    const Constants& k = Constants{});

/// da/dz, used for Hermite interpolation of a(t) (da/dt = v da/dz) and for
/// quadrature of the momentum/position functionals.
double acceleration_dz(double z, const ParticleParams& particle, const FieldParams& p,
                       const Constants& k = Constants{});

/// U(z) = -(chi_m m / 2 mu0)(B0 + eta z^2)^2 + S_z g muB (B0 + eta z^2), J.
double potential_energy(double z, const ParticleParams& particle, const FieldParams& p,
                        const Constants& k = Constants{});

/// Kinetic + potential energy of a state, J.
double total_energy(double z, double v, const ParticleParams& particle, const FieldParams& p,
                    const Constants& k = Constants{});

/// Integrate z'' = acceleration(z) from (z0, v0) over `duration`.
/// Adaptive mode: Dormand-Prince 5(4) with PI step control; fixed mode:
/// classical RK4 with a bit-stable step sequence. Throws IntegrationFailure
/// (carrying the last good state) on step-size underflow.
Trajectory propagate(double z0, double v0, const ParticleParams& particle,
                     const FieldParams& p, double duration,
                     const StepControl& ctrl = StepControl{}, double t_start = 0.0,
                     int stage_id = 0, const Constants& k = Constants{});

/// Re-integrates from the nearest recorded sample at or before t to time t,
/// giving (z, v) to integrator accuracy rather than interpolation accuracy.
std::pair<double, double> state_at(const Trajectory& traj, double t,
                                   const ParticleParams& particle,
                                   const Constants& k = Constants{});

/// A = -(C chi_m B0 / mu0 - S_z g e hbar / (m me)) eta. Throws
/// ModelInapplicable when the bracketed coefficient is non-negative.
double harmonic_A(const ParticleParams& particle, double eta, double C,
                  double b0 = 5.7e-4, const Constants& k = Constants{});

/// Inverse of harmonic_A: the C that produces a given A.
double correction_from_A(double A, const ParticleParams& particle, double eta,
                         double b0 = 5.7e-4, const Constants& k = Constants{});

struct CorrectionFit {
    double C;
    HarmonicModel model;
};

/// Least-squares fit of the correction factor: amplitude and phase are taken
/// from the trajectory's start shape (rest start: phase 0, amplitude z(t0);
/// moving start at z ~ 0: phase -pi/2, amplitude max |z|), then sqrt(A) is
/// fitted over the full trajectory span, seeded from the measured fundamental
/// period and bracketed within half the window's frequency resolution.
/// Throws FitFailure on degenerate (constant) input.
CorrectionFit fit_correction_factor(const Trajectory& exact, double eta,
                                    const ParticleParams& particle,
                                    const Constants& k = Constants{});

/// First full oscillation period measured from the trajectory (time between
/// alternate velocity zero crossings for a rest start, or alternate position
/// zero crossings for a moving start). Throws NotFound if the trajectory is
/// shorter than one period.
double measured_period(const Trajectory& traj);

struct Deviation {
    double max_abs = 0.0;  ///< m
    std::vector<std::pair<double, double>> series;  ///< (t, delta)
};

/// Pointwise difference a - b resampled onto the overlap of their domains.
/// Throws DomainMismatch when the domains are disjoint.
Deviation trajectory_deviation(const Trajectory& a, const Trajectory& b);

/// Samples a harmonic surrogate as a Trajectory (for deviation analysis and
/// CSV export alongside exact trajectories).
Trajectory sample_model(const HarmonicModel& model, double t0, double t1, double dt,
                        int spin_z = 0);

}  // namespace sgcat
