#include "sgcat/coherence.hpp"

#include "sgcat/errors.hpp"

#include "detail.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

namespace sgcat {

namespace {

constexpr double kPi = 3.14159265358979323846;

// 5-point Gauss-Legendre on [-1, 1]; exact through degree 9.
constexpr double kGlNode[5] = {-0.9061798459386640, -0.5384693101056831, 0.0,
                               0.5384693101056831, 0.9061798459386640};
constexpr double kGlWeight[5] = {0.23692688505618909, 0.47862867049936647,
                                 0.56888888888888889, 0.47862867049936647,
                                 0.23692688505618909};

// Cubic Hermite value on a segment of width h, th in [0, 1].
double hermite(double th, double y0, double d0, double y1, double d1, double h) {
    const double t2 = th * th;
    const double t3 = t2 * th;
    return (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + th) * h * d0 +
           (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * h * d1;
}

// Time derivative of the cubic Hermite on the same segment.
double hermite_deriv(double th, double y0, double d0, double y1, double d1, double h) {
    const double t2 = th * th;
    return ((6.0 * t2 - 6.0 * th) * y0 + (3.0 * t2 - 4.0 * th + 1.0) * h * d0 +
            (-6.0 * t2 + 6.0 * th) * y1 + (3.0 * t2 - 2.0 * th) * h * d1) /
           h;
}

// Integrates f over the sub-interval [c0, c1] of one trajectory segment with
// 5-point Gauss-Legendre; f receives the absolute time.
template <typename F>
double gl5(double c0, double c1, F&& f) {
    const double mid = 0.5 * (c0 + c1);
    const double hw = 0.5 * (c1 - c0);
    double acc = 0.0;
    for (int i = 0; i < 5; ++i) acc += kGlWeight[i] * f(mid + hw * kGlNode[i]);
    return acc * hw;
}

void check_span(const Trajectory& traj) {
    if (traj.samples.size() < 2) throw InsufficientData("trajectory needs at least two samples");
}

// Functionals of one arm over [t_lo, t_hi]:
//   p(T)/m = v(t_lo) + int a dt'
//   z(T)   = z(t_lo) + (T - t_lo) v(t_lo) + int (T - t') a(t') dt'
// with a(t') taken as the derivative of the segment's velocity Hermite, so the
// momentum integral telescopes to the recorded velocity differences exactly.
struct ArmEnd {
    double z;
    double v;
};

ArmEnd functional_end(const Trajectory& traj, double t_lo, double t_hi) {
    const double z0 = traj.z_at(t_lo);
    const double v0 = traj.v_at(t_lo);
    detail::KahanSum dv_int;   // int a dt'
    detail::KahanSum dz_int;   // int (t_hi - t') a(t') dt'
    const std::size_t last = traj.samples.size() - 1;
    for (std::size_t i = 0; i < last; ++i) {
        const TrajectorySample& s0 = traj.samples[i];
        const TrajectorySample& s1 = traj.samples[i + 1];
        const double c0 = std::max(s0.t, t_lo);
        const double c1 = std::min(s1.t, t_hi);
        if (c1 <= c0) continue;
        const double h = s1.t - s0.t;
        auto accel = [&](double t) {
            const double th = (t - s0.t) / h;
            return hermite_deriv(th, s0.v, s0.a, s1.v, s1.a, h);
        };
        dv_int.add(gl5(c0, c1, accel));
        dz_int.add(gl5(c0, c1, [&](double t) { return (t_hi - t) * accel(t); }));
    }
    return ArmEnd{z0 + (t_hi - t_lo) * v0 + dz_int.sum, v0 + dv_int.sum};
}

}  // namespace

double larmor_phase(const Trajectory& traj, const FieldParams& p, const Constants& k) {
    check_span(traj);
    detail::KahanSum integral;  // int Bz(z(t')) dt'
    const std::size_t last = traj.samples.size() - 1;
    for (std::size_t i = 0; i < last; ++i) {
        const TrajectorySample& s0 = traj.samples[i];
        const TrajectorySample& s1 = traj.samples[i + 1];
        const double h = s1.t - s0.t;
        // Bz of the cubic z(t) is degree 6; GL5 integrates it exactly.
        integral.add(gl5(s0.t, s1.t, [&](double t) {
            const double th = (t - s0.t) / h;
            const double z = hermite(th, s0.z, s0.v, s1.z, s1.v, h);
            return field_vector(z, 0.0, p).bz;
        }));
    }
    return k.lande_g * k.bohr_magneton / k.hbar * integral.sum;
}

HeisenbergDeltas heisenberg_deltas(const Trajectory& up, const Trajectory& down,
                                   const ParticleParams& particle, const Constants& k) {
    (void)k;
    check_span(up);
    check_span(down);
    if (particle.mass <= 0.0) throw InvalidParameter("mass must be positive");
    const double t_lo = std::max(up.start_time(), down.start_time());
    const double t_hi = std::min(up.end_time(), down.end_time());
    if (!(t_hi > t_lo)) throw DomainMismatch("trajectories share no time span");
    const ArmEnd eu = functional_end(up, t_lo, t_hi);
    const ArmEnd ed = functional_end(down, t_lo, t_hi);
    return HeisenbergDeltas{particle.mass * (eu.v - ed.v), eu.z - ed.z};
}

double spin_coherence(const CoherenceInputs& in) {
    if (in.width_z <= 0.0 || in.width_p <= 0.0)
        throw InvalidParameter("wavepacket widths must be positive");
    const double rz = in.delta_z / in.width_z;
    const double rp = in.delta_p / in.width_p;
    return std::cos(in.phi) * std::exp(-0.5 * (rz * rz + rp * rp));
}

UncertaintyWidths minimum_uncertainty_widths(double mass, double t, const Constants& k) {
    if (mass <= 0.0 || t <= 0.0)
        throw InvalidParameter("minimum_uncertainty_widths: mass and t must be positive");
    return UncertaintyWidths{std::sqrt(t * k.hbar / (2.0 * mass)),
                             std::sqrt(mass * k.hbar / (2.0 * t))};
}

namespace {

// Shared argument of the tolerance formulas: 2 eps sqrt(hbar) / (z0 A sqrt(m) t^1.5).
// Both bounds assume the trap phase closes, sqrt(A) t = 2 n pi.
double tolerance_argument(double mass, double z0, double A, double t, double epsilon,
                          const Constants& k) {
    if (mass <= 0.0 || z0 <= 0.0 || A <= 0.0 || t <= 0.0)
        throw InvalidParameter("eta tolerance: mass, z0, A, t must be positive");
    if (epsilon < 0.0 || epsilon >= 1.0)
        throw InvalidParameter("eta tolerance: epsilon must lie in [0, 1)");
    const double phase = std::sqrt(A) * t;
    const double n = std::round(phase / (2.0 * kPi));
    if (n < 1.0 || std::abs(phase - 2.0 * kPi * n) > 1e-6 * phase) {
        throw ClosurePhase("sqrt(A) t must equal 2 n pi (relative tolerance 1e-6)");
    }
    return 2.0 * epsilon * std::sqrt(k.hbar) / (z0 * A * std::sqrt(mass) * t * std::sqrt(t));
}

}  // namespace

double eta_tolerance_z(double mass, double z0, double A, double t, double epsilon,
                       const Constants& k) {
    return std::sqrt(tolerance_argument(mass, z0, A, t, epsilon, k));
}

double eta_tolerance_p(double mass, double z0, double A, double t, double epsilon,
                       const Constants& k) {
    const double x = tolerance_argument(mass, z0, A, t, epsilon, k);
    // sqrt(1 + x) - 1 without cancellation for small x.
    return x / (std::sqrt(1.0 + x) + 1.0);
}

BudgetStagePreset budget_stage_preset(const std::string& stage) {
    BudgetStagePreset p;
    p.stage = stage;
    if (stage == "I") {
        p.eta = 1e8;
        p.c_correction = 2526.82;
        p.half_periods = 60.0;
    } else if (stage == "II") {
        p.eta = 1e6;
        p.c_correction = 27.3467;
        p.half_periods = 2.0;
    } else {
        throw ConfigError("unknown budget stage '" + stage + "' (expected \"I\" or \"II\")");
    }
    return p;
}

std::vector<CoherenceBudget> budget_table(const std::vector<double>& masses,
                                          const BudgetStagePreset& preset, double epsilon,
                                          const Constants& k) {
    std::vector<CoherenceBudget> rows;
    rows.reserve(2 * masses.size());
    for (double mass : masses) {
        for (int spin : {+1, -1}) {
            const ParticleParams particle = diamond_preset(mass).with_spin(spin);
            const double A = harmonic_A(particle, preset.eta, preset.c_correction, preset.b0, k);
            const double t = preset.half_periods * kPi / std::sqrt(A);
            CoherenceBudget row;
            row.epsilon = epsilon;
            row.mass = mass;
            row.spin_z = spin;
            row.stage = preset.stage;
            row.z0 = preset.z0;
            row.A = A;
            row.t = t;
            row.eta = preset.eta;
            row.tol_z = eta_tolerance_z(mass, preset.z0, A, t, epsilon, k);
            row.tol_p = eta_tolerance_p(mass, preset.z0, A, t, epsilon, k);
            rows.push_back(row);
        }
    }
    return rows;
}

}  // namespace sgcat
