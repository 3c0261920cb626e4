#pragma once

#include "sgcat/dynamics.hpp"

#include <string>
#include <vector>

namespace sgcat {

struct CoherenceInputs {
    double phi = 0.0;      ///< rad, accumulated Larmor phase
    double delta_z = 0.0;  ///< m, position mismatch at closure
    double delta_p = 0.0;  ///< kg m/s, momentum mismatch at closure
    double width_z = 0.0;  ///< m, wavepacket width delta-z
    double width_p = 0.0;  ///< kg m/s, wavepacket width delta-p
};

struct CoherenceBudget {
    double epsilon;  ///< common bound on phase/position/momentum deviations
    double mass;     ///< kg
    int spin_z;
    std::string stage;  ///< "I" or "II"
    double z0;       ///< m, trajectory amplitude
    double A;        ///< s^-2
    double t;        ///< s, closure time used by the table rule
    double eta;      ///< T/m^2
    double tol_z;    ///< (d eta / eta)_z
    double tol_p;    ///< (d eta / eta)_p
};

/// Phi = (g muB / hbar) * integral of Bz(z(t')) dt' along the trajectory.
/// Quadrature: per-segment 5-point Gauss-Legendre on the cubic Hermite
/// interpolant (exact for the degree-6 integrand), Kahan-summed.
double larmor_phase(const Trajectory& traj, const FieldParams& p,
                    const Constants& k = Constants{});

struct HeisenbergDeltas {
    double delta_p;  ///< kg m/s
    double delta_z;  ///< m
};

/// Position/momentum mismatch between arms from the Heisenberg-picture
/// solution functionals: delta_p = [p0 + int m a dt'] difference,
/// delta_z = [z0 + t p0/m + (1/m) int (t - t') m a dt'] difference,
/// evaluated by quadrature along the two trajectories over their common span.
/// Coincides with direct end-state differencing to quadrature accuracy; for
/// closed protocols both reduce to m dv(T3) and dz(T3).
HeisenbergDeltas heisenberg_deltas(const Trajectory& up, const Trajectory& down,
                                   const ParticleParams& particle,
                                   const Constants& k = Constants{});

/// <sigma_x> = cos(phi) exp(-1/2 [(dz/wz)^2 + (dp/wp)^2]), in [-1, 1].
double spin_coherence(const CoherenceInputs& in);

struct UncertaintyWidths {
    double width_z;  ///< m
    double width_p;  ///< kg m/s
};

/// Free-spreading minimum-uncertainty widths at time t:
/// delta_z = sqrt(t hbar / 2m), delta_p = sqrt(m hbar / 2t); product hbar/2.
UncertaintyWidths minimum_uncertainty_widths(double mass, double t,
                                             const Constants& k = Constants{});

/// (d eta/eta)_z = sqrt(2 eps sqrt(hbar) / (z0 A sqrt(m) t^1.5)).
/// Requires sqrt(A) t = 2 n pi (integer n) within 1e-6 relative, else throws
/// ClosurePhase.
double eta_tolerance_z(double mass, double z0, double A, double t, double epsilon,
                       const Constants& k = Constants{});

/// (d eta/eta)_p = sqrt(2 eps sqrt(hbar) / (z0 A sqrt(m) t^1.5) + 1) - 1,
/// same closure-phase precondition.
double eta_tolerance_p(double mass, double z0, double A, double t, double epsilon,
                       const Constants& k = Constants{});

/// Per-stage (eta, C, t-rule) presets used by the budget tables.
struct BudgetStagePreset {
    std::string stage;      ///< "I" or "II"
    double eta;             ///< T/m^2
    double c_correction;
    double z0 = 1e-4;       ///< m
    double half_periods = 2.0;  ///< t = half_periods * pi / sqrt(A); stage I uses 60
    double b0 = 5.7e-4;     ///< T
};

BudgetStagePreset budget_stage_preset(const std::string& stage);

/// Full (mass, spin = +1/-1) budget table for one stage.
std::vector<CoherenceBudget> budget_table(const std::vector<double>& masses,
                                          const BudgetStagePreset& preset,
                                          double epsilon,
                                          const Constants& k = Constants{});

}  // namespace sgcat
