#pragma once

#include "sgcat/physconst.hpp"

namespace sgcat {

struct Trajectory;  // dynamics.hpp

/// Nonlinear trap profile B = (B0 + eta z^2 - eta x^2) zhat - 2 eta z x xhat,
/// expressed in the magnetic (potential) coordinate of the current stage.
/// z_origin is the lab-frame position mapped to magnetic z = 0.
struct FieldParams {
    double b0 = 5.7e-4;    ///< T, bias field
    double eta = 0.0;      ///< T/m^2, quartic-trap coefficient
    double z_origin = 0.0; ///< m, lab position of the magnetic origin
};

struct BField {
    double bz;  ///< T
    double bx;  ///< T
};

/// Bz = B0 + eta z^2 - eta x^2, Bx = -2 eta z x.
BField field_vector(double z, double x, const FieldParams& p);

/// d(B^2)/dz on the x = 0 line: 4 eta z (B0 + eta z^2).
double grad_b_squared_z(double z, const FieldParams& p);

/// omega_L = (g e / 2 me) |B(x, z)|.
double larmor_frequency(double z, double x, const FieldParams& p,
                        const Constants& k = Constants{});

/// max over trajectory samples of |d omega_L / dt| / omega_L^2, with the time
/// derivative from finite differences along the trajectory. Values >= the
/// configured threshold (default report level 0.01) indicate the adiabatic
/// condition omega_L_dot << omega_L^2 is at risk.
double adiabaticity_margin(const Trajectory& traj, const FieldParams& p,
                           const Constants& k = Constants{});

}  // namespace sgcat
