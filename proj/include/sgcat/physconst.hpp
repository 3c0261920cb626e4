#pragma once

#include "sgcat/errors.hpp"

namespace sgcat {

/// Physical constants used throughout. All values SI.
///
/// Defaults are CODATA-style and embedded in the binary; every operation that
/// needs them takes a `Constants` argument (defaulted), so a config file can
/// override them for sensitivity studies.
struct Constants {
    double hbar = 1.054571817e-34;                 ///< J*s
    double electron_charge = 1.602176634e-19;      ///< C
    double electron_mass = 9.1093837015e-31;       ///< kg
    double bohr_magneton = default_bohr_magneton();///< J/T, e*hbar/(2*me)
    double vacuum_permeability = 1.25663706212e-6; ///< T*m/A
    double lande_g = 2.0;                          ///< dimensionless

    /// g*e/(2*me): Larmor frequency per unit field, rad/(s*T).
    double gyromagnetic_ratio() const {
        return lande_g * electron_charge / (2.0 * electron_mass);
    }

    static constexpr double default_bohr_magneton() {
        return 1.602176634e-19 * 1.054571817e-34 / (2.0 * 9.1093837015e-31);
    }
};

/// Mass, material and spin parameters of the levitated nano-crystal.
struct ParticleParams {
    double mass = 0.0;   ///< kg
    double chi_m = 0.0;  ///< m^3/kg, mass magnetic susceptibility (< 0, diamagnetic)
    int spin_z = 0;      ///< +1 or -1 once the arm is assigned; 0 = unset
    double zero_field_splitting = 0.0;  ///< rad/s, inert phase bookkeeping only

    ParticleParams with_spin(int s) const {
        ParticleParams p = *this;
        p.spin_z = s;
        return p;
    }
};

/// Diamond nano-crystal defaults: chi_m = -6.2e-9 m^3/kg
/// (volume susceptibility -2.2e-5 over density 3510 kg/m^3).
/// spin_z is left unset until the arm is assigned.
ParticleParams diamond_preset(double mass_kg);

// Human-facing I/O uses um and um/s; internal computation is SI.
constexpr double m_to_um(double m) { return m * 1e6; }
constexpr double um_to_m(double um) { return um * 1e-6; }

}  // namespace sgcat
