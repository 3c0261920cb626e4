#include "sgcat/physconst.hpp"

namespace sgcat {

ParticleParams diamond_preset(double mass_kg) {
    if (!(mass_kg > 0.0)) {
        throw InvalidParameter("diamond_preset: mass must be positive");
    }
    ParticleParams p;
    p.mass = mass_kg;
    p.chi_m = -6.2e-9;
    p.spin_z = 0;
    p.zero_field_splitting = 0.0;
    return p;
}

}  // namespace sgcat
