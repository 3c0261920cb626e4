#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "sgcat/physconst.hpp"

using namespace sgcat;

TEST_CASE("constants carry CODATA values") {
    Constants k;
    CHECK(k.hbar == doctest::Approx(1.054571817e-34).epsilon(1e-12));
    CHECK(k.electron_charge == doctest::Approx(1.602176634e-19).epsilon(1e-12));
    CHECK(k.electron_mass == doctest::Approx(9.1093837015e-31).epsilon(1e-12));
    CHECK(k.vacuum_permeability == doctest::Approx(1.25663706212e-6).epsilon(1e-12));
    CHECK(k.lande_g == 2.0);
}

TEST_CASE("bohr magneton is e hbar / 2 me") {
    Constants k;
    const double expect = k.electron_charge * k.hbar / (2.0 * k.electron_mass);
    CHECK(k.bohr_magneton == doctest::Approx(expect).epsilon(1e-14));
    // CODATA: 9.274...e-24 J/T
    CHECK(k.bohr_magneton == doctest::Approx(9.2740100783e-24).epsilon(1e-9));
}

TEST_CASE("gyromagnetic ratio g e / 2 me") {
    Constants k;
    // with the Lande factor taken as exactly 2 this is e / me
    CHECK(k.gyromagnetic_ratio() == doctest::Approx(1.75882001e11).epsilon(1e-9));

    Constants custom = k;
    custom.lande_g = 1.0;
    CHECK(custom.gyromagnetic_ratio() == doctest::Approx(k.gyromagnetic_ratio() / 2.0).epsilon(1e-14));
}

TEST_CASE("diamond preset") {
    ParticleParams p = diamond_preset(1e-17);
    CHECK(p.mass == 1e-17);
    CHECK(p.chi_m == doctest::Approx(-6.2e-9).epsilon(1e-12));
    CHECK(p.chi_m < 0.0);  // diamagnetic
    CHECK(p.spin_z == 0);

    ParticleParams up = p.with_spin(+1);
    CHECK(up.spin_z == +1);
    CHECK(p.spin_z == 0);  // with_spin is a copy
    CHECK(up.mass == p.mass);
}

TEST_CASE("micron conversions round-trip") {
    CHECK(m_to_um(1e-4) == doctest::Approx(100.0).epsilon(1e-14));
    CHECK(um_to_m(100.0) == doctest::Approx(1e-4).epsilon(1e-14));
    CHECK(um_to_m(m_to_um(3.7e-6)) == doctest::Approx(3.7e-6).epsilon(1e-14));
}
