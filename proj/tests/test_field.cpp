#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "sgcat/dynamics.hpp"
#include "sgcat/field.hpp"

#include <cmath>

using namespace sgcat;

namespace {

const FieldParams kStiff{5.7e-4, 1e8, 0.0};
const FieldParams kSoft{5.7e-4, 1e6, 0.0};

}  // namespace

TEST_CASE("field vector components") {
    // Bz = B0 + eta z^2 - eta x^2, Bx = -2 eta z x
    BField b = field_vector(1e-4, 0.0, kStiff);
    CHECK(b.bz == doctest::Approx(5.7e-4 + 1e8 * 1e-8).epsilon(1e-14));
    CHECK(b.bx == 0.0);

    b = field_vector(1e-4, 2e-5, kStiff);
    CHECK(b.bz == doctest::Approx(5.7e-4 + 1e8 * (1e-8 - 4e-10)).epsilon(1e-14));
    CHECK(b.bx == doctest::Approx(-2.0 * 1e8 * 1e-4 * 2e-5).epsilon(1e-14));

    // on-axis field at the origin is the bias field
    b = field_vector(0.0, 0.0, kSoft);
    CHECK(b.bz == doctest::Approx(5.7e-4).epsilon(1e-14));
    CHECK(b.bx == 0.0);
}

TEST_CASE("field is even in z on the x = 0 line") {
    for (double z : {1e-5, 5e-5, 2e-4, 1e-3}) {
        BField plus = field_vector(z, 0.0, kSoft);
        BField minus = field_vector(-z, 0.0, kSoft);
        CHECK(plus.bz == minus.bz);
        CHECK(plus.bx == 0.0);
        CHECK(minus.bx == 0.0);
    }
}

TEST_CASE("grad of B^2 along z matches finite differences") {
    const double h = 1e-10;
    for (double z : {-2e-4, -1e-5, 1e-5, 1e-4, 5e-4}) {
        auto b2 = [&](double zz) {
            BField b = field_vector(zz, 0.0, kStiff);
            return b.bz * b.bz + b.bx * b.bx;
        };
        const double numeric = (b2(z + h) - b2(z - h)) / (2.0 * h);
        const double analytic = grad_b_squared_z(z, kStiff);
        CHECK(analytic == doctest::Approx(numeric).epsilon(1e-5));
        // closed form: 4 eta z (B0 + eta z^2)
        CHECK(analytic ==
              doctest::Approx(4.0 * kStiff.eta * z * (kStiff.b0 + kStiff.eta * z * z))
                  .epsilon(1e-12));
    }
}

TEST_CASE("larmor frequency is gamma |B|") {
    Constants k;
    const double w0 = larmor_frequency(0.0, 0.0, kSoft, k);
    CHECK(w0 == doctest::Approx(k.gyromagnetic_ratio() * 5.7e-4).epsilon(1e-12));
    // ~1e8 rad/s at the 5.7 G bias point
    CHECK(w0 == doctest::Approx(1.0025e8).epsilon(1e-3));

    // off axis the transverse component enters through the modulus
    const double z = 1e-4, x = 5e-5;
    BField b = field_vector(z, x, kSoft);
    CHECK(larmor_frequency(z, x, kSoft, k) ==
          doctest::Approx(k.gyromagnetic_ratio() * std::hypot(b.bz, b.bx)).epsilon(1e-12));
}

TEST_CASE("adiabaticity margin small for trapped motion") {
    ParticleParams p = diamond_preset(1e-17).with_spin(+1);
    StepControl ctrl;
    ctrl.sample_dt = 1e-5;
    Trajectory traj = propagate(1e-4, 0.0, p, kStiff, 0.01, ctrl);
    const double margin = adiabaticity_margin(traj, kStiff);
    CHECK(margin > 0.0);
    CHECK(margin < 0.01);
}

TEST_CASE("adiabaticity margin is zero for a parked particle") {
    // z = 0 at rest: the field along the path never changes.
    Trajectory traj;
    traj.spin_z = +1;
    traj.field = kSoft;
    for (int i = 0; i <= 10; ++i)
        traj.samples.push_back({1e-3 * i, 0.0, 0.0, 0.0});
    CHECK(adiabaticity_margin(traj, kSoft) == doctest::Approx(0.0).epsilon(1e-15));
}
