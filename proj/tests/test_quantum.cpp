#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "sgcat/errors.hpp"
#include "sgcat/quantum.hpp"

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

using namespace sgcat;

namespace {

const Constants kConst;
const ParticleParams kM17Up = diamond_preset(1e-17).with_spin(+1);
const FieldParams kFree{5.7e-4, 0.0, 0.0};  // uniform field: V(z) - V(0) = 0
const FieldParams kSoft{5.7e-4, 1e6, 0.0};

// analytic free-particle width: w(t) = w0 sqrt(1 + (hbar t / 2 m w0^2)^2)
double free_width(double w0, double mass, double t) {
    const double r = kConst.hbar * t / (2.0 * mass * w0 * w0);
    return w0 * std::sqrt(1.0 + r * r);
}

double l2_difference(const WavePacketState& a, const WavePacketState& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.amplitudes.size(); ++i)
        acc += std::norm(a.amplitudes[i] - b.amplitudes[i]);
    return std::sqrt(acc * a.grid.dz());
}

}  // namespace

TEST_CASE("grid construction is validated") {
    CHECK_NOTHROW(SpatialGrid::make(-1e-7, 1e-7, 256));
    CHECK_NOTHROW(SpatialGrid::make(-1e-7, 1e-7, 1u << 14));
    CHECK_THROWS_AS(SpatialGrid::make(1e-7, -1e-7, 256), InvalidParameter);
    CHECK_THROWS_AS(SpatialGrid::make(-1e-7, 1e-7, 300), InvalidParameter);
    CHECK_THROWS_AS(SpatialGrid::make(-1e-7, 1e-7, 128), InvalidParameter);

    SpatialGrid g = SpatialGrid::make(-2e-7, 2e-7, 4096);
    CHECK(g.dz() == doctest::Approx(4e-7 / 4096).epsilon(1e-14));
    CHECK(g.z(0) == -2e-7);
    CHECK(g.z(2048) == doctest::Approx(0.0).epsilon(1e-20));

    SpatialGrid d = default_grid(5e-8, 4096);
    CHECK(d.z_min == doctest::Approx(-2e-7));
    CHECK(d.z_max == doctest::Approx(2e-7));
    CHECK_THROWS_AS(default_grid(-1.0), InvalidParameter);
}

TEST_CASE("gaussian initialization") {
    SpatialGrid g = SpatialGrid::make(-2e-7, 2e-7, 4096);
    WavePacketState psi = init_gaussian(g, 5e-8, 5e-9, +1);
    CHECK(psi.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(psi.spin_z == +1);

    Observables obs = observables(psi, kM17Up);
    CHECK(obs.mean_z == doctest::Approx(5e-8).epsilon(1e-9));
    CHECK(obs.width_z == doctest::Approx(5e-9).epsilon(1e-6));
    CHECK(std::fabs(obs.mean_p) < 1e-30);
    // minimum-uncertainty packet
    CHECK(obs.product == doctest::Approx(0.5 * kConst.hbar).epsilon(1e-6));

    CHECK_THROWS_AS(init_gaussian(g, 5e-8, 1e-11, +1), ResolutionError);
    CHECK_THROWS_AS(init_gaussian(g, 3e-7, 5e-9, +1), InvalidParameter);
}

TEST_CASE("free packet spreads analytically") {
    SpatialGrid g = SpatialGrid::make(-2e-7, 2e-7, 4096);
    WavePacketState psi = init_gaussian(g, 0.0, 5e-9, +1);
    const double dt = suggested_dt(g, kM17Up, kFree);
    CHECK(dt > 0.0);

    const double t_end = 0.4;
    const std::size_t n_steps = static_cast<std::size_t>(std::ceil(t_end / dt));
    EvolveResult r = evolve(psi, kM17Up, kFree, t_end / n_steps, n_steps);

    Observables obs = observables(r.state, kM17Up);
    CHECK(obs.width_z == doctest::Approx(free_width(5e-9, 1e-17, t_end)).epsilon(1e-6));
    // momentum width is a constant of free motion
    CHECK(obs.width_p ==
          doctest::Approx(0.5 * kConst.hbar / 5e-9).epsilon(1e-6));
    CHECK(obs.mean_z == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(r.state.norm() == doctest::Approx(1.0).epsilon(1e-10));
    REQUIRE(!r.record.empty());
    CHECK(r.record.back().t == doctest::Approx(t_end).epsilon(1e-9));
}

TEST_CASE("split-step error is second order in dt") {
    SpatialGrid g = SpatialGrid::make(-2e-7, 2e-7, 256);
    WavePacketState psi = init_gaussian(g, 4e-8, 7e-9, +1);
    const double t_end = 0.01;

    auto evolve_with = [&](double dt) {
        const std::size_t n = static_cast<std::size_t>(std::llround(t_end / dt));
        return evolve(psi, kM17Up, kSoft, dt, n).state;
    };
    WavePacketState fine = evolve_with(2.5e-6);
    const double err_h = l2_difference(evolve_with(2e-5), fine);
    const double err_h2 = l2_difference(evolve_with(1e-5), fine);
    // halving dt should cut the defect by ~4 (second-order splitting)
    CHECK(err_h / err_h2 > 2.8);
    CHECK(err_h / err_h2 < 5.5);
}

TEST_CASE("trapped packet obeys the uncertainty principle") {
    SpatialGrid g = SpatialGrid::make(-2e-7, 2e-7, 4096);
    WavePacketState psi = init_gaussian(g, 5e-8, 5e-9, +1);
    const double dt = suggested_dt(g, kM17Up, kSoft);
    EvolveResult r = evolve(psi, kM17Up, kSoft, dt, 4000, EvolveOptions{100});
    REQUIRE(r.record.size() >= 40);
    for (const auto& o : r.record) {
        CHECK(o.product >= 0.5 * kConst.hbar * (1.0 - 1e-9));
        CHECK(o.width_z > 0.0);
        CHECK(o.width_p > 0.0);
    }
}

TEST_CASE("mean position follows Ehrenfest dynamics") {
    SpatialGrid g = SpatialGrid::make(-2e-7, 2e-7, 4096);
    WavePacketState psi = init_gaussian(g, 5e-8, 5e-9, +1);
    const double dt = 1e-5;
    EvolveResult r = evolve(psi, kM17Up, kSoft, dt, 20000, EvolveOptions{500});
    REQUIRE(r.record.size() >= 20);
    // d<z>/dt = <p>/m across recorded steps (central differences)
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < r.record.size(); ++i) {
        const double dzdt = (r.record[i + 1].mean_z - r.record[i - 1].mean_z) /
                            (r.record[i + 1].t - r.record[i - 1].t);
        const double v = r.record[i].mean_p / 1e-17;
        worst = std::max(worst, std::fabs(dzdt - v));
    }
    // velocity scale of the packet center in this trap is ~ 1.5e-7 m/s
    CHECK(worst < 3e-9);
}

TEST_CASE("evolve guards its preconditions") {
    SpatialGrid g = SpatialGrid::make(-2e-7, 2e-7, 256);
    WavePacketState psi = init_gaussian(g, 0.0, 7e-9, +1);
    CHECK_THROWS_AS(evolve(psi, kM17Up, kSoft, -1.0, 10), InvalidParameter);
    CHECK_THROWS_AS(evolve(psi, kM17Up, kSoft, 1.0, 10), InvalidParameter);  // phase >= pi/4
    EvolveOptions bad;
    bad.record_every = 0;
    CHECK_THROWS_AS(evolve(psi, kM17Up, kSoft, 1e-6, 10, bad), InvalidParameter);

    // suggested_dt sits below both phase gates
    const double dt = suggested_dt(g, kM17Up, kSoft);
    CHECK_NOTHROW(evolve(psi, kM17Up, kSoft, dt, 5));
}

TEST_CASE("escaping probability raises BoundaryEscape") {
    // a light particle spreads fast enough to hit the walls mid-run
    ParticleParams light = diamond_preset(1e-25).with_spin(+1);
    SpatialGrid g = SpatialGrid::make(-1e-7, 1e-7, 256);
    WavePacketState psi = init_gaussian(g, 0.0, 1.4e-8, +1);
    const FieldParams off{0.0, 0.0, 0.0};
    const double dt = suggested_dt(g, light, off);
    CHECK_THROWS_AS(evolve(psi, light, off, dt, 60000, EvolveOptions{200}), BoundaryEscape);
}

TEST_CASE("recording cadence includes the final step") {
    SpatialGrid g = SpatialGrid::make(-2e-7, 2e-7, 256);
    WavePacketState psi = init_gaussian(g, 4e-8, 7e-9, +1);
    EvolveResult r = evolve(psi, kM17Up, kSoft, 1e-6, 1001, EvolveOptions{250});
    // records at steps 0, 250, 500, 750, 1000 and the final 1001st
    REQUIRE(r.record.size() == 6);
    CHECK(r.record.front().t == doctest::Approx(0.0));
    CHECK(r.record.back().t == doctest::Approx(1001e-6).epsilon(1e-9));
}
