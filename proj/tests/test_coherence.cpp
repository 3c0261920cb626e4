// Coherence-budget oracles.
//
// The frozen rows below were evaluated with 30-digit arithmetic straight from
// the closed forms: A = -(C chi_m B0/mu0 - S_z g e hbar/(m me)) eta,
// t = n_half pi / sqrt(A), x = 2 eps sqrt(hbar) / (z0 A sqrt(m) t^1.5),
// tol_z = sqrt(x), tol_p = sqrt(1 + x) - 1, for the diamond defaults
// (chi_m = -6.2e-9, B0 = 5.7e-4, eps = 0.1, z0 = 1e-4).

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "sgcat/coherence.hpp"
#include "sgcat/dynamics.hpp"
#include "sgcat/errors.hpp"

#include <cmath>
#include <cstddef>
#include <vector>

using namespace sgcat;

namespace {

const ParticleParams kM17Up = diamond_preset(1e-17).with_spin(+1);
const FieldParams kStiff{5.7e-4, 1e8, 0.0};

struct ExpectedRow {
    double mass;
    int spin;
    double A;      // s^-2
    double tol_z;  // (d eta / eta)_z
    double tol_p;  // (d eta / eta)_p
};

// stage II: eta = 1e6, C = 27.3467, t = 2 pi / sqrt(A)
const std::vector<ExpectedRow> kStageTwo{
    {1e-17, +1, 80.615849, 3.70977e-4, 6.88118e-8},
    {1e-17, -1, 73.196641, 3.75481e-4, 7.04929e-8},
    {1e-16, +1, 77.277205, 2.09721e-4, 2.19915e-8},
    {1e-16, -1, 76.535285, 2.09974e-4, 2.20446e-8},
    {1e-15, +1, 76.943341, 1.17999e-4, 6.96186e-9},
    {1e-15, -1, 76.869149, 1.18013e-4, 6.96354e-9},
};

// stage I: eta = 1e8, C = 2526.82, t = 60 pi / sqrt(A)
const std::vector<ExpectedRow> kStageOne{
    {1e-17, +1, 710980.423483, 9.29664e-6, 4.32138e-11},
    {1e-17, -1, 710238.502677, 9.29785e-6, 4.32250e-11},
    {1e-16, +1, 710646.559121, 5.22819e-6, 1.36670e-11},
    {1e-16, -1, 710572.367040, 5.22826e-6, 1.36674e-11},
    {1e-15, +1, 710613.172684, 2.94005e-6, 4.32193e-12},
    {1e-15, -1, 710605.753476, 2.94005e-6, 4.32194e-12},
};

void check_table(const std::vector<CoherenceBudget>& rows,
                 const std::vector<ExpectedRow>& expect, double half_periods) {
    REQUIRE(rows.size() == expect.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        INFO("row ", i, " mass ", expect[i].mass, " spin ", expect[i].spin);
        CHECK(rows[i].mass == expect[i].mass);
        CHECK(rows[i].spin_z == expect[i].spin);
        CHECK(rows[i].A == doctest::Approx(expect[i].A).epsilon(1e-7));
        CHECK(rows[i].t ==
              doctest::Approx(half_periods * M_PI / std::sqrt(rows[i].A)).epsilon(1e-12));
        CHECK(rows[i].tol_z == doctest::Approx(expect[i].tol_z).epsilon(1e-5));
        CHECK(rows[i].tol_p == doctest::Approx(expect[i].tol_p).epsilon(1e-5));
        CHECK(rows[i].tol_p < rows[i].tol_z);
        CHECK(rows[i].epsilon == 0.1);
        CHECK(rows[i].z0 == 1e-4);
    }
}

}  // namespace

TEST_CASE("stage II budget table") {
    auto rows = budget_table({1e-17, 1e-16, 1e-15}, budget_stage_preset("II"), 0.1);
    check_table(rows, kStageTwo, 2.0);
    CHECK(rows[0].t == doctest::Approx(0.699793).epsilon(1e-5));
    CHECK(rows[1].t == doctest::Approx(0.734403).epsilon(1e-5));
    for (const auto& r : rows) {
        CHECK(r.stage == "II");
        CHECK(r.eta == 1e6);
    }
}

TEST_CASE("stage I budget table") {
    auto rows = budget_table({1e-17, 1e-16, 1e-15}, budget_stage_preset("I"), 0.1);
    check_table(rows, kStageOne, 60.0);
    CHECK(rows[0].t == doctest::Approx(0.223549).epsilon(1e-5));
    CHECK(rows[1].t == doctest::Approx(0.223666).epsilon(1e-5));
    for (const auto& r : rows) {
        CHECK(r.stage == "I");
        CHECK(r.eta == 1e8);
    }
}

TEST_CASE("stage presets") {
    BudgetStagePreset one = budget_stage_preset("I");
    CHECK(one.eta == 1e8);
    CHECK(one.c_correction == doctest::Approx(2526.82));
    CHECK(one.half_periods == 60.0);
    BudgetStagePreset two = budget_stage_preset("II");
    CHECK(two.eta == 1e6);
    CHECK(two.c_correction == doctest::Approx(27.3467));
    CHECK(two.half_periods == 2.0);
    CHECK_THROWS_AS(budget_stage_preset("III"), ConfigError);
}

TEST_CASE("eta tolerance scalings") {
    const double A = 80.615849;
    const double t = 2.0 * M_PI / std::sqrt(A);
    const double base = eta_tolerance_z(1e-17, 1e-4, A, t, 0.1);
    // tol_z ~ sqrt(eps): quadrupling eps doubles the bound
    CHECK(eta_tolerance_z(1e-17, 1e-4, A, t, 0.4) == doctest::Approx(2.0 * base).epsilon(1e-12));
    // eps = 0 closes the bound entirely
    CHECK(eta_tolerance_p(1e-17, 1e-4, A, t, 0.0) == 0.0);
    CHECK(eta_tolerance_z(1e-17, 1e-4, A, t, 0.0) == 0.0);
    // small-x expansion: tol_p ~ tol_z^2 / 2
    const double tp = eta_tolerance_p(1e-17, 1e-4, A, t, 0.1);
    CHECK(tp == doctest::Approx(0.5 * base * base).epsilon(1e-3));
}

TEST_CASE("eta tolerances demand a closed phase") {
    const double A = 80.615849;
    const double t_closed = 2.0 * M_PI / std::sqrt(A);
    CHECK_NOTHROW(eta_tolerance_z(1e-17, 1e-4, A, t_closed, 0.1));
    CHECK_NOTHROW(eta_tolerance_z(1e-17, 1e-4, A, 5.0 * t_closed, 0.1));
    // half a period: sqrt(A) t = pi is not a closure
    CHECK_THROWS_AS(eta_tolerance_z(1e-17, 1e-4, A, 0.5 * t_closed, 0.1), ClosurePhase);
    // detuned by 1e-3 relative: outside the 1e-6 phase gate
    CHECK_THROWS_AS(eta_tolerance_p(1e-17, 1e-4, A, t_closed * 1.001, 0.1), ClosurePhase);
    CHECK_THROWS_AS(eta_tolerance_z(-1e-17, 1e-4, A, t_closed, 0.1), InvalidParameter);
    CHECK_THROWS_AS(eta_tolerance_z(1e-17, 0.0, A, t_closed, 0.1), InvalidParameter);
    CHECK_THROWS_AS(eta_tolerance_z(1e-17, 1e-4, A, t_closed, 1.0), InvalidParameter);
}

TEST_CASE("minimum uncertainty widths") {
    Constants k;
    UncertaintyWidths w = minimum_uncertainty_widths(1e-17, 0.7);
    CHECK(w.width_z == doctest::Approx(1.921068e-9).epsilon(1e-6));
    CHECK(w.width_z * w.width_p == doctest::Approx(0.5 * k.hbar).epsilon(1e-12));
    // free spreading: width_z ~ sqrt(t)
    UncertaintyWidths w4 = minimum_uncertainty_widths(1e-17, 4.0 * 0.7);
    CHECK(w4.width_z == doctest::Approx(2.0 * w.width_z).epsilon(1e-12));
    CHECK_THROWS_AS(minimum_uncertainty_widths(0.0, 0.7), InvalidParameter);
    CHECK_THROWS_AS(minimum_uncertainty_widths(1e-17, -1.0), InvalidParameter);
}

TEST_CASE("spin coherence contrast") {
    CHECK(spin_coherence({0.0, 0.0, 0.0, 1e-9, 1e-26}) == doctest::Approx(1.0).epsilon(1e-14));
    // mismatch of one width costs exp(-1/2)
    CHECK(spin_coherence({0.0, 1e-9, 0.0, 1e-9, 1e-26}) ==
          doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
    // phase flips the sign
    CHECK(spin_coherence({M_PI, 0.0, 0.0, 1e-9, 1e-26}) == doctest::Approx(-1.0).epsilon(1e-12));
    // bounded
    CHECK(std::fabs(spin_coherence({1.3, 3e-9, 2e-26, 1e-9, 1e-26})) <= 1.0);
    CHECK_THROWS_AS(spin_coherence({0.0, 0.0, 0.0, 0.0, 1e-26}), InvalidParameter);
}

TEST_CASE("budget tolerances keep the contrast loss at epsilon^2") {
    // deviations at the epsilon budget in both quadratures: 1 - <sigma_x>
    // stays within epsilon^2 (exp(-x) >= 1 - x)
    const double eps = 0.1;
    UncertaintyWidths w = minimum_uncertainty_widths(1e-17, 0.7);
    const double c = spin_coherence({0.0, eps * w.width_z, eps * w.width_p,
                                     w.width_z, w.width_p});
    CHECK(1.0 - c <= eps * eps + 1e-12);
    CHECK(1.0 - c >= eps * eps * 0.99);
}

TEST_CASE("larmor phase of a parked particle") {
    // eta = 0: uniform field, the phase is g muB B0 t / hbar
    Constants k;
    const FieldParams uniform{5.7e-4, 0.0, 0.0};
    ParticleParams p = kM17Up;
    StepControl ctrl;
    ctrl.sample_dt = 1e-4;
    Trajectory traj = propagate(1e-4, 0.0, p, uniform, 0.01, ctrl);
    const double expect = k.lande_g * k.bohr_magneton * 5.7e-4 * 0.01 / k.hbar;
    CHECK(larmor_phase(traj, uniform) == doctest::Approx(expect).epsilon(1e-10));

    // zero field accumulates no phase
    const FieldParams off{0.0, 0.0, 0.0};
    Trajectory still = propagate(1e-4, 0.0, kM17Up, off, 0.01, ctrl);
    CHECK(larmor_phase(still, off) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("larmor phase quadrature is grid-converged") {
    StepControl coarse;
    coarse.sample_dt = 1e-5;
    StepControl fine;
    fine.sample_dt = 5e-6;
    Trajectory a = propagate(1e-4, 0.0, kM17Up, kStiff, 0.01, coarse);
    Trajectory b = propagate(1e-4, 0.0, kM17Up, kStiff, 0.01, fine);
    const double pa = larmor_phase(a, kStiff);
    const double pb = larmor_phase(b, kStiff);
    CHECK(pa == doctest::Approx(pb).epsilon(1e-6));
    CHECK(pa > 1e6);  // ~1e9 rad over 10 ms at the 5.7 G bias
}

TEST_CASE("heisenberg deltas of identical arms vanish") {
    StepControl ctrl;
    ctrl.sample_dt = 1e-5;
    Trajectory traj = propagate(1e-4, 0.0, kM17Up, kStiff, 5e-3, ctrl);
    HeisenbergDeltas d = heisenberg_deltas(traj, traj, kM17Up);
    CHECK(d.delta_z == doctest::Approx(0.0).epsilon(1e-18));
    CHECK(d.delta_p == doctest::Approx(0.0).epsilon(1e-24));
}

TEST_CASE("heisenberg deltas match end-state differencing") {
    StepControl ctrl;
    ctrl.sample_dt = 1e-5;
    ParticleParams up = diamond_preset(1e-17).with_spin(+1);
    ParticleParams down = diamond_preset(1e-17).with_spin(-1);
    Trajectory a = propagate(1e-4, 0.0, up, kStiff, 5e-3, ctrl);
    Trajectory b = propagate(1e-4, 0.0, down, kStiff, 5e-3, ctrl);

    HeisenbergDeltas d = heisenberg_deltas(a, b, diamond_preset(1e-17));
    const double dz_direct = a.samples.back().z - b.samples.back().z;
    const double dp_direct = 1e-17 * (a.samples.back().v - b.samples.back().v);
    CHECK(d.delta_z == doctest::Approx(dz_direct).epsilon(1e-6));
    CHECK(d.delta_p == doctest::Approx(dp_direct).epsilon(1e-6));
}

TEST_CASE("budget table accepts preset overrides") {
    BudgetStagePreset preset = budget_stage_preset("II");
    preset.z0 = 2e-4;
    auto rows = budget_table({1e-17}, preset, 0.1);
    REQUIRE(rows.size() == 2);
    // tol_z ~ 1/sqrt(z0): doubling z0 shrinks the bound by sqrt(2)
    CHECK(rows[0].tol_z ==
          doctest::Approx(kStageTwo[0].tol_z / std::sqrt(2.0)).epsilon(1e-5));
    CHECK(rows[0].z0 == 2e-4);
}
