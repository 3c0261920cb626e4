#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "sgcat/analysis.hpp"
#include "sgcat/errors.hpp"

#include <cmath>
#include <vector>

using namespace sgcat;

namespace {

// one shared fit across the cases below (the sims dominate the test's cost)
const ScalingFit& default_fit() {
    static const ScalingFit fit = fit_velocity_slope({1e-17, 1e-16, 1e-15});
    return fit;
}

double envelope_at(const ScalingFit& fit, std::size_t mass_index, double t1) {
    for (const auto& [t, dv] : fit.envelopes[mass_index])
        if (std::fabs(t - t1) < 1e-9) return dv;
    FAIL("no envelope point at requested T1");
    return 0.0;
}

}  // namespace

TEST_CASE("velocity-difference coefficient is universal") {
    const ScalingFit& fit = default_fit();
    REQUIRE(fit.per_mass_slopes.size() == 3);
    CHECK(fit.coefficient == doctest::Approx(5.4e-19).epsilon(0.10));
    CHECK(fit.r_squared >= 0.99);

    // slope ~ 1/m: ratios 100 : 10 : 1 across the three masses
    const double s17 = fit.per_mass_slopes[0].second;
    const double s16 = fit.per_mass_slopes[1].second;
    const double s15 = fit.per_mass_slopes[2].second;
    CHECK(s17 / s16 == doctest::Approx(10.0).epsilon(0.05));
    CHECK(s16 / s15 == doctest::Approx(10.0).epsilon(0.05));

    // mass * slope spread within 10% of the mean
    for (const auto& [mass, slope] : fit.per_mass_slopes)
        CHECK(mass * slope == doctest::Approx(fit.coefficient).epsilon(0.10));
}

TEST_CASE("envelopes grow monotonically") {
    const ScalingFit& fit = default_fit();
    REQUIRE(fit.envelopes.size() == 3);
    for (const auto& env : fit.envelopes) {
        REQUIRE(env.size() == StageOneConfig{}.n_times);
        for (std::size_t i = 1; i < env.size(); ++i) {
            CHECK(env[i].first > env[i - 1].first);
            CHECK(env[i].second >= env[i - 1].second);  // running max
        }
        CHECK(env.back().second > 0.0);
    }
}

TEST_CASE("predictor matches the simulated envelope through 1/sqrt(A)") {
    // Both sides map velocity difference to ejection amplitude with the same
    // harmonic factor, so this compares the fitted linear law against the
    // simulated envelope point at T1 = 0.2 s.
    const ScalingFit& fit = default_fit();
    const double sqrt_A = M_PI / 0.4;
    const std::vector<double> masses{1e-17, 1e-16, 1e-15};
    for (std::size_t i = 0; i < masses.size(); ++i) {
        const double predicted = predict_amplitude(masses[i], sqrt_A, 0.2);
        const double simulated = envelope_at(fit, i, 0.2) / sqrt_A;
        INFO("mass ", masses[i]);
        CHECK(simulated == doctest::Approx(predicted).epsilon(0.20));
    }
}

TEST_CASE("amplitude predictor closed form") {
    // dZ0 = (5.4e-13 / m)(1 / sqrt(A)) T1 * 1e-6 m
    const double expect = (5.4e-13 / 1e-17) / (M_PI / 0.4) * 0.2 * 1e-6;
    CHECK(expect == doctest::Approx(1.37e-3).epsilon(0.01));
    CHECK(predict_amplitude(1e-17, M_PI / 0.4, 0.2) ==
          doctest::Approx(expect).epsilon(1e-12));

    // 1/m and 1/sqrt(A) scalings
    CHECK(predict_amplitude(2e-17, M_PI / 0.4, 0.2) ==
          doctest::Approx(0.5 * expect).epsilon(1e-12));
    CHECK(predict_amplitude(1e-17, 0.5 * M_PI / 0.4, 0.2) ==
          doctest::Approx(2.0 * expect).epsilon(1e-12));
}

TEST_CASE("predictor domain") {
    CHECK_THROWS_AS(predict_amplitude(1e-17, M_PI / 0.4, 3.0), DomainMismatch);
    CHECK_NOTHROW(predict_amplitude(1e-17, M_PI / 0.4, 2.5));
    CHECK_THROWS_AS(predict_amplitude(0.0, M_PI / 0.4, 0.2), InvalidParameter);
    CHECK_THROWS_AS(predict_amplitude(1e-17, -1.0, 0.2), InvalidParameter);
}

TEST_CASE("T1 upper bound") {
    CHECK(t1_upper_bound(1e-17) == doctest::Approx(2.6).epsilon(0.01));
    CHECK(t1_upper_bound(1e-16) == doctest::Approx(26.0).epsilon(0.01));
    CHECK(t1_upper_bound(1e-15) == doctest::Approx(260.0).epsilon(0.01));
    // linear in mass
    CHECK(t1_upper_bound(2e-17) == doctest::Approx(2.0 * t1_upper_bound(1e-17)).epsilon(1e-12));
    // and in the velocity budget
    CHECK(t1_upper_bound(1e-17, 0.28) ==
          doctest::Approx(2.0 * t1_upper_bound(1e-17, 0.14)).epsilon(1e-12));
}

TEST_CASE("fit input validation") {
    CHECK_THROWS_AS(fit_velocity_slope({}), InvalidParameter);
    CHECK_THROWS_AS(fit_velocity_slope({-1e-17}), InvalidParameter);
    StageOneConfig bad;
    bad.n_times = 1;
    CHECK_THROWS_AS(fit_velocity_slope({1e-17}, bad), InvalidParameter);
    StageOneConfig negative_dt;
    negative_dt.sample_dt = -1.0;
    CHECK_THROWS_AS(fit_velocity_slope({1e-17}, negative_dt), InvalidParameter);
}

TEST_CASE("single-mass fit on a short grid") {
    StageOneConfig cfg;
    cfg.t_max = 0.1;
    cfg.n_times = 5;
    ScalingFit fit = fit_velocity_slope({1e-17}, cfg);
    REQUIRE(fit.per_mass_slopes.size() == 1);
    CHECK(fit.per_mass_slopes[0].first == 1e-17);
    CHECK(fit.per_mass_slopes[0].second == doctest::Approx(5.4e-2).epsilon(0.20));
    CHECK(fit.r_squared >= 0.99);
}
