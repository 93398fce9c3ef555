// test_experiments.cpp — shared numerical experiments

#include "doctest.h"

#include "oqs/errors.hpp"
#include "oqs/experiments.hpp"

#include <cmath>

using namespace oqs;
using namespace oqs::experiments;

TEST_CASE("moment integration sampling and initial moments") {
    ToyParams p;
    InitialStateSpec spec;
    spec.mean_x = 0.5;
    spec.mean_p = -0.2;
    spec.width = 0.8;
    const auto m0 = initial_particle_moments(spec, p.hbar);
    CHECK(m0.var_x() == doctest::Approx(0.64));
    CHECK(m0.var_p() == doctest::Approx(1.0 / (4.0 * 0.64)));
    CHECK(std::abs(m0.cov_xp()) <= 1e-15);

    const auto traj = integrate_moments(Representation::L, p, spec, 1.0, 0.03, 10);
    CHECK(traj.front().t == 0.0);
    CHECK(traj.back().t == doctest::Approx(1.0));
    CHECK(traj.size() == 5); // 34 steps: 0, 10, 20, 30, 34

    spec.transformed = true;
    CHECK_THROWS_AS(initial_particle_moments(spec, p.hbar), InvalidParameter);
    spec.transformed = false;
    CHECK_THROWS_AS(integrate_moments(Representation::L, p, spec, 1.0, 0.1, 0), InvalidParameter);
}

TEST_CASE("moment flow at g = 0 is free spreading in both representations") {
    ToyParams p;
    p.g = 0.0;
    InitialStateSpec spec;
    spec.mean_x = 1.0;
    spec.mean_p = 0.5;
    for (const auto rep : {Representation::L, Representation::Lprime}) {
        const auto m = integrate_moments(rep, p, spec, 3.0, 0.01).back().m;
        CHECK(m.x == doctest::Approx(2.5).epsilon(1e-12));
        CHECK(m.var_x() == doctest::Approx(1.0 + 9.0 / 4.0).epsilon(1e-12));
    }
}

TEST_CASE("master equations are accurate to second order at small coupling") {
    // trace distance to the exact reduced state scales like g⁴ once g t is small
    const GridSpec g1{64, 20.0}, g2{64, 24.0};
    InitialStateSpec spec;
    spec.mean_x = 1.0;
    ToyParams hi, lo;
    hi.g = 0.025;
    lo.g = 0.0125;
    const auto a = master_vs_exact(hi, spec, g1, g2, 5.0, 1e-3);
    const auto b = master_vs_exact(lo, spec, g1, g2, 5.0, 1e-3);
    const double rL = a.td_L / b.td_L, rP = a.td_Lprime / b.td_Lprime;
    CHECK(rL >= 12.0);
    CHECK(rL <= 20.0);
    CHECK(rP >= 12.0);
    CHECK(rP <= 20.0);
}

TEST_CASE("coherence run bookkeeping") {
    ToyParams p;
    InitialStateSpec spec;
    spec.width = 2.0;
    const GridSpec grid{64, 8.0};
    const auto run = coherence_run(Representation::L, Basis::position, p, spec, grid, 0.5, 0.05, {0.25, 0.5});
    CHECK(run.a == 1.0);
    CHECK(run.b == -1.0);
    CHECK(run.times.size() == 11);
    REQUIRE(run.rates.size() == 2);
    CHECK(run.rates[1].t == doctest::Approx(0.5));
    CHECK(std::isfinite(run.half_life));
    CHECK(run.half_life > 0.0);
    // the L′ run in position basis reports no rates
    const auto cross = coherence_run(Representation::Lprime, Basis::position, p, spec, grid, 0.5, 0.05, {0.25});
    CHECK(cross.rates.empty());
    CHECK(decohering_basis(Representation::Lprime) == Basis::momentum);
    CHECK_THROWS_AS(coherence_run(Representation::L, Basis::position, p, spec, grid, 0.5, 0.05, {0.27}), InvalidParameter);
    CHECK_THROWS_AS(coherence_run(Representation::L, Basis::position, p, spec, grid, 0.5, 0.05, {0.75}), InvalidParameter);
}

TEST_CASE("cat decay of well-separated lobes follows the position-diffusion coefficient") {
    kernels::KernelParams kp;
    kp.Omega = 0.1;
    const double sigma0 = std::sqrt(0.5 / kp.Omega);
    const auto c = cat_coherence_decay(kp, {}, 6.0 * sigma0, 80, 0.01);
    CHECK(std::abs(c.rel_error()) < 0.02);
    CHECK(c.window == doctest::Approx(1.0));
    // at strongly overlapping lobes the friction term lowers the instantaneous rate
    const auto o = cat_coherence_decay(kp, {}, 2.0 * sigma0, 60, 0.01);
    CHECK(o.instantaneous < 0.5 * o.predicted);
    CHECK(o.measured == doctest::Approx(o.instantaneous).epsilon(0.01));
}
