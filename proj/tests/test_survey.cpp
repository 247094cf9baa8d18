#include <gtest/gtest.h>

#include <cmath>

#include "hamiltonia/io.hpp"
#include "hamiltonia/survey.hpp"

using namespace hamiltonia;

TEST(Grid, CubeVolumesCoverTorus) {
    for (int d : {1, 2, 3}) {
        for (int N : {1, 2}) {
            GridSpec grid{N, d};
            double total = 0.0;
            for (int c = 0; c < grid.n_cubes(); ++c) total += grid.cube_volume();
            double torus = 1.0;
            for (int j = 0; j < d; ++j) torus *= 2.0 * M_PI;
            EXPECT_NEAR(total, torus, 1e-12 * torus);
        }
    }
}

TEST(Grid, CubeBoundsMatchDefinition) {
    GridSpec grid{1, 2};
    EXPECT_EQ(grid.n_cubes(), 4);
    bool seen_origin_cube = false;
    for (int c = 0; c < grid.n_cubes(); ++c) {
        const MultiIndex k = grid.cube_index(c);
        Vec lo, hi;
        grid.cube_bounds(k, &lo, &hi);
        for (int j = 0; j < 2; ++j) {
            EXPECT_DOUBLE_EQ(lo[j], M_PI * k[j]);
            EXPECT_DOUBLE_EQ(hi[j], M_PI * (k[j] + 1));
            EXPECT_GE(k[j], -1);
            EXPECT_LE(k[j], 0);
        }
        if (k[0] == 0 && k[1] == 0) seen_origin_cube = true;
    }
    EXPECT_TRUE(seen_origin_cube);
}

TEST(Survey, ZeroCoefficientPotentialIsIntegrableEverywhere) {
    // forced zero-coefficient potential: free flow, tori in every cube and
    // chaos nowhere
    SurveyConfig cfg;
    cfg.L_list = {2};
    cfg.trials = 1;
    cfg.h1 = 0.5;
    cfg.h2 = 1.0;
    cfg.budget.traj_per_cube = 30;
    cfg.seed = {11, 0};
    cfg.jobs = 4;
    GridSpec grid{cfg.N, cfg.d};
    TorusPotential zero(cfg.d, 2);  // all coefficients zero
    for (int c = 0; c < grid.n_cubes(); ++c) {
        const CubeOutcome out = survey_cube(zero, grid, grid.cube_index(c), cfg, {11, 77});
        EXPECT_TRUE(out.tori_found);
        EXPECT_FALSE(out.chaos_found);
        EXPECT_EQ(out.n_chaotic, 0);
    }
}

TEST(Survey, BitwiseDeterministicUnderSeed) {
    SurveyConfig cfg;
    cfg.L_list = {2};
    cfg.trials = 2;
    cfg.budget.traj_per_cube = 12;
    cfg.seed = {123, 9};
    cfg.jobs = 4;  // parallel scheduling must not affect results
    const SurveyResult a = run_survey(cfg);
    const SurveyResult b = run_survey(cfg);
    ASSERT_EQ(a.trials.size(), b.trials.size());
    for (std::size_t i = 0; i < a.trials.size(); ++i) {
        EXPECT_EQ(to_json(a.trials[i], cfg.d).dump(), to_json(b.trials[i], cfg.d).dump());
    }
    ASSERT_EQ(a.summary.size(), b.summary.size());
    for (std::size_t i = 0; i < a.summary.size(); ++i) {
        EXPECT_EQ(a.summary[i].successes, b.summary[i].successes);
        EXPECT_EQ(a.summary[i].mean_chaos_count, b.summary[i].mean_chaos_count);
        EXPECT_EQ(a.summary[i].mean_tori_volume, b.summary[i].mean_tori_volume);
    }
}

TEST(Survey, ConservativeCounting) {
    // an exhausted or empty cube never counts as success
    CubeOutcome c;
    c.budget_exhausted = true;
    c.chaos_found = false;
    c.tori_found = false;
    TrialOutcome t;
    t.cubes = {c};
    t.all_cubes_both = c.chaos_found && c.tori_found;
    EXPECT_FALSE(t.all_cubes_both);
}

// --- rescaling equivalence ---

TEST(Rescaling, ZeroPotentialIsExact) {
    TorusPotential zero(2, 4);
    PhaseState x0;
    x0.q = Vec{0.3, -0.8};
    x0.p = Vec{0.7, 0.2};
    const auto check = rescaling_check(zero, Vec{0.5, 1.0}, M_PI, x0, 10.0, 1e-3);
    EXPECT_LT(check.max_state_deviation, 1e-12);
    EXPECT_LT(check.max_energy_mismatch, 1e-12);
}

TEST(Rescaling, MatchedStepsTrackToRoundoff) {
    TorusPotential pot = sample_torus_potential(2, 6, {606, 0});
    PhaseState x0;
    x0.q = Vec{0.2, -0.4};
    x0.p = Vec{1.1, 0.5};
    const auto check = rescaling_check(pot, Vec{0.9, 0.4}, M_PI, x0, 10.0, 1e-3);
    EXPECT_LT(check.max_state_deviation, 1e-6);
    EXPECT_LT(check.max_energy_mismatch, 1e-10);
}

TEST(Rescaling, ReferenceModeConvergesSecondOrder) {
    // against a refined x-side reference the deviation is the q-side
    // integrator error, which is O(h^2)
    TorusPotential pot = sample_torus_potential(2, 4, {607, 0});
    PhaseState x0;
    x0.q = Vec{0.15, 0.3};
    x0.p = Vec{1.4, 0.6};
    const Vec q0{0.7, -0.2};
    const auto coarse = rescaling_check(pot, q0, M_PI, x0, 4.0, 2e-2, 16);
    const auto fine = rescaling_check(pot, q0, M_PI, x0, 4.0, 1e-2, 16);
    ASSERT_GT(coarse.max_state_deviation, 1e-10);  // well above roundoff
    const double ratio = coarse.max_state_deviation / fine.max_state_deviation;
    EXPECT_GT(ratio, 3.0);
    EXPECT_LT(ratio, 5.5);
}

TEST(Rescaling, RejectsBadLambda) {
    TorusPotential pot(2, 3);
    PhaseState x0;
    x0.q = Vec{0.0, 0.0};
    x0.p = Vec{1.0, 0.0};
    EXPECT_THROW(rescaling_check(pot, Vec{0.0, 0.0}, -1.0, x0, 1.0, 1e-3), std::invalid_argument);
}
