#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "hamiltonia/elliptic.hpp"
#include "hamiltonia/quadrature.hpp"
#include "hamiltonia/rng.hpp"

using namespace hamiltonia;

TEST(Rng, SeedDeterminismBitwise) {
    RngStream a({42, 7});
    RngStream b({42, 7});
    for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
    RngStream c({42, 7});
    RngStream d({42, 7});
    for (int i = 0; i < 1000; ++i) {
        const double x = c.normal(), y = d.normal();
        ASSERT_EQ(x, y);  // bitwise, not approximate
    }
}

TEST(Rng, StreamsDiffer) {
    RngStream a({42, 0});
    RngStream b({42, 1});
    int same = 0;
    for (int i = 0; i < 64; ++i)
        if (a.next_u64() == b.next_u64()) ++same;
    EXPECT_EQ(same, 0);
}

TEST(Rng, NormalMoments) {
    RngStream rng({123, 0});
    const int n = 200000;
    double s1 = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        s1 += x;
        s2 += x * x;
    }
    EXPECT_NEAR(s1 / n, 0.0, 0.01);
    EXPECT_NEAR(s2 / n, 1.0, 0.02);
}

TEST(Rng, HalfVarianceComplex) {
    RngStream rng({9, 3});
    const int n = 100000;
    double re2 = 0, im2 = 0, cross = 0;
    for (int i = 0; i < n; ++i) {
        const auto z = rng.normal_complex_halfvar();
        re2 += z.real() * z.real();
        im2 += z.imag() * z.imag();
        cross += z.real() * z.imag();
    }
    EXPECT_NEAR(re2 / n, 0.5, 0.01);
    EXPECT_NEAR(im2 / n, 0.5, 0.01);
    EXPECT_NEAR(cross / n, 0.0, 0.01);
}

TEST(Rng, UniformRange) {
    RngStream rng({5, 5});
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        const double v = rng.uniform_pos();
        ASSERT_GT(v, 0.0);
        ASSERT_LE(v, 1.0);
    }
}

// --- elliptic integrals ---

TEST(Elliptic, KnownValues) {
    // K(0) = E(0) = pi/2
    auto [k0, e0] = elliptic_ke(0.0);
    EXPECT_NEAR(k0, M_PI_2, 1e-15);
    EXPECT_NEAR(e0, M_PI_2, 1e-15);
    // K(1/sqrt(2)) = 1.85407467730137191843, E = 1.35064388104767550342
    auto [k, e] = elliptic_ke(std::sqrt(0.5));
    EXPECT_NEAR(k, 1.85407467730137191843, 1e-13);
    EXPECT_NEAR(e, 1.35064388104767550342, 1e-13);
}

TEST(Elliptic, LegendreRelation) {
    // E(k) K(k') + E(k') K(k) - K(k) K(k') = pi/2 for k^2 + k'^2 = 1
    for (double k : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        const double kp = std::sqrt(1.0 - k * k);
        auto [K, E] = elliptic_ke(k);
        auto [Kp, Ep] = elliptic_ke(kp);
        EXPECT_NEAR(E * Kp + Ep * K - K * Kp, M_PI_2, 1e-12);
    }
}

// --- adaptive quadrature ---

TEST(Quadrature, Polynomial) {
    auto q = integrate_adaptive([](double x) { return x * x * x - 2 * x + 1; }, -1.0, 3.0);
    // exact: x^4/4 - x^2 + x over [-1,3] = (81/4 - 9 + 3) - (1/4 - 1 - 1) = 16
    EXPECT_NEAR(q.value, 16.0, 1e-12);
    EXPECT_TRUE(q.converged);
}

TEST(Quadrature, SechCosineClosedForm) {
    // int_-inf^inf cos(a s) sech(s) ds = pi sech(a pi / 2)
    for (double a : {0.5, 1.0, 2.0}) {
        auto q = integrate_adaptive(
            [a](double s) { return std::cos(a * s) / std::cosh(s); }, -40.0, 40.0, 1e-12);
        EXPECT_NEAR(q.value, M_PI / std::cosh(a * M_PI_2), 1e-10);
    }
}

TEST(Quadrature, OddIntegrandVanishes) {
    auto q = integrate_adaptive(
        [](double s) { return std::atan(std::sinh(s)) / std::cosh(s); }, -40.0, 40.0, 1e-12);
    EXPECT_NEAR(q.value, 0.0, 1e-12);
}
