#include <gtest/gtest.h>

#include <cmath>

#include "hamiltonia/dynamics.hpp"
#include "hamiltonia/model.hpp"
#include "hamiltonia/rng.hpp"

using namespace hamiltonia;

TEST(Weta, GlobalMinimumAtOrigin) {
    RotorPendulumPotential w(3, 0.0);
    const Vec x{0.0, 0.0, 0.0};
    EXPECT_DOUBLE_EQ(w.value(x), 0.0);
    Vec g(3);
    w.gradient(x, g);
    for (int j = 0; j < 3; ++j) EXPECT_DOUBLE_EQ(g[j], 0.0);
}

TEST(Weta, HyperbolicEquilibriumEnergy) {
    RotorPendulumPotential w(2, 0.0);
    EXPECT_DOUBLE_EQ(w.value(Vec{0.0, M_PI}), 2.0);
}

TEST(Weta, FiniteDifferenceDerivatives) {
    RotorPendulumPotential w(3, 0.07);
    RngStream rng({64, 0});
    const double h = 1e-5;
    for (int trial = 0; trial < 5; ++trial) {
        Vec x(3);
        for (int j = 0; j < 3; ++j) x[j] = rng.uniform(-3.0, 3.0);
        Vec g(3);
        w.gradient(x, g);
        Mat hess(3, 3);
        w.hessian(x, hess);
        for (int j = 0; j < 3; ++j) {
            Vec xp = x, xm = x;
            xp[j] += h;
            xm[j] -= h;
            const double fd = (w.value(xp) - w.value(xm)) / (2 * h);
            EXPECT_NEAR(g[j], fd, 1e-5 * std::max(1.0, std::abs(fd)));
            for (int k = 0; k < 3; ++k) {
                Vec gp(3), gm(3);
                w.gradient(xp, gp);
                w.gradient(xm, gm);
                const double fd2 = (gp[k] - gm[k]) / (2 * h);
                EXPECT_NEAR(hess(k, j), fd2, 1e-5 * std::max(1.0, std::abs(fd2)));
            }
        }
    }
}

TEST(Weta, PendulumSaddleCurvature) {
    // single-pendulum linearization at (P, x) = (0, pi) has V'' = -1,
    // hence flow eigenvalues +-1
    RotorPendulumPotential w(2, 0.0);
    Mat h(2, 2);
    w.hessian(Vec{0.0, M_PI}, h);
    EXPECT_DOUBLE_EQ(h(1, 1), -1.0);
}

// --- separatrix ---

TEST(Separatrix, Parametrization) {
    double p, x;
    separatrix(0.0, +1, &p, &x);
    EXPECT_DOUBLE_EQ(p, 2.0);
    EXPECT_DOUBLE_EQ(x, 0.0);

    // asymptotics: pi - x(t) ~ 4 e^{-t} and P(t) ~ 4 e^{-t} as t -> +inf
    separatrix(10.0, +1, &p, &x);
    EXPECT_NEAR(M_PI - x, 4.0 * std::exp(-10.0), 0.05 * 4.0 * std::exp(-10.0));
    EXPECT_NEAR(p, 0.0, 1e-3);
    separatrix(-10.0, +1, &p, &x);
    EXPECT_NEAR(x, -M_PI, 2e-4);

    separatrix(1.3, -1, &p, &x);
    double pp, xp;
    separatrix(1.3, +1, &pp, &xp);
    EXPECT_DOUBLE_EQ(p, -pp);
    EXPECT_DOUBLE_EQ(x, -xp);
}

TEST(Separatrix, EnergyConservation) {
    // pendulum energy P^2/2 + 1 - cos x must equal 2 along the curve
    for (int i = 0; i < 20; ++i) {
        const double t = -5.0 + 10.0 * i / 19.0;
        double p, x;
        separatrix(t, +1, &p, &x);
        EXPECT_NEAR(0.5 * p * p + 1.0 - std::cos(x), 2.0, 1e-12);
    }
}

TEST(Separatrix, SolvesPendulumEquations) {
    // dx/dt = P, dP/dt = -sin x along the parametrization
    const double h = 1e-6;
    for (double t : {-2.0, -0.5, 0.0, 1.0, 3.0}) {
        double p0, x0, pp, xp, pm, xm;
        separatrix(t, +1, &p0, &x0);
        separatrix(t + h, +1, &pp, &xp);
        separatrix(t - h, +1, &pm, &xm);
        EXPECT_NEAR((xp - xm) / (2 * h), p0, 1e-8);
        EXPECT_NEAR((pp - pm) / (2 * h), -std::sin(x0), 1e-8);
    }
}

// --- Melnikov gradient ---

TEST(Melnikov, ClosedFormReferenceValues) {
    EXPECT_DOUBLE_EQ(melnikov_grad_closed(1.0, 0.7, 0.7, +1), 0.0);
    // I0 = 1/2, theta - tau = pi/2: value is 2 pi sech(pi/2)
    const double expected = 2.0 * M_PI / std::cosh(M_PI_2);
    EXPECT_NEAR(melnikov_grad_closed(0.5, M_PI_2, 0.0, +1), expected, 1e-14);
    EXPECT_NEAR(expected, 2.5041, 1e-4);
    // odd in the branch sign
    EXPECT_DOUBLE_EQ(melnikov_grad_closed(0.5, M_PI_2, 0.0, -1), -expected);
}

TEST(Melnikov, QuadratureMatchesClosedForm) {
    RngStream rng({2718, 0});
    for (int i = 0; i < 50; ++i) {
        const double I0 = rng.uniform(0.1, 4.0);
        const double theta = rng.uniform(0.0, 2.0 * M_PI);
        const double tau = rng.uniform(0.0, 2.0 * M_PI);
        const int sign = rng.uniform() < 0.5 ? +1 : -1;
        const auto q = melnikov_grad_quadrature(I0, theta, tau, sign, 40.0, 1e-10);
        EXPECT_TRUE(q.converged);
        EXPECT_NEAR(q.value, melnikov_grad_closed(I0, theta, tau, sign), 1e-6);
    }
}

TEST(Melnikov, QuadratureVanishesAtCriticalPhase) {
    const auto q = melnikov_grad_quadrature(1.3, 0.9, 0.9, +1, 40.0, 1e-10);
    EXPECT_NEAR(q.value, 0.0, 1e-10);
}

TEST(Melnikov, QuadratureRejectsBadArguments) {
    EXPECT_THROW(melnikov_grad_quadrature(1.0, 0, 0, +1, 10.0), std::invalid_argument);
    EXPECT_THROW(melnikov_grad_quadrature(-1.0, 0, 0, +1), std::invalid_argument);
}

TEST(Melnikov, CriticalPointsAndHessian) {
    const auto pts = melnikov_critical_points(0.5, 0.0, 2, +1);
    ASSERT_EQ(pts.size(), 2u);
    EXPECT_DOUBLE_EQ(pts[0].tau[0], 0.0);
    EXPECT_DOUBLE_EQ(pts[1].tau[0], M_PI);
    // determinant sign alternates with k parity
    EXPECT_LT(pts[0].hessian_det, 0.0);
    EXPECT_GT(pts[1].hessian_det, 0.0);
    for (const auto& p : pts) EXPECT_GT(std::abs(p.hessian_det), 1e-6);

    const auto pts3 = melnikov_critical_points(0.5, 0.3, 3, +1);
    EXPECT_EQ(pts3.size(), 4u);
}

TEST(Melnikov, NewtonOnQuadratureFindsCriticalPoints) {
    const double I0 = 0.8, theta = 1.1;
    const auto pts = melnikov_critical_points(I0, theta, 2, +1);
    for (const auto& p : pts) {
        double tau = p.tau[0] + 0.3;  // basin of convergence
        for (int it = 0; it < 30; ++it) {
            const double g = melnikov_grad_quadrature(I0, theta, tau, +1, 40.0, 1e-12).value;
            const double h = 1e-6;
            const double gp = melnikov_grad_quadrature(I0, theta, tau + h, +1, 40.0, 1e-12).value;
            const double gm = melnikov_grad_quadrature(I0, theta, tau - h, +1, 40.0, 1e-12).value;
            const double dg = (gp - gm) / (2 * h);
            const double step = g / dg;
            tau -= step;
            if (std::abs(step) < 1e-12) break;
        }
        EXPECT_NEAR(tau, p.tau[0], 1e-6);
    }
}

// --- pendulum action-angle ---

TEST(PendulumAction, SmallOscillationLimit) {
    const auto pa = pendulum_action(1e-6);
    EXPECT_NEAR(pa.frequency, 1.0, 1e-5);
    EXPECT_NEAR(pa.action, 1e-6, 1e-8);  // harmonic limit I = E
    EXPECT_NEAR(pa.f_second, -0.125, 1e-3);  // quartic correction -1/8
}

TEST(PendulumAction, FrequencyMatchesDirectPeriodIntegration) {
    // oracle: integrate the pendulum and time successive upward crossings
    const auto pa = pendulum_action(1.0);
    PendulumPotential pend;
    // libration at E = 1 starting at x = 0: P = sqrt(2 E)
    PhaseState s;
    s.q = Vec{0.0};
    s.p = Vec{std::sqrt(2.0)};
    SectionSpec sec = SectionSpec::coordinate(1, 0, 0.0, +1);
    const auto crossings = poincare_section(s, pend, sec, 3, 1e-3, Scheme::Composed4, 100.0);
    ASSERT_GE(crossings.points.size(), 2u);
    const double period = crossings.points[1].t - crossings.points[0].t;
    EXPECT_NEAR(2.0 * M_PI / period, pa.frequency, 1e-8);
}

TEST(PendulumAction, MonotoneFrequencyAndNegativeTwist) {
    double prev_omega = 1.0;
    for (double E : {0.2, 0.5, 1.0, 1.5, 1.9}) {
        const auto pa = pendulum_action(E);
        EXPECT_GT(pa.frequency, 0.0);
        EXPECT_LT(pa.frequency, prev_omega);
        EXPECT_LT(pa.f_second, 0.0);
        prev_omega = pa.frequency;
    }
}

TEST(PendulumAction, TwistMatchesFiniteDifferenceOfFrequency) {
    for (double E : {0.5, 1.0, 1.6}) {
        const auto pa = pendulum_action(E);
        const double dI = 1e-5;
        const auto plus = pendulum_action_from_action(pa.action + dI);
        const auto minus = pendulum_action_from_action(pa.action - dI);
        const double fd = (plus.frequency - minus.frequency) / (2 * dI);
        EXPECT_NEAR(pa.f_second, fd, 1e-4 * std::abs(fd));
    }
}

TEST(PendulumAction, ActionEnergyRoundTrip) {
    for (double E : {0.1, 0.7, 1.4, 1.95}) {
        const auto pa = pendulum_action(E);
        const auto back = pendulum_action_from_action(pa.action);
        EXPECT_NEAR(back.energy, E, 1e-10);
    }
}

TEST(PendulumAction, RejectsOutsideLibration) {
    EXPECT_THROW(pendulum_action(0.0), std::domain_error);
    EXPECT_THROW(pendulum_action(2.0), std::domain_error);
    EXPECT_THROW(pendulum_action(-1.0), std::domain_error);
}

// --- twist determinant ---

TEST(Twist, ModelDeterminantSign) {
    const auto pa = pendulum_action(1.0);
    const auto det = twist_determinant({pa.action});
    // d = 2: (-1)^2 F'' = F'' < 0
    EXPECT_LT(det.value, 0.0);
    EXPECT_FALSE(det.near_zero);
    EXPECT_NEAR(det.value, pa.f_second, 1e-10);
}

TEST(Twist, ProductStructure) {
    EXPECT_DOUBLE_EQ(twist_determinant_from_fpp({0.0, -0.3}).value, 0.0);
    EXPECT_TRUE(twist_determinant_from_fpp({0.0, -0.3}).near_zero);
    // d = 3 with equal actions: (-1)^3 (F'')^2 < 0
    const auto det = twist_determinant_from_fpp({-0.2, -0.2});
    EXPECT_DOUBLE_EQ(det.value, -0.04);
}

TEST(Twist, NonzeroOnSampledActionRange) {
    for (double E : {0.2, 0.6, 1.0, 1.4, 1.8}) {
        const auto pa = pendulum_action(E);
        const auto det = twist_determinant({pa.action});
        EXPECT_GT(std::abs(det.value), 1e-3);
    }
}

// --- rotor chart ---

TEST(Rotor, ActionAngleIdentity) {
    RngStream rng({31415, 0});
    for (int i = 0; i < 20; ++i) {
        const double I = rng.uniform(0.05, 3.0);
        const double theta = rng.uniform(0.0, 2.0 * M_PI);
        double p1, x1;
        rotor_from_action_angle(I, theta, &p1, &x1);
        EXPECT_NEAR(0.5 * (p1 * p1 + x1 * x1), I, 1e-14);
    }
}
