#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <sstream>
#include <vector>

#include "hamiltonia/ensemble.hpp"
#include "hamiltonia/io.hpp"

using namespace hamiltonia;

namespace {

// Independent oracle: evaluate V directly as the complex exponential sum
// over the full mode set, without the Hermitian pairing of the library path.
std::complex<double> complex_sum_oracle(const TorusPotential& pot, const Vec& q) {
    std::complex<double> acc(0.0, 0.0);
    pot.for_each_mode([&](const MultiIndex& n, Complex a) {
        double phase = 0.0;
        for (int j = 0; j < pot.dim(); ++j) phase += n[j] * q[j];
        acc += a * std::exp(std::complex<double>(0.0, phase));
    });
    return acc / std::sqrt(pot.norm_const());
}

Vec random_point(RngStream& rng, int d, double lo = -M_PI, double hi = M_PI) {
    Vec q(d);
    for (int j = 0; j < d; ++j) q[j] = rng.uniform(lo, hi);
    return q;
}

}  // namespace

TEST(TorusPotential, ModeCountMatchesNormalization) {
    TorusPotential pot = sample_torus_potential(2, 1, {1, 0});
    EXPECT_EQ(pot.norm_const(), 8.0);  // (2*1+1)^2 - 1
    int count = 0;
    pot.for_each_mode([&](const MultiIndex&, Complex) { ++count; });
    EXPECT_EQ(count, 8);

    TorusPotential pot3 = sample_torus_potential(2, 8, {1, 0});
    EXPECT_EQ(pot3.norm_const(), 17.0 * 17.0 - 1.0);
}

TEST(TorusPotential, RejectsDegenerateArguments) {
    EXPECT_THROW(sample_torus_potential(0, 1, {1, 0}), std::invalid_argument);
    EXPECT_THROW(sample_torus_potential(1, 0, {1, 0}), std::invalid_argument);
}

TEST(TorusPotential, SeedDeterminismBitwise) {
    TorusPotential a = sample_torus_potential(1, 2, {77, 5});
    TorusPotential b = sample_torus_potential(1, 2, {77, 5});
    bool equal = true;
    a.for_each_mode([&](const MultiIndex& n, Complex ca) {
        if (ca != b.coeff(n)) equal = false;
    });
    EXPECT_TRUE(equal);
}

TEST(TorusPotential, HermitianSymmetry) {
    TorusPotential pot = sample_torus_potential(2, 3, {4, 9});
    pot.for_each_mode([&](const MultiIndex& n, Complex a) {
        MultiIndex m{};
        for (int j = 0; j < 2; ++j) m[j] = -n[j];
        EXPECT_EQ(a, std::conj(pot.coeff(m)));
    });
}

TEST(TorusPotential, PointwiseVarianceIsOne) {
    // oracle: kappa^L(0) = d_L^{-1} sum 1 = 1
    const Vec q{0.7, -1.3};
    const int m = 2000;
    double s2 = 0.0;
    for (int i = 0; i < m; ++i) {
        TorusPotential pot = sample_torus_potential(2, 8, {2024, static_cast<uint64_t>(i)});
        const double v = pot.value(q);
        s2 += v * v;
    }
    EXPECT_NEAR(s2 / m, 1.0, 0.1);
}

TEST(TorusPotential, TwoTermCosineExample) {
    TorusPotential pot(2, 1);
    pot.set_coeff({1, 0}, Complex(0.5, 0.0));  // also sets a_{-n} = conj
    for (double q1 : {0.0, 0.3, 1.7, -2.0}) {
        const Vec q{q1, 0.4};
        EXPECT_NEAR(pot.value(q), std::cos(q1) / std::sqrt(8.0), 1e-15);
    }
    Vec g(2);
    pot.gradient(Vec{0.0, 0.0}, g);
    EXPECT_NEAR(g[0], 0.0, 1e-15);
    EXPECT_NEAR(g[1], 0.0, 1e-15);
}

TEST(TorusPotential, FiniteDifferenceGradientOracle) {
    TorusPotential pot = sample_torus_potential(2, 5, {11, 0});
    RngStream rng({500, 1});
    const double h = 1e-5;
    for (int trial = 0; trial < 5; ++trial) {
        const Vec q = random_point(rng, 2);
        Vec g(2);
        pot.gradient(q, g);
        for (int j = 0; j < 2; ++j) {
            Vec qp = q, qm = q;
            qp[j] += h;
            qm[j] -= h;
            const double fd = (pot.value(qp) - pot.value(qm)) / (2 * h);
            EXPECT_NEAR(g[j], fd, 1e-6 * std::max(1.0, std::abs(fd)));
        }
    }
}

TEST(TorusPotential, FiniteDifferenceHessianOracle) {
    TorusPotential pot = sample_torus_potential(2, 4, {12, 0});
    RngStream rng({501, 1});
    const double h = 1e-5;
    const Vec q = random_point(rng, 2);
    Mat hess(2, 2);
    pot.hessian(q, hess);
    for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k) {
            Vec qp = q, qm = q;
            qp[k] += h;
            qm[k] -= h;
            Vec gp(2), gm(2);
            pot.gradient(qp, gp);
            pot.gradient(qm, gm);
            const double fd = (gp[j] - gm[j]) / (2 * h);
            EXPECT_NEAR(hess(j, k), fd, 1e-5 * std::max(1.0, std::abs(fd)));
        }
}

TEST(TorusPotential, RealnessAgainstComplexOracle) {
    RngStream rng({321, 0});
    double max_imag = 0.0, max_dev = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        TorusPotential pot = sample_torus_potential(2, 3, {9000, static_cast<uint64_t>(trial)});
        const Vec q = random_point(rng, 2);
        const std::complex<double> z = complex_sum_oracle(pot, q);
        max_imag = std::max(max_imag, std::abs(z.imag()));
        max_dev = std::max(max_dev, std::abs(z.real() - pot.value(q)));
    }
    EXPECT_LT(max_imag, 1e-12);
    EXPECT_LT(max_dev, 1e-12);
}

TEST(RescaledPotential, CenterValueAndZeroField) {
    TorusPotential pot = sample_torus_potential(2, 6, {77, 0});
    const Vec q0{0.3, -0.9};
    RescaledTorusPotential resc = rescale_potential(pot, q0, M_PI);
    EXPECT_DOUBLE_EQ(resc.value(Vec{0.0, 0.0}), pot.value(q0));

    TorusPotential zero(2, 3);
    RescaledTorusPotential zresc = rescale_potential(zero, q0, 2.0);
    EXPECT_EQ(zresc.value(Vec{1.0, -2.0}), 0.0);
}

TEST(RescaledPotential, DirectCompositionOracle) {
    TorusPotential pot = sample_torus_potential(1, 4, {15, 2});
    const Vec q0{0.8};
    const double lambda = 2.0;
    RescaledTorusPotential resc = rescale_potential(pot, q0, lambda);
    RngStream rng({88, 0});
    for (int i = 0; i < 10; ++i) {
        const double x = rng.uniform(-3.0, 3.0);
        Vec q{q0[0] + lambda * x / 4.0};
        EXPECT_NEAR(resc.value(Vec{x}), pot.value(q), 1e-14);
    }
    // chain-rule factor Lambda/L on the gradient
    Vec g(1), gb(1);
    resc.gradient(Vec{0.7}, g);
    pot.gradient(Vec{q0[0] + lambda * 0.7 / 4.0}, gb);
    EXPECT_NEAR(g[0], (lambda / 4.0) * gb[0], 1e-14);
}

// --- covariance kernels ---

TEST(Covariance, NormalizationAtZero) {
    CovarianceSpec cw{CovarianceSpec::Continuum, 3, 1, 2.5};
    EXPECT_DOUBLE_EQ(covariance_analytic(cw, Vec{0.0, 0.0, 0.0}), 1.0);
    CovarianceSpec cl{CovarianceSpec::TorusRescaled, 2, 7, M_PI};
    EXPECT_NEAR(covariance_analytic(cl, Vec{0.0, 0.0}), 1.0, 1e-14);
}

TEST(Covariance, DirichletZero) {
    const double lambda = 1.7;
    CovarianceSpec cw{CovarianceSpec::Continuum, 2, 1, lambda};
    EXPECT_NEAR(covariance_analytic(cw, Vec{M_PI / lambda, 0.0}), 0.0, 1e-15);
}

TEST(Covariance, StationarityOfRescaledKernel) {
    CovarianceSpec cl{CovarianceSpec::TorusRescaled, 2, 5, M_PI};
    RngStream rng({31, 4});
    for (int i = 0; i < 20; ++i) {
        const Vec x = random_point(rng, 2, -2, 2);
        const Vec xp = random_point(rng, 2, -2, 2);
        const Vec v = random_point(rng, 2, -5, 5);
        const double k1 = covariance_analytic(cl, x - xp);
        const double k2 = covariance_analytic(cl, (x + v) - (xp + v));
        EXPECT_NEAR(k1, k2, 1e-12);
    }
}

TEST(Covariance, KernelConvergenceMonotoneInL) {
    // sup over 41-point grids of |kappa^L - kappa_W| strictly decreasing in L
    for (int d : {1, 2}) {
        double prev = 1e300;
        for (int L : {5, 10, 20}) {
            CovarianceSpec cl{CovarianceSpec::TorusRescaled, d, L, M_PI};
            CovarianceSpec cw{CovarianceSpec::Continuum, d, L, M_PI};
            double sup = 0.0;
            const int grid = d == 1 ? 41 : 21;
            for (int i = 0; i < grid; ++i)
                for (int j = 0; j < (d == 1 ? 1 : grid); ++j) {
                    Vec x(d);
                    x[0] = -2.0 + 4.0 * i / (grid - 1);
                    if (d == 2) x[1] = -2.0 + 4.0 * j / (grid - 1);
                    sup = std::max(sup,
                                   std::abs(covariance_analytic(cl, x) - covariance_analytic(cw, x)));
                }
            EXPECT_LT(sup, prev) << "d=" << d << " L=" << L;
            prev = sup;
        }
    }
}

TEST(Covariance, DerivativeMatchesFiniteDifferences) {
    CovarianceSpec cl{CovarianceSpec::TorusRescaled, 1, 6, M_PI};
    CovarianceSpec cw{CovarianceSpec::Continuum, 1, 6, M_PI};
    const double h = 1e-5;
    for (double x0 : {0.15, 0.8, 2.3}) {
        for (const auto& spec : {cl, cw}) {
            const double fd = (covariance_analytic(spec, Vec{x0 + h}) -
                               covariance_analytic(spec, Vec{x0 - h})) /
                              (2 * h);
            const double an = covariance_derivative(spec, Vec{x0}, {1});
            EXPECT_NEAR(an, fd, 1e-5 * std::max(1.0, std::abs(fd)));
        }
    }
}

// --- band-limited field ---

TEST(Field, SincBasisPointValues) {
    BandLimitedField field(1, M_PI, 4);
    field.set_coeff({0}, 1.0);
    EXPECT_DOUBLE_EQ(field.value(Vec{0.0}), 1.0);           // sinc(0) = 1
    EXPECT_NEAR(field.value(Vec{M_PI / M_PI}), 0.0, 1e-15);  // argument hits integer 1
}

TEST(Field, SeedDeterminism) {
    BandLimitedField a = sample_field(1, M_PI, 16, {5, 6});
    BandLimitedField b = sample_field(1, M_PI, 16, {5, 6});
    for (std::size_t i = 0; i < a.n_coeffs(); ++i) ASSERT_EQ(a.coeff_flat(i), b.coeff_flat(i));
}

TEST(Field, GradientFiniteDifferenceOracle) {
    BandLimitedField field = sample_field(2, M_PI, 8, {42, 1});
    RngStream rng({43, 0});
    const double h = 1e-5;
    for (int trial = 0; trial < 5; ++trial) {
        const Vec x = random_point(rng, 2, -2, 2);
        Vec g(2);
        field.gradient(x, g);
        for (int j = 0; j < 2; ++j) {
            Vec xp = x, xm = x;
            xp[j] += h;
            xm[j] -= h;
            const double fd = (field.value(xp) - field.value(xm)) / (2 * h);
            EXPECT_NEAR(g[j], fd, 1e-5 * std::max(1.0, std::abs(fd)));
        }
    }
}

TEST(Field, HessianFiniteDifferenceOracle) {
    BandLimitedField field = sample_field(2, 2.0, 6, {52, 1});
    const Vec x{0.37, -1.1};
    Mat hess(2, 2);
    field.hessian(x, hess);
    const double h = 1e-5;
    for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k) {
            Vec xp = x, xm = x;
            xp[k] += h;
            xm[k] -= h;
            Vec gp(2), gm(2);
            field.gradient(xp, gp);
            field.gradient(xm, gm);
            const double fd = (gp[j] - gm[j]) / (2 * h);
            EXPECT_NEAR(hess(j, k), fd, 1e-5 * std::max(1.0, std::abs(fd)));
        }
}

TEST(Field, EmpiricalCovarianceMatchesDirichlet) {
    const int m = 2000;
    const Vec x0{0.0}, x1{0.5};
    double acc = 0.0;
    for (int i = 0; i < m; ++i) {
        BandLimitedField f = sample_field(1, M_PI, 64, {777, static_cast<uint64_t>(i)});
        acc += f.value(x0) * f.value(x1);
    }
    CovarianceSpec cw{CovarianceSpec::Continuum, 1, 1, M_PI};
    const double expected = covariance_analytic(cw, Vec{0.5});
    EXPECT_NEAR(expected, 2.0 / M_PI, 1e-15);  // sin(pi/2)/(pi/2)
    EXPECT_NEAR(acc / m, expected, 4.0 / std::sqrt(static_cast<double>(m)));
}

// --- ergodic averages ---

TEST(ErgodicAverage, ConstantFunctional) {
    BandLimitedField field = sample_field(1, M_PI, 32, {3, 3});
    auto ones = [](const BandLimitedField&, const Vec&) { return 1.0; };
    const auto avg = ergodic_average(field, ones, {5.0, 20.0});
    EXPECT_DOUBLE_EQ(avg[0], 1.0);
    EXPECT_DOUBLE_EQ(avg[1], 1.0);
}

TEST(ErgodicAverage, RejectsEmptyRadiusList) {
    BandLimitedField field = sample_field(1, M_PI, 8, {3, 3});
    auto ones = [](const BandLimitedField&, const Vec&) { return 1.0; };
    EXPECT_THROW(ergodic_average(field, ones, {}), std::invalid_argument);
}

TEST(ErgodicAverage, SquaredFieldApproachesVariance) {
    BandLimitedField field = sample_field(1, M_PI, 256, {2026, 11});
    auto w2 = [](const BandLimitedField& f, const Vec& y) {
        const double v = f.value(y);
        return v * v;
    };
    const auto avg = ergodic_average(field, w2, {20.0, 80.0});
    EXPECT_NEAR(avg[1], 1.0, 0.15);

    auto w1 = [](const BandLimitedField& f, const Vec& y) { return f.value(y); };
    const auto avg1 = ergodic_average(field, w1, {80.0});
    EXPECT_NEAR(avg1[0], 0.0, 0.15);
}

// --- finite-dimensional distributions ---

TEST(Fdd, SinglePointVariance) {
    const int n_samples = 2000;
    const auto cmp = fdd_compare(1, 8, Vec{0.4}, M_PI, {Vec{0.0}}, {MultiIndex{}}, n_samples,
                                 {31337, 0});
    EXPECT_NEAR(cmp.sigma_l(0, 0), 1.0, 1e-12);
    EXPECT_NEAR(cmp.empirical(0, 0), 1.0, 4.0 / std::sqrt(static_cast<double>(n_samples)));
}

TEST(Fdd, DirichletZeroDecouplesPoints) {
    // displacement pi/Lambda hits the first Dirichlet zero of kappa_W
    const double lambda = M_PI;
    const auto cmp = fdd_compare(1, 30, Vec{0.0}, lambda, {Vec{0.0}, Vec{M_PI / lambda}},
                                 {MultiIndex{}, MultiIndex{}}, 50, {77, 0});
    EXPECT_NEAR(cmp.sigma_w(0, 1), 0.0, 1e-14);
    EXPECT_NEAR(cmp.sigma_l(0, 1), 0.0, 0.05);  // converges at O(1/L)
}

TEST(Fdd, FiniteLMatrixNearLimit) {
    std::vector<Vec> points{Vec{0.0}, Vec{0.6}, Vec{1.3}};
    std::vector<MultiIndex> alphas{MultiIndex{}, MultiIndex{}, MultiIndex{}};
    const auto cmp = fdd_compare(1, 20, Vec{0.2}, M_PI, points, alphas, 400, {909, 0});
    EXPECT_LT(cmp.max_dev_l_vs_w, 0.05);
    EXPECT_LT(cmp.max_dev_empirical_vs_l, 4.0 / std::sqrt(400.0));
}

TEST(Fdd, DerivativeEntriesConvergeRelatively) {
    // second-derivative entries carry the O(1/L) error scaled by Lambda^2;
    // check them on their own scale
    std::vector<Vec> points{Vec{0.0}, Vec{0.6}};
    std::vector<MultiIndex> alphas{MultiIndex{{1}}, MultiIndex{{1}}};
    const auto cmp = fdd_compare(1, 20, Vec{0.2}, M_PI, points, alphas, 400, {910, 0});
    // analytic check of the variance entry: -kappa''(0)
    EXPECT_NEAR(cmp.sigma_w(0, 0), M_PI * M_PI / 3.0, 1e-12);
    const double scale = std::abs(cmp.sigma_w(0, 0));
    double rel = 0.0;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            rel = std::max(rel, std::abs(cmp.sigma_l(i, j) - cmp.sigma_w(i, j)) / scale);
    EXPECT_LT(rel, 0.1);
}

// --- serialization ---

TEST(Serialization, TorusPotentialRoundTrip) {
    TorusPotential pot = sample_torus_potential(2, 1, {7, 0});
    const Json j = to_json(pot);
    EXPECT_EQ(j.at("coeffs").size(), 8u);
    TorusPotential back = torus_potential_from_json(j);
    pot.for_each_mode([&](const MultiIndex& n, Complex a) { EXPECT_EQ(a, back.coeff(n)); });
}

TEST(Serialization, FieldRoundTrip) {
    BandLimitedField f = sample_field(2, 1.5, 3, {8, 1});
    BandLimitedField back = field_from_json(to_json(f));
    for (std::size_t i = 0; i < f.n_coeffs(); ++i)
        ASSERT_EQ(f.coeff_flat(i), back.coeff_flat(i));
}
