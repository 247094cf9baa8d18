#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "hamiltonia/elliptic.hpp"
#include "hamiltonia/quadrature.hpp"
#include "hamiltonia/vec.hpp"

namespace hamiltonia {

struct ModelParams {
    int dim = 2;
    double eta = 0.05;
    double energy = 2.5;  // chaos/tori window needs energy in (2(d-1), K)
};

// ---------------------------------------------------------------------------
// W_eta(x) = x_1^2/2 + sum_{j>=2} (1 - cos x_j) + (eta/2) sum_{j>=2} (x_1 - x_j)^2
// The Hamiltonian convention throughout is H = |p|^2/2 + W_eta(x).
// ---------------------------------------------------------------------------

class RotorPendulumPotential {
public:
    RotorPendulumPotential(int d, double eta) : dim_(d), eta_(eta) {
        if (d < 2 || d > kMaxDim)
            throw std::invalid_argument("RotorPendulumPotential: need 2 <= d <= 4");
        if (eta < 0) throw std::invalid_argument("RotorPendulumPotential: eta >= 0");
    }

    int dim() const { return dim_; }
    double eta() const { return eta_; }

    double value(const Vec& x) const {
        double v = 0.5 * x[0] * x[0];
        for (int j = 1; j < dim_; ++j) {
            v += 1.0 - std::cos(x[j]);
            const double dx = x[0] - x[j];
            v += 0.5 * eta_ * dx * dx;
        }
        return v;
    }
    void gradient(const Vec& x, Vec& g) const {
        g = Vec(dim_);
        g[0] = x[0];
        for (int j = 1; j < dim_; ++j) {
            const double dx = x[0] - x[j];
            g[0] += eta_ * dx;
            g[j] = std::sin(x[j]) - eta_ * dx;
        }
    }
    void hessian(const Vec& x, Mat& h) const {
        h = Mat(dim_, dim_);
        h(0, 0) = 1.0 + eta_ * (dim_ - 1);
        for (int j = 1; j < dim_; ++j) {
            h(0, j) = h(j, 0) = -eta_;
            h(j, j) = std::cos(x[j]) + eta_;
        }
    }
    void eval(const Vec& x, int order, double* v, Vec* g, Mat* h) const {
        if (v) *v = value(x);
        if (g && order >= 1) gradient(x, *g);
        if (h && order >= 2) hessian(x, *h);
    }

private:
    int dim_;
    double eta_;
};

// ---------------------------------------------------------------------------
// Unperturbed pendulum structure (H_pend = P^2/2 + 1 - cos x per axis).
// ---------------------------------------------------------------------------

/// Natural parametrization of the pendulum separatrix on the energy-2 level:
/// (P, x)(t) = sign * (2 sech t, 2 arctan(sinh t)).
inline void separatrix(double t, int sign, double* momentum, double* position) {
    const double sech = 1.0 / std::cosh(t);
    const double p = 2.0 * sech;
    const double x = 2.0 * std::atan(std::sinh(t));
    *momentum = sign >= 0 ? p : -p;
    *position = sign >= 0 ? x : -x;
}

/// tau-gradient of the Melnikov potential, closed form:
///   dM_pm/dtau_j = pm 2 pi sqrt(2 I0) sech(pi/2) sin(theta - tau_j).
inline double melnikov_grad_closed(double I0, double theta, double tau, int sign) {
    if (I0 <= 0) throw std::invalid_argument("melnikov_grad_closed: I0 > 0 required");
    const double sech_half_pi = 1.0 / std::cosh(M_PI_2);
    const double v = 2.0 * M_PI * std::sqrt(2.0 * I0) * sech_half_pi * std::sin(theta - tau);
    return sign >= 0 ? v : -v;
}

/// Same quantity through the defining improper integral, truncated to
/// [-T, T] after the shift s = sigma + tau.  The sech factor bounds the
/// truncation error by roughly 4 (sqrt(2 I0) + pi) e^{-T}, so T >= 30
/// leaves it far below any tolerance used here.
struct MelnikovQuadrature {
    double value = 0.0;
    double error = 0.0;
    bool converged = false;
};

inline MelnikovQuadrature melnikov_grad_quadrature(double I0, double theta, double tau, int sign,
                                                   double T = 40.0, double tol = 1e-10) {
    if (I0 <= 0) throw std::invalid_argument("melnikov_grad_quadrature: I0 > 0 required");
    if (T < 30.0) throw std::invalid_argument("melnikov_grad_quadrature: T >= 30 required");
    if (tol <= 0) throw std::invalid_argument("melnikov_grad_quadrature: tol > 0 required");
    const double amp = std::sqrt(2.0 * I0);
    const double phase = theta - tau;
    const double s2 = sign >= 0 ? 1.0 : -1.0;
    auto integrand = [&](double s) {
        const double sech = 1.0 / std::cosh(s);
        return (amp * std::sin(s + phase) - s2 * 2.0 * std::atan(std::sinh(s))) * sech;
    };
    QuadResult q = integrate_adaptive(integrand, -T, T, 0.25 * tol);
    MelnikovQuadrature out;
    out.value = s2 * 2.0 * q.value;
    const double truncation = 4.0 * (amp + M_PI) * std::exp(-T);
    out.error = 2.0 * q.error + truncation;
    out.converged = q.converged && out.error <= tol;
    return out;
}

/// Critical points of M_pm in (tau_1..tau_{d-1}) for fixed theta: the 2^{d-1}
/// combinations tau_j = theta + pi k_j, k_j in {0,1}, one period per axis.
/// The Hessian there is diagonal, so its determinant is the product of
/// mp 2 pi sqrt(2 I0) sech(pi/2) (-1)^{k_j}.
struct MelnikovCriticalPoint {
    std::vector<int> k;       // parity pattern, k_j in {0, 1}
    std::vector<double> tau;  // theta + pi k_j
    double hessian_det = 0.0;
};

inline std::vector<MelnikovCriticalPoint> melnikov_critical_points(double I0, double theta, int d,
                                                                   int sign) {
    if (d < 2) throw std::invalid_argument("melnikov_critical_points: d >= 2 required");
    const int m = d - 1;
    const double unit = 2.0 * M_PI * std::sqrt(2.0 * I0) / std::cosh(M_PI_2);
    std::vector<MelnikovCriticalPoint> out;
    out.reserve(std::size_t(1) << m);
    for (int mask = 0; mask < (1 << m); ++mask) {
        MelnikovCriticalPoint cp;
        cp.k.resize(m);
        cp.tau.resize(m);
        double det = 1.0;
        for (int j = 0; j < m; ++j) {
            cp.k[j] = (mask >> j) & 1;
            cp.tau[j] = theta + M_PI * cp.k[j];
            double eig = -unit;                 // -(+branch) second derivative at k_j = 0
            if (sign < 0) eig = -eig;           // mp pattern
            if (cp.k[j] == 1) eig = -eig;       // (-1)^{k_j}
            det *= eig;
        }
        cp.hessian_det = det;
        out.push_back(std::move(cp));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Pendulum action-angle data in the libration regime 0 < E < 2, modulus
// k = sqrt(E/2):
//   period    T(E) = 4 K(k),            Omega = 2 pi / T = pi / (2 K)
//   action    I(E) = (8/pi) [E(k) - (1-k^2) K(k)]
//   twist     F''(I) = dOmega/dI = Omega dOmega/dE
//             dOmega/dE = -pi [E(k) - (1-k^2) K(k)] / (8 k^2 (1-k^2) K^2)
// F'' < 0 throughout; F''(I) -> -1/8 as E -> 0.
// ---------------------------------------------------------------------------

struct PendulumAction {
    double energy = 0.0;
    double action = 0.0;
    double frequency = 0.0;
    double f_second = 0.0;  // F''(I)
};

inline PendulumAction pendulum_action(double E) {
    if (!(E > 0.0 && E < 2.0))
        throw std::domain_error("pendulum_action: libration regime needs 0 < E < 2");
    const double k2 = 0.5 * E;
    const double k = std::sqrt(k2);
    const auto [kk, ee] = elliptic_ke(k);
    const double one_minus = 1.0 - k2;
    double bracket = ee - one_minus * kk;  // E(k) - (1-k^2) K(k)
    if (k2 < 1e-5) {
        // series guard against cancellation: bracket = (pi/4) k^2 (1 + k^2/8 + ...)
        bracket = 0.25 * M_PI * k2 * (1.0 + 0.125 * k2 + 3.0 / 64.0 * k2 * k2);
    }
    PendulumAction out;
    out.energy = E;
    out.action = (8.0 / M_PI) * bracket;
    out.frequency = M_PI / (2.0 * kk);
    const double domega_de = -M_PI * bracket / (8.0 * k2 * one_minus * kk * kk);
    out.f_second = out.frequency * domega_de;
    return out;
}

/// Inverts I(E) by Newton iteration (dI/dE = 1/Omega), seeded with the
/// small-oscillation relation E ~ I.
inline PendulumAction pendulum_action_from_action(double I) {
    if (I <= 0) throw std::domain_error("pendulum_action_from_action: I > 0 required");
    const double i_max = pendulum_action(2.0 - 1e-12).action;
    if (I >= i_max)
        throw std::domain_error("pendulum_action_from_action: action exceeds libration range");
    double E = std::min(1.9, I);
    for (int it = 0; it < 100; ++it) {
        PendulumAction pa = pendulum_action(E);
        const double f = pa.action - I;
        if (std::abs(f) < 1e-14) return pa;
        double step = -f * pa.frequency;  // dE = -f / (dI/dE)
        double En = E + step;
        while (En <= 0.0 || En >= 2.0) {
            step *= 0.5;
            En = E + step;
        }
        E = En;
    }
    return pendulum_action(E);
}

/// Isoenergetic twist determinant (-1)^d prod_j F''(I_j) for the d-1
/// pendulum actions.  |values| below near_zero_tol are flagged.
struct TwistDeterminant {
    double value = 0.0;
    bool near_zero = false;
};

inline TwistDeterminant twist_determinant(const std::vector<double>& actions,
                                          double near_zero_tol = 1e-8) {
    const int d = static_cast<int>(actions.size()) + 1;
    double det = (d % 2 == 0) ? 1.0 : -1.0;
    for (double I : actions) det *= pendulum_action_from_action(I).f_second;
    TwistDeterminant out;
    out.value = det;
    out.near_zero = std::abs(det) < near_zero_tol;
    return out;
}

/// Same determinant from explicitly supplied F'' values (synthetic cases).
inline TwistDeterminant twist_determinant_from_fpp(const std::vector<double>& fpp,
                                                   double near_zero_tol = 1e-8) {
    const int d = static_cast<int>(fpp.size()) + 1;
    double det = (d % 2 == 0) ? 1.0 : -1.0;
    for (double f : fpp) det *= f;
    TwistDeterminant out;
    out.value = det;
    out.near_zero = std::abs(det) < near_zero_tol;
    return out;
}

/// Rotor action-angle chart: P1 = sqrt(2 I) cos(theta), x1 = sqrt(2 I) sin(theta).
inline void rotor_from_action_angle(double I, double theta, double* p1, double* x1) {
    const double r = std::sqrt(2.0 * I);
    *p1 = r * std::cos(theta);
    *x1 = r * std::sin(theta);
}

}  // namespace hamiltonia
