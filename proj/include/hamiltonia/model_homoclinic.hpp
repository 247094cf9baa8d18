#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "hamiltonia/chaos.hpp"
#include "hamiltonia/model.hpp"

namespace hamiltonia {

// Homoclinic-tangle machinery for the d = 2 rotor-pendulum system on the
// section {x_1 = 0, P_1 > 0}.  The unperturbed saddles sit at x_2 = +-pi;
// the lower separatrix branch (P_2 < 0) connects gamma_+ to gamma_-, so the
// tangle is traced as W^u(gamma_+) against W^s(gamma_-).

struct ModelTangle {
    PeriodicOrbit gamma_plus;
    PeriodicOrbit gamma_minus;
    ManifoldTrace unstable;  // W^u(gamma_+), branch toward decreasing x_2
    ManifoldTrace stable;    // W^s(gamma_-), branch arriving from x_2 > -pi
    std::vector<TransverseCrossing> crossings;
};

/// Continuation in eta from the integrable limit: Newton converges from the
/// (pi, 0) guess at eta = 0 and tracks the saddle orbit in small steps.
inline PeriodicOrbit find_model_saddle(double eta, double energy, double x2_sign, double h = 1e-3,
                                       double eta_step = 0.005) {
    Vec guess{x2_sign * M_PI, 0.0};
    PeriodicOrbit orbit;
    double e = 0.0;
    while (true) {
        RotorPendulumPotential pot(2, e);
        SectionMap<RotorPendulumPotential> map(pot, 0, 0.0, +1, energy, h);
        orbit = find_periodic_orbit(guess, map);
        if (orbit.status != OrbitSolveStatus::Converged) return orbit;
        guess = orbit.z;
        if (e >= eta) break;
        e = std::min(eta, e + eta_step);
    }
    return orbit;
}

/// Separatrix parameter t* of a section point on the lower branch,
/// x = -2 arctan(sinh t), folded from the position coordinate.
inline double lower_branch_parameter(double x2) {
    return std::asinh(std::tan(-0.5 * x2));
}

/// Distance of a section point to the analytic lower separatrix curve,
/// measured in the momentum coordinate at matched position.
inline double lower_branch_momentum_gap(const Vec& z) {
    const double t = lower_branch_parameter(z[0]);
    const double p_curve = -2.0 / std::cosh(t);
    return std::abs(z[1] - p_curve);
}

struct TangleOptions {
    double h = 1e-3;
    double arclen_max = 9.0;
    ManifoldOptions manifold;
};

/// Builds the full tangle at coupling eta and energy h: both saddle orbits,
/// the lower-branch manifold pair, and their transverse crossings.
inline ModelTangle analyze_model_tangle(double eta, double energy, TangleOptions opt = {}) {
    ModelTangle tangle;
    tangle.gamma_plus = find_model_saddle(eta, energy, +1.0, opt.h);
    tangle.gamma_minus = find_model_saddle(eta, energy, -1.0, opt.h);
    if (tangle.gamma_plus.status != OrbitSolveStatus::Converged ||
        tangle.gamma_minus.status != OrbitSolveStatus::Converged)
        throw std::runtime_error("analyze_model_tangle: saddle continuation failed");

    RotorPendulumPotential pot(2, eta);
    SectionMap<RotorPendulumPotential> map(pot, 0, 0.0, +1, energy, opt.h);

    // branch orientation: unstable of gamma_+ descending into x_2 < pi,
    // stable of gamma_- arriving from x_2 > -pi; both carry P_2 < 0
    const int u_branch = tangle.gamma_plus.unstable_dir[0] < 0 ? +1 : -1;
    const int s_branch = tangle.gamma_minus.stable_dir[0] > 0 ? +1 : -1;
    tangle.unstable =
        trace_manifold(tangle.gamma_plus, u_branch, false, opt.arclen_max, map, opt.manifold);
    tangle.stable =
        trace_manifold(tangle.gamma_minus, s_branch, true, opt.arclen_max, map, opt.manifold);
    tangle.crossings = detect_transverse_crossings(tangle.unstable.points, tangle.stable.points);
    return tangle;
}

/// Splitting distance between the two traces along the normal of the
/// unperturbed separatrix at parameter t*; the first-order prediction is
/// the Melnikov gradient scale.
inline double splitting_gap_at(const ModelTangle& tangle, double t_star) {
    double p0, x0;
    separatrix(t_star, -1, &p0, &x0);  // lower branch point
    // curve tangent: (dx/dt, dP/dt) = (P, -sin x); normal is its rotation
    const double tx = p0, ty = -std::sin(x0);
    const double tn = std::hypot(tx, ty);
    const double nx = -ty / tn, ny = tx / tn;

    auto offset_on = [&](const std::vector<Vec>& poly) {
        double best = std::numeric_limits<double>::quiet_NaN();
        double best_dist = 1e300;
        for (std::size_t i = 0; i + 1 < poly.size(); ++i) {
            // coordinates along (tangent, normal) relative to the anchor
            const double ax = poly[i][0] - x0, ay = poly[i][1] - p0;
            const double bx = poly[i + 1][0] - x0, by = poly[i + 1][1] - p0;
            const double at = ax * tx + ay * ty, an = ax * nx + ay * ny;
            const double bt = bx * tx + by * ty, bn = bx * nx + by * ny;
            if ((at < 0.0 && bt >= 0.0) || (at > 0.0 && bt <= 0.0)) {
                const double w = at / (at - bt);
                const double n_off = an + w * (bn - an);
                const double d = std::abs(n_off);
                if (d < best_dist) {
                    best_dist = d;
                    best = n_off;
                }
            }
        }
        return best;
    };
    const double ou = offset_on(tangle.unstable.points);
    const double os = offset_on(tangle.stable.points);
    if (std::isnan(ou) || std::isnan(os))
        throw std::runtime_error("splitting_gap_at: traces do not reach the anchor transversal");
    return std::abs(ou - os);
}

}  // namespace hamiltonia
