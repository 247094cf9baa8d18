#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "hamiltonia/vec.hpp"

namespace hamiltonia {

struct PhaseState {
    Vec q;
    Vec p;
    double t = 0.0;

    int dim() const { return q.size(); }
    bool finite() const { return q.finite() && p.finite() && std::isfinite(t); }
};

template <class P>
inline double hamiltonian(const PhaseState& s, const P& pot) {
    return 0.5 * s.p.norm2() + pot.value(s.q);
}

enum class Scheme {
    Leapfrog2,  // kick-drift-kick, order 2
    Composed4,  // Forest-Ruth triple-jump composition of leapfrog, order 4
};

namespace detail {
// Forest-Ruth / Yoshida composition coefficients.
inline constexpr double kFR1 = 1.3512071919596576340476878089715;   // 1/(2 - 2^{1/3})
inline constexpr double kFR0 = -1.7024143839193152680953756179429;  // -2^{1/3}/(2 - 2^{1/3})

template <class P>
inline void leapfrog_once(PhaseState& s, double h, const P& pot, Vec& g) {
    pot.gradient(s.q, g);
    s.p -= (0.5 * h) * g;
    s.q += h * s.p;
    pot.gradient(s.q, g);
    s.p -= (0.5 * h) * g;
    s.t += h;
}

/// Kick rows d..2d-1 of the tangent matrix: dp -= hh * Hess(q) * dq,
/// applied columnwise for every tangent column.
inline void tangent_kick(Mat& m, const Mat& hess, double hh, int d) {
    const int cols = m.cols();
    for (int c = 0; c < cols; ++c) {
        for (int i = 0; i < d; ++i) {
            double s = 0.0;
            for (int j = 0; j < d; ++j) s += hess(i, j) * m(j, c);
            m(d + i, c) -= hh * s;
        }
    }
}

inline void tangent_drift(Mat& m, double h, int d) {
    const int cols = m.cols();
    for (int c = 0; c < cols; ++c)
        for (int i = 0; i < d; ++i) m(i, c) += h * m(d + i, c);
}

/// One leapfrog step of base + tangent; the tangent update is the exact
/// Jacobian of the discrete map, not a separate ODE solve.
template <class P>
inline void leapfrog_tangent_once(PhaseState& s, Mat& m, double h, const P& pot, Vec& g,
                                  Mat& hess) {
    const int d = s.dim();
    pot.eval(s.q, 2, nullptr, &g, &hess);
    s.p -= (0.5 * h) * g;
    tangent_kick(m, hess, 0.5 * h, d);
    s.q += h * s.p;
    tangent_drift(m, h, d);
    pot.eval(s.q, 2, nullptr, &g, &hess);
    s.p -= (0.5 * h) * g;
    tangent_kick(m, hess, 0.5 * h, d);
    s.t += h;
}
}  // namespace detail

/// Advance one explicit symplectic step.  Aborts on non-finite states.
template <class P>
inline void step(PhaseState& s, double h, const P& pot, Scheme scheme = Scheme::Leapfrog2) {
    Vec g(s.dim());
    if (scheme == Scheme::Leapfrog2) {
        detail::leapfrog_once(s, h, pot, g);
    } else {
        detail::leapfrog_once(s, detail::kFR1 * h, pot, g);
        detail::leapfrog_once(s, detail::kFR0 * h, pot, g);
        detail::leapfrog_once(s, detail::kFR1 * h, pot, g);
    }
    if (!s.finite())
        throw std::runtime_error("step: non-finite state at t = " + std::to_string(s.t));
}

struct Trajectory {
    std::vector<PhaseState> states;
    std::vector<double> energy;
    double step = 0.0;

    std::size_t size() const { return states.size(); }
};

/// Fixed-step integration with periodic recording (every record_every steps;
/// the initial state is always recorded).
template <class P>
inline Trajectory integrate(PhaseState s, double t_end, double h, const P& pot,
                            Scheme scheme = Scheme::Leapfrog2, int record_every = 1) {
    if (t_end <= s.t) throw std::invalid_argument("integrate: t_end must exceed state.t");
    if (h <= 0) throw std::invalid_argument("integrate: h > 0 required");
    const long n_steps = static_cast<long>(std::llround((t_end - s.t) / h));
    Trajectory traj;
    traj.step = h;
    traj.states.reserve(static_cast<std::size_t>(n_steps / std::max(1, record_every)) + 2);
    traj.states.push_back(s);
    traj.energy.push_back(hamiltonian(s, pot));
    for (long k = 1; k <= n_steps; ++k) {
        step(s, h, pot, scheme);
        if (k % record_every == 0 || k == n_steps) {
            traj.states.push_back(s);
            traj.energy.push_back(hamiltonian(s, pot));
        }
    }
    return traj;
}

struct TangentBundleState {
    PhaseState base;
    Mat m;  // 2d x cols tangent matrix (cols = 2d for the full flow Jacobian)

    static TangentBundleState identity(const PhaseState& s) {
        TangentBundleState tb;
        tb.base = s;
        tb.m = Mat::identity(2 * s.dim());
        return tb;
    }
};

template <class P>
inline void tangent_step(TangentBundleState& tb, double h, const P& pot,
                         Scheme scheme = Scheme::Leapfrog2) {
    Vec g(tb.base.dim());
    Mat hess(tb.base.dim(), tb.base.dim());
    if (scheme == Scheme::Leapfrog2) {
        detail::leapfrog_tangent_once(tb.base, tb.m, h, pot, g, hess);
    } else {
        detail::leapfrog_tangent_once(tb.base, tb.m, detail::kFR1 * h, pot, g, hess);
        detail::leapfrog_tangent_once(tb.base, tb.m, detail::kFR0 * h, pot, g, hess);
        detail::leapfrog_tangent_once(tb.base, tb.m, detail::kFR1 * h, pot, g, hess);
    }
    if (!tb.base.finite() || !tb.m.finite())
        throw std::runtime_error("tangent_step: non-finite state at t = " +
                                 std::to_string(tb.base.t));
}

template <class P>
inline TangentBundleState integrate_tangent(TangentBundleState tb, double t_end, double h,
                                            const P& pot, Scheme scheme = Scheme::Leapfrog2) {
    if (t_end <= tb.base.t) throw std::invalid_argument("integrate_tangent: t_end <= t0");
    const long n_steps = static_cast<long>(std::llround((t_end - tb.base.t) / h));
    for (long k = 0; k < n_steps; ++k) tangent_step(tb, h, pot, scheme);
    return tb;
}

// ---------------------------------------------------------------------------
// Poincare sections.
// ---------------------------------------------------------------------------

/// Affine section functional s(q, p) = wq.q + wp.p - c, with a crossing
/// direction and an interpolation tolerance on |s| at accepted crossings.
struct SectionSpec {
    Vec wq;
    Vec wp;
    double c = 0.0;
    int direction = +1;  // accept crossings with sign(ds/dt) == direction
    double tol = 1e-12;

    static SectionSpec coordinate(int dim, int index, double value, int dir) {
        SectionSpec s;
        s.wq = Vec(dim);
        s.wp = Vec(dim);
        s.wq[index] = 1.0;
        s.c = value;
        s.direction = dir;
        return s;
    }

    double eval(const PhaseState& s) const { return wq.dot(s.q) + wp.dot(s.p) - c; }

    template <class P>
    double time_derivative(const PhaseState& s, const P& pot) const {
        Vec g(s.dim());
        pot.gradient(s.q, g);
        return wq.dot(s.p) - wp.dot(g);
    }
};

struct SectionResult {
    std::vector<PhaseState> points;
    std::vector<double> transversality;  // |ds/dt| at each accepted crossing
    bool truncated = false;
};

namespace detail {
/// Refine a bracketed crossing by Newton on the substep length tau in [0, h],
/// with bisection fallback; the substep map is the same symplectic stepper.
template <class P>
inline PhaseState refine_crossing(const PhaseState& pre, double h, const P& pot,
                                  const SectionSpec& spec, Scheme scheme) {
    double lo = 0.0, hi = h;
    const double s_lo = spec.eval(pre);
    if (std::abs(s_lo) < spec.tol) return pre;
    PhaseState post = pre;
    step(post, h, pot, scheme);
    double tau = h * s_lo / (s_lo - spec.eval(post));
    if (!(tau > 0.0 && tau < h)) tau = 0.5 * h;
    PhaseState z = pre;
    for (int it = 0; it < 60; ++it) {
        z = pre;
        step(z, tau, pot, scheme);
        const double s = spec.eval(z);
        if (std::abs(s) < spec.tol) return z;
        if ((s < 0) == (s_lo < 0)) lo = tau;
        else hi = tau;
        const double sdot = spec.time_derivative(z, pot);
        double next = tau - s / sdot;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        tau = next;
    }
    return z;
}
}  // namespace detail

/// Collect up to n_crossings directed section crossings, each refined to
/// |s| < spec.tol.  Stops early (truncated = true) on escape from the
/// |q|, |p| <= escape_radius region or when t_max is exhausted.
template <class P>
inline SectionResult poincare_section(PhaseState s, const P& pot, const SectionSpec& spec,
                                      int n_crossings, double h,
                                      Scheme scheme = Scheme::Leapfrog2, double t_max = 1e6,
                                      double escape_radius = 1e6) {
    SectionResult out;
    double s_prev = spec.eval(s);
    const double t_stop = s.t + t_max;
    while (static_cast<int>(out.points.size()) < n_crossings && s.t < t_stop) {
        PhaseState pre = s;
        step(s, h, pot, scheme);
        const double s_now = spec.eval(s);
        const bool sign_change = (s_prev < 0.0 && s_now >= 0.0) || (s_prev > 0.0 && s_now <= 0.0);
        if (sign_change) {
            const bool upward = s_now > s_prev;
            if ((upward && spec.direction > 0) || (!upward && spec.direction < 0)) {
                PhaseState cross = detail::refine_crossing(pre, h, pot, spec, scheme);
                out.points.push_back(cross);
                out.transversality.push_back(std::abs(spec.time_derivative(cross, pot)));
            }
        }
        s_prev = s_now;
        if (s.q.norm() > escape_radius || s.p.norm() > escape_radius) {
            out.truncated = true;
            break;
        }
    }
    if (static_cast<int>(out.points.size()) < n_crossings && !out.truncated) out.truncated = true;
    return out;
}

// ---------------------------------------------------------------------------
// Reference potentials used across tests and the CLI.
// ---------------------------------------------------------------------------

class ZeroPotential {
public:
    explicit ZeroPotential(int d) : dim_(d) {}
    int dim() const { return dim_; }
    double value(const Vec&) const { return 0.0; }
    void gradient(const Vec&, Vec& g) const { g = Vec(dim_); }
    void hessian(const Vec&, Mat& h) const { h = Mat(dim_, dim_); }
    void eval(const Vec&, int order, double* v, Vec* g, Mat* h) const {
        if (v) *v = 0.0;
        if (g && order >= 1) *g = Vec(dim_);
        if (h && order >= 2) *h = Mat(dim_, dim_);
    }

private:
    int dim_;
};

class HarmonicPotential {
public:
    explicit HarmonicPotential(int d) : dim_(d) {}
    int dim() const { return dim_; }
    double value(const Vec& q) const { return 0.5 * q.norm2(); }
    void gradient(const Vec& q, Vec& g) const { g = q; }
    void hessian(const Vec&, Mat& h) const { h = Mat::identity(dim_); }
    void eval(const Vec& q, int order, double* v, Vec* g, Mat* h) const {
        if (v) *v = value(q);
        if (g && order >= 1) *g = q;
        if (h && order >= 2) *h = Mat::identity(dim_);
    }

private:
    int dim_;
};

/// Single pendulum, V(x) = 1 - cos(x), d = 1.
class PendulumPotential {
public:
    int dim() const { return 1; }
    double value(const Vec& q) const { return 1.0 - std::cos(q[0]); }
    void gradient(const Vec& q, Vec& g) const {
        g = Vec(1);
        g[0] = std::sin(q[0]);
    }
    void hessian(const Vec& q, Mat& h) const {
        h = Mat(1, 1);
        h(0, 0) = std::cos(q[0]);
    }
    void eval(const Vec& q, int order, double* v, Vec* g, Mat* h) const {
        if (v) *v = value(q);
        if (g && order >= 1) gradient(q, *g);
        if (h && order >= 2) hessian(q, *h);
    }
};

/// V = cos(q_1): separable single-mode potential on the torus.
class SingleCosinePotential {
public:
    explicit SingleCosinePotential(int d) : dim_(d) {}
    int dim() const { return dim_; }
    double value(const Vec& q) const { return std::cos(q[0]); }
    void gradient(const Vec& q, Vec& g) const {
        g = Vec(dim_);
        g[0] = -std::sin(q[0]);
    }
    void hessian(const Vec& q, Mat& h) const {
        h = Mat(dim_, dim_);
        h(0, 0) = -std::cos(q[0]);
    }
    void eval(const Vec& q, int order, double* v, Vec* g, Mat* h) const {
        if (v) *v = value(q);
        if (g && order >= 1) gradient(q, *g);
        if (h && order >= 2) hessian(q, *h);
    }

private:
    int dim_;
};

}  // namespace hamiltonia
