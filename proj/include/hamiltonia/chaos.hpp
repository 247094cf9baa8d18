#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Eigenvalues>

#include "hamiltonia/dynamics.hpp"
#include "hamiltonia/frequency.hpp"
#include "hamiltonia/vec.hpp"

namespace hamiltonia {

// ---------------------------------------------------------------------------
// Finite-time indicators.
// ---------------------------------------------------------------------------

/// Label thresholds scale with the integration horizon: the tangent growth
/// of regular orbits is at most polynomial, so (log t)/t envelopes separate
/// the two phases once t is a few hundred.  Calibrated on the eta = 0
/// integrable baseline.
struct ChaosThresholds {
    double lambda_thresh = 0.0;   // FTLE above this is chaotic evidence
    double lambda_reg = 0.0;      // FTLE below this is consistent with a torus
    double megno_low = 1.7;       // regular window for mean MEGNO
    double megno_high = 2.3;
    double megno_chaotic = 4.0;
    double angle_min = 1e-3;      // transversality threshold [rad]

    static ChaosThresholds for_time(double t_total) {
        ChaosThresholds th;
        th.lambda_thresh = 10.0 * std::log(t_total) / t_total;
        th.lambda_reg = 3.0 * std::log(t_total) / t_total;
        return th;
    }
};

enum class OrbitLabel { Regular, Chaotic, Undetermined };

inline const char* to_string(OrbitLabel l) {
    switch (l) {
        case OrbitLabel::Regular: return "Regular";
        case OrbitLabel::Chaotic: return "Chaotic";
        default: return "Undetermined";
    }
}

struct IndicatorOptions {
    double t_total = 1000.0;
    double h = 1e-2;
    double renorm_every = 1.0;
    int sample_every = 5;        // record every k-th step for frequency analysis
    bool collect_samples = false;
    // Momentum runaway guard.  Positions are left unbounded: unwrapped
    // torus angles and pendulum rotations grow linearly by design.
    double escape_radius = 50.0;
};

struct IndicatorResult {
    double ftle = 0.0;
    double megno = 0.0;
    bool escaped = false;
    double energy0 = 0.0;
    double energy_drift = 0.0;
    // per-dof uniform samples (filled when collect_samples is set)
    std::vector<std::vector<double>> q_samples;
    std::vector<std::vector<double>> p_samples;
    double sample_dt = 0.0;
    // q-excursion box over the whole run (containment checks)
    Vec q_min, q_max;
};

/// Single pass producing the finite-time Lyapunov exponent, the mean MEGNO
/// and (optionally) uniform samples.  The tangent vector is renormalized
/// every renorm_every time units; MEGNO accumulates t d(log |delta|) per
/// step, which is renormalization-invariant.
template <class P>
inline IndicatorResult indicator_run(PhaseState s, const P& pot, const IndicatorOptions& opt) {
    const int d = s.dim();
    IndicatorResult res;
    res.energy0 = hamiltonian(s, pot);
    res.q_min = s.q;
    res.q_max = s.q;

    Mat delta(2 * d, 1);
    const double init = 1.0 / std::sqrt(2.0 * d);
    for (int i = 0; i < 2 * d; ++i) delta(i, 0) = init;

    const long n_steps = static_cast<long>(std::llround(opt.t_total / opt.h));
    const long renorm_steps = std::max<long>(1, std::llround(opt.renorm_every / opt.h));
    const double t0 = s.t;

    if (opt.collect_samples) {
        res.q_samples.assign(d, {});
        res.p_samples.assign(d, {});
        res.sample_dt = opt.h * opt.sample_every;
        for (int j = 0; j < d; ++j) {
            res.q_samples[j].reserve(n_steps / opt.sample_every + 1);
            res.p_samples[j].reserve(n_steps / opt.sample_every + 1);
        }
        for (int j = 0; j < d; ++j) {
            res.q_samples[j].push_back(s.q[j]);
            res.p_samples[j].push_back(s.p[j]);
        }
    }

    Vec g(d);
    Mat hess(d, d);
    double log_growth = 0.0;       // accumulated log of tangent norm
    double norm_prev = 1.0;        // |delta| after last renormalization
    double megno_s = 0.0;          // integral of t dlog|delta|
    double megno_mean_acc = 0.0;   // integral of Y(t) dt
    for (long k = 1; k <= n_steps; ++k) {
        detail::leapfrog_tangent_once(s, delta, opt.h, pot, g, hess);
        if (!s.finite() || !delta.finite()) {
            res.escaped = true;
            break;
        }
        double nrm = 0.0;
        for (int i = 0; i < 2 * d; ++i) nrm += delta(i, 0) * delta(i, 0);
        nrm = std::sqrt(nrm);
        const double t_rel = s.t - t0;
        const double lr = std::log(nrm / norm_prev);
        megno_s += (t_rel - 0.5 * opt.h) * lr;
        megno_mean_acc += (2.0 * megno_s / t_rel) * opt.h;
        norm_prev = nrm;
        if (k % renorm_steps == 0 || nrm > 1e100) {
            log_growth += std::log(nrm);
            for (int i = 0; i < 2 * d; ++i) delta(i, 0) /= nrm;
            norm_prev = 1.0;
        }
        for (int j = 0; j < d; ++j) {
            res.q_min[j] = std::min(res.q_min[j], s.q[j]);
            res.q_max[j] = std::max(res.q_max[j], s.q[j]);
        }
        if (opt.collect_samples && k % opt.sample_every == 0) {
            for (int j = 0; j < d; ++j) {
                res.q_samples[j].push_back(s.q[j]);
                res.p_samples[j].push_back(s.p[j]);
            }
        }
        if (s.p.norm() > opt.escape_radius) {
            res.escaped = true;
            break;
        }
    }
    const double t_elapsed = s.t - t0;
    log_growth += std::log(norm_prev);
    res.ftle = t_elapsed > 0 ? log_growth / t_elapsed : 0.0;
    res.megno = t_elapsed > 0 ? megno_mean_acc / t_elapsed : 0.0;
    res.energy_drift = std::abs(hamiltonian(s, pot) - res.energy0);
    return res;
}

/// Finite-time Lyapunov exponent: (1/t) sum of log tangent growth between
/// renormalizations.
template <class P>
inline double ftle(const PhaseState& s, const P& pot, double t_total, double renorm_every = 1.0,
                   double h = 1e-2) {
    IndicatorOptions opt;
    opt.t_total = t_total;
    opt.renorm_every = renorm_every;
    opt.h = h;
    return indicator_run(s, pot, opt).ftle;
}

/// Mean MEGNO; ~2 on nondegenerate quasi-periodic orbits, ~0 on isochronous
/// linear ones, grows linearly with t on chaotic orbits.
template <class P>
inline double megno(const PhaseState& s, const P& pot, double t_total, double h = 1e-2) {
    IndicatorOptions opt;
    opt.t_total = t_total;
    opt.h = h;
    return indicator_run(s, pot, opt).megno;
}

inline OrbitLabel classify_orbit(double ftle_v, double megno_v, bool escaped, bool has_crossing,
                                 const ChaosThresholds& th) {
    if (escaped) return OrbitLabel::Undetermined;
    if (ftle_v > th.lambda_thresh && (megno_v > th.megno_chaotic || has_crossing))
        return OrbitLabel::Chaotic;
    if (ftle_v < th.lambda_reg && megno_v > th.megno_low && megno_v < th.megno_high)
        return OrbitLabel::Regular;
    return OrbitLabel::Undetermined;
}

struct CrossingEvidence {
    Vec point;     // section coordinates
    double angle;  // transversality angle [rad]
};

struct ChaosReport {
    PhaseState initial_condition;
    double energy = 0.0;
    double ftle = 0.0;
    double megno = 0.0;
    OrbitLabel label = OrbitLabel::Undetermined;
    std::vector<CrossingEvidence> evidence;
};

// ---------------------------------------------------------------------------
// Poincare return map restricted to a coordinate section and energy level.
// ---------------------------------------------------------------------------

/// Return map of the section {q[index] = value, sign(p[index]) = direction}
/// on the energy level H = energy.  Reduced coordinates are the remaining
/// (q_j, p_j); the sectioned momentum is reconstructed from the energy.
template <class P>
class SectionMap {
public:
    SectionMap(const P& pot, int index, double value, int direction, double energy, double h,
               Scheme scheme = Scheme::Leapfrog2)
        : pot_(&pot),
          index_(index),
          value_(value),
          direction_(direction),
          energy_(energy),
          h_(h),
          scheme_(scheme) {}

    int full_dim() const { return pot_->dim(); }
    int reduced_dim() const { return 2 * (pot_->dim() - 1); }
    double energy() const { return energy_; }

    /// Reconstruct a full phase-space point from section coordinates.
    std::optional<PhaseState> lift(const Vec& z) const {
        const int d = full_dim();
        PhaseState s;
        s.q = Vec(d);
        s.p = Vec(d);
        int c = 0;
        for (int j = 0; j < d; ++j) {
            if (j == index_) {
                s.q[j] = value_;
            } else {
                s.q[j] = z[c++];
            }
        }
        double p_other2 = 0.0;
        for (int j = 0; j < d; ++j) {
            if (j == index_) continue;
            s.p[j] = z[c++];
            p_other2 += s.p[j] * s.p[j];
        }
        const double rest = 2.0 * (energy_ - pot_->value(s.q)) - p_other2;
        if (rest <= 0.0) return std::nullopt;  // section leaves the energy shell
        s.p[index_] = direction_ * std::sqrt(rest);
        return s;
    }

    Vec project(const PhaseState& s) const {
        const int d = full_dim();
        Vec z(reduced_dim());
        int c = 0;
        for (int j = 0; j < d; ++j)
            if (j != index_) z[c++] = s.q[j];
        for (int j = 0; j < d; ++j)
            if (j != index_) z[c++] = s.p[j];
        return z;
    }

    /// One application of the return map; backward = true follows the flow
    /// to the previous directed crossing (used for stable manifolds).
    std::optional<Vec> apply(const Vec& z, bool backward = false, double* return_time = nullptr,
                             double t_max = 200.0, double escape_radius = 30.0) const {
        auto lifted = lift(z);
        if (!lifted) return std::nullopt;
        PhaseState s = *lifted;
        SectionSpec spec = SectionSpec::coordinate(full_dim(), index_, value_, direction_);
        const double hs = backward ? -h_ : h_;
        const double t0 = s.t;
        double s_prev = spec.eval(s);
        // leave the section before accepting a new crossing
        long guard = static_cast<long>(std::llround(t_max / h_));
        for (long k = 0; k < guard; ++k) {
            PhaseState pre = s;
            step(s, hs, *pot_, scheme_);
            const double s_now = spec.eval(s);
            const bool sign_change =
                (s_prev < 0.0 && s_now >= 0.0) || (s_prev > 0.0 && s_now <= 0.0);
            // skip the departure step: the start point sits on the section
            if (sign_change && std::abs(s.t - t0) > std::abs(hs)) {
                PhaseState cross = detail::refine_crossing(pre, hs, *pot_, spec, scheme_);
                const double sdot = spec.time_derivative(cross, *pot_);
                if (sdot * direction_ > 0.0) {
                    if (return_time) *return_time = std::abs(cross.t - t0);
                    return project(cross);
                }
            }
            s_prev = s_now;
            if (s.q.norm() > escape_radius || s.p.norm() > escape_radius) return std::nullopt;
        }
        return std::nullopt;
    }

    /// Central finite-difference Jacobian of the return map.  The map is
    /// evaluated to ~1e-12 (crossing refinement), so eps balances that
    /// roundoff against the cubic truncation term.
    std::optional<Mat> jacobian(const Vec& z, bool backward = false, double eps = 1e-5) const {
        const int n = reduced_dim();
        Mat jac(n, n);
        for (int j = 0; j < n; ++j) {
            Vec zp = z, zm = z;
            zp[j] += eps;
            zm[j] -= eps;
            auto fp = apply(zp, backward);
            auto fm = apply(zm, backward);
            if (!fp || !fm) return std::nullopt;
            for (int i = 0; i < n; ++i) jac(i, j) = ((*fp)[i] - (*fm)[i]) / (2.0 * eps);
        }
        return jac;
    }

private:
    const P* pot_;
    int index_;
    double value_;
    int direction_;
    double energy_;
    double h_;
    Scheme scheme_;
};

// ---------------------------------------------------------------------------
// Hyperbolic periodic orbits via Newton on the return map.
// ---------------------------------------------------------------------------

enum class OrbitSolveStatus { Converged, NoConvergence, NonHyperbolic };

struct PeriodicOrbit {
    OrbitSolveStatus status = OrbitSolveStatus::NoConvergence;
    Vec z;             // section fixed point
    double period = 0.0;
    Mat monodromy;     // return-map Jacobian at z
    std::vector<std::complex<double>> multipliers;
    Vec unstable_dir;  // leading expanding eigendirection (real case)
    Vec stable_dir;
    double residual = 0.0;

    bool hyperbolic() const { return status == OrbitSolveStatus::Converged; }
};

namespace detail {
inline std::vector<std::complex<double>> eigenvalues_small(const Mat& a) {
    const int n = a.rows();
    std::vector<std::complex<double>> out;
    if (n == 2) {
        const double tr = a(0, 0) + a(1, 1);
        const double det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
        const std::complex<double> disc = std::sqrt(std::complex<double>(tr * tr / 4.0 - det, 0.0));
        out.push_back(tr / 2.0 + disc);
        out.push_back(tr / 2.0 - disc);
        return out;
    }
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = a(i, j);
    Eigen::EigenSolver<Eigen::MatrixXd> solver(m);
    for (int i = 0; i < n; ++i) out.push_back(solver.eigenvalues()[i]);
    return out;
}

/// Eigenvector of a real 2x2 matrix for a real eigenvalue mu.
inline Vec eigenvector_2x2(const Mat& a, double mu) {
    Vec v(2);
    // rows of (A - mu I) are orthogonal to v; pick the better-conditioned one
    const double r0x = a(0, 0) - mu, r0y = a(0, 1);
    const double r1x = a(1, 0), r1y = a(1, 1) - mu;
    if (r0x * r0x + r0y * r0y >= r1x * r1x + r1y * r1y) {
        v[0] = -r0y;
        v[1] = r0x;
    } else {
        v[0] = -r1y;
        v[1] = r1x;
    }
    const double n = v.norm();
    if (n > 0) v *= 1.0 / n;
    return v;
}
}  // namespace detail

/// Newton iteration on the section return map with finite-difference
/// Jacobian.  Multipliers come from the reduced monodromy; they appear in
/// reciprocal pairs since the map is symplectic.
template <class P>
inline PeriodicOrbit find_periodic_orbit(const Vec& guess, const SectionMap<P>& map,
                                         int max_iter = 40, double tol = 1e-11,
                                         double max_step = 0.1) {
    PeriodicOrbit orbit;
    Vec z = guess;
    const int n = map.reduced_dim();
    double period = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        auto fz = map.apply(z, false, &period);
        if (!fz) {
            orbit.status = OrbitSolveStatus::NoConvergence;
            return orbit;
        }
        Vec g = *fz - z;
        orbit.residual = g.norm_inf();
        if (orbit.residual < tol) break;
        auto jac = map.jacobian(z);
        if (!jac) {
            orbit.status = OrbitSolveStatus::NoConvergence;
            return orbit;
        }
        Mat a = *jac;
        for (int i = 0; i < n; ++i) a(i, i) -= 1.0;
        Vec dz;
        try {
            dz = solve_small(a, g);
        } catch (const std::runtime_error&) {
            // singular J - I: the guess already sits on a fixed manifold
            break;
        }
        // damping: near strongly hyperbolic orbits the basin is thin, so
        // cap the step and backtrack while the residual grows
        if (dz.norm_inf() > max_step) dz *= max_step / dz.norm_inf();
        double scale = 1.0;
        for (int bt = 0; bt < 8; ++bt) {
            Vec zt = z - scale * dz;
            auto ft = map.apply(zt, false);
            if (ft && ((*ft) - zt).norm_inf() < orbit.residual) {
                z = zt;
                break;
            }
            scale *= 0.5;
            if (bt == 7) z -= scale * dz;
        }
    }
    {
        auto fz = map.apply(z, false, &period);
        if (fz) orbit.residual = ((*fz) - z).norm_inf();
    }
    if (!(orbit.residual < 1e-8)) {
        orbit.status = OrbitSolveStatus::NoConvergence;
        return orbit;
    }
    orbit.z = z;
    orbit.period = period;
    auto jac = map.jacobian(z);
    if (!jac) {
        orbit.status = OrbitSolveStatus::NoConvergence;
        return orbit;
    }
    orbit.monodromy = *jac;
    orbit.multipliers = detail::eigenvalues_small(orbit.monodromy);
    double mu_max = 0.0;
    std::complex<double> lead;
    for (const auto& mu : orbit.multipliers)
        if (std::abs(mu) > mu_max) {
            mu_max = std::abs(mu);
            lead = mu;
        }
    if (mu_max < 1.0 + 1e-4 || std::abs(lead.imag()) > 1e-8 * mu_max) {
        orbit.status = OrbitSolveStatus::NonHyperbolic;
        return orbit;
    }
    orbit.status = OrbitSolveStatus::Converged;
    if (n == 2) {
        orbit.unstable_dir = detail::eigenvector_2x2(orbit.monodromy, lead.real());
        // the reciprocal multiplier carries the stable direction
        orbit.stable_dir = detail::eigenvector_2x2(orbit.monodromy, 1.0 / lead.real());
    }
    return orbit;
}

// ---------------------------------------------------------------------------
// One-dimensional invariant manifolds in the section plane (d = 2).
// ---------------------------------------------------------------------------

struct ManifoldTrace {
    std::vector<Vec> points;     // ordered along the manifold
    std::vector<double> arclen;  // cumulative arclength
    bool truncated = false;
    int branch = +1;
    bool stable = false;
};

struct ManifoldOptions {
    double delta0 = 1e-6;       // seeding distance along the eigenvector
    double max_spacing = 1e-2;  // spacing bound in section coordinates
    double arclen_max = 9.0;
    int seed_points = 512;      // per fundamental segment (doubled on demand)
    int max_seed_points = 2048;
    // Depth is noise-limited: transverse integration error is amplified by
    // the multiplier on every return, so coverage comes from seed density,
    // not from deep iteration.  mu^4 delta0 already exceeds any section span.
    int max_iterations = 4;
    double escape_radius = 12.0;
};

/// Grows W^u (or W^s, through the inverse map) of a section fixed point:
/// a log-spaced fundamental segment [delta0, mu delta0] along the
/// eigendirection, iterated segment by segment; the images chain seamlessly
/// because the segment endpoints map onto each other.
template <class P>
inline ManifoldTrace trace_manifold(const PeriodicOrbit& orbit, int branch, bool stable,
                                    double arclen_max, const SectionMap<P>& map,
                                    ManifoldOptions opt = {}) {
    if (!orbit.hyperbolic()) throw std::invalid_argument("trace_manifold: orbit not hyperbolic");
    if (map.reduced_dim() != 2)
        throw std::invalid_argument("trace_manifold: polyline tracing needs a 2D section");
    opt.arclen_max = arclen_max;
    const bool backward = stable;
    Vec dir = stable ? orbit.stable_dir : orbit.unstable_dir;
    double mu = 0.0;
    for (const auto& m : orbit.multipliers) {
        const double a = std::abs(m);
        mu = std::max(mu, stable ? 1.0 / a : a);
    }

    ManifoldTrace trace;
    trace.branch = branch;
    trace.stable = stable;
    int m_pts = opt.seed_points;
    while (true) {
        trace.points.clear();
        trace.arclen.clear();
        trace.truncated = false;
        // fundamental segment, log-spaced so that R(seg_first) = seg_last
        std::vector<Vec> segment;
        segment.reserve(m_pts + 1);
        for (int i = 0; i <= m_pts; ++i) {
            const double r = opt.delta0 * std::pow(mu, static_cast<double>(i) / m_pts);
            Vec z = orbit.z;
            z += (branch * r) * dir;
            segment.push_back(z);
        }
        bool escaped = false;
        double total_len = 0.0;
        Vec last;
        bool have_last = false;
        for (int iter = 0; iter < opt.max_iterations && !escaped; ++iter) {
            const std::size_t begin = (iter == 0) ? 0 : 1;  // endpoints chain
            for (std::size_t i = begin; i < segment.size(); ++i) {
                const Vec& z = segment[i];
                if (have_last) {
                    total_len += (z - last).norm();
                    if (total_len > opt.arclen_max) {
                        escaped = true;
                        break;
                    }
                }
                trace.points.push_back(z);
                trace.arclen.push_back(total_len);
                last = z;
                have_last = true;
            }
            if (escaped) break;
            // map the segment forward
            std::vector<Vec> next;
            next.reserve(segment.size());
            for (const Vec& z : segment) {
                auto fz = map.apply(z, backward, nullptr, 200.0, opt.escape_radius);
                if (!fz) {
                    escaped = true;
                    trace.truncated = true;
                    break;
                }
                next.push_back(*fz);
            }
            if (escaped) break;
            segment = std::move(next);
        }
        // spacing control: resample with a denser fundamental segment
        double max_gap = 0.0;
        for (std::size_t i = 1; i < trace.points.size(); ++i)
            max_gap = std::max(max_gap, trace.arclen[i] - trace.arclen[i - 1]);
        if (max_gap <= opt.max_spacing || m_pts >= opt.max_seed_points) break;
        m_pts *= 2;
    }
    return trace;
}

// ---------------------------------------------------------------------------
// Transverse intersections of two section polylines.
// ---------------------------------------------------------------------------

struct TransverseCrossing {
    Vec point;
    double angle = 0.0;       // in [0, pi/2]
    double separation = 0.0;  // max |signed distance| in the local window
};

/// Detects transverse intersections of two section polylines by sweeping the
/// signed normal distance from trace_u to trace_s.  A crossing is a sign
/// change of the distance profile; the angle is recovered from the distance
/// slope (sin(angle) = |dd/ds|), which is insensitive to the sampling offset
/// that makes raw segment-pair intersections of near-coincident curves fire
/// at curvature-scale angles.  Sign changes whose neighborhood never
/// separates beyond separation_floor are coincidence noise and are dropped.
inline std::vector<TransverseCrossing> detect_transverse_crossings(
    const std::vector<Vec>& trace_u, const std::vector<Vec>& trace_s, double angle_min = 1e-3,
    double dedupe_dist = 1e-3, double separation_floor = 1e-4, double window = 0.5) {
    std::vector<TransverseCrossing> out;
    if (trace_u.size() < 2 || trace_s.size() < 2) return out;

    // bucket the s-segments on a uniform grid for nearest-segment queries
    double lo_x = 1e300, lo_y = 1e300, hi_x = -1e300, hi_y = -1e300;
    for (const auto& p : trace_s) {
        lo_x = std::min(lo_x, p[0]);
        hi_x = std::max(hi_x, p[0]);
        lo_y = std::min(lo_y, p[1]);
        hi_y = std::max(hi_y, p[1]);
    }
    const double span = std::max(hi_x - lo_x, hi_y - lo_y);
    const double cell = std::max(1e-6, span / 256.0);
    const int nx = static_cast<int>((hi_x - lo_x) / cell) + 2;
    const int ny = static_cast<int>((hi_y - lo_y) / cell) + 2;
    std::vector<std::vector<int>> buckets(static_cast<std::size_t>(nx) * ny);
    for (int i = 0; i + 1 < static_cast<int>(trace_s.size()); ++i) {
        const auto& a = trace_s[i];
        const auto& b = trace_s[i + 1];
        const int ix0 = std::clamp(static_cast<int>((std::min(a[0], b[0]) - lo_x) / cell), 0, nx - 1);
        const int ix1 = std::clamp(static_cast<int>((std::max(a[0], b[0]) - lo_x) / cell), 0, nx - 1);
        const int iy0 = std::clamp(static_cast<int>((std::min(a[1], b[1]) - lo_y) / cell), 0, ny - 1);
        const int iy1 = std::clamp(static_cast<int>((std::max(a[1], b[1]) - lo_y) / cell), 0, ny - 1);
        for (int ix = ix0; ix <= ix1; ++ix)
            for (int iy = iy0; iy <= iy1; ++iy)
                buckets[static_cast<std::size_t>(ix) * ny + iy].push_back(i);
    }

    // signed distance of one point to the nearest s-segment within reach
    const double reach = std::max(4.0 * cell, 0.1 * span);
    auto signed_distance = [&](const Vec& p, bool* ok) {
        const int cx = std::clamp(static_cast<int>((p[0] - lo_x) / cell), 0, nx - 1);
        const int cy = std::clamp(static_cast<int>((p[1] - lo_y) / cell), 0, ny - 1);
        const int r = static_cast<int>(reach / cell) + 1;
        double best = 1e300, best_signed = 0.0;
        for (int ix = std::max(0, cx - r); ix <= std::min(nx - 1, cx + r); ++ix)
            for (int iy = std::max(0, cy - r); iy <= std::min(ny - 1, cy + r); ++iy)
                for (int i : buckets[static_cast<std::size_t>(ix) * ny + iy]) {
                    const auto& a = trace_s[i];
                    const auto& b = trace_s[i + 1];
                    const double sx = b[0] - a[0], sy = b[1] - a[1];
                    const double len2 = sx * sx + sy * sy;
                    if (len2 < 1e-24) continue;
                    double t = ((p[0] - a[0]) * sx + (p[1] - a[1]) * sy) / len2;
                    t = std::clamp(t, 0.0, 1.0);
                    const double qx = a[0] + t * sx, qy = a[1] + t * sy;
                    const double dx = p[0] - qx, dy = p[1] - qy;
                    const double d2 = dx * dx + dy * dy;
                    if (d2 < best) {
                        best = d2;
                        const double cross = sx * dy - sy * dx;
                        best_signed = (cross >= 0 ? 1.0 : -1.0) * std::sqrt(d2);
                    }
                }
        *ok = best < reach * reach;
        return best_signed;
    };

    const std::size_t n = trace_u.size();
    std::vector<double> dist(n, 0.0), arclen(n, 0.0);
    std::vector<char> valid(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        bool ok = false;
        dist[i] = signed_distance(trace_u[i], &ok);
        valid[i] = ok ? 1 : 0;
        if (i > 0) arclen[i] = arclen[i - 1] + (trace_u[i] - trace_u[i - 1]).norm();
    }

    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (!valid[i] || !valid[i + 1]) continue;
        const bool node_on_curve = dist[i] == 0.0;
        if (!node_on_curve && (dist[i] < 0) == (dist[i + 1] < 0)) continue;
        if (node_on_curve && i > 0 && dist[i - 1] == 0.0) continue;  // along a shared run
        const double ds = arclen[i + 1] - arclen[i];
        if (ds <= 0) continue;
        const double w = node_on_curve ? 0.0 : dist[i] / (dist[i] - dist[i + 1]);
        Vec point = trace_u[i] + w * (trace_u[i + 1] - trace_u[i]);
        const double slope = std::abs(dist[i + 1] - dist[i]) / ds;
        const double angle = std::asin(std::min(1.0, slope));
        if (angle <= angle_min) continue;
        // coincidence filter: the curves must genuinely separate nearby
        const double s0 = arclen[i] + w * ds;
        double sep = 0.0;
        for (std::size_t j = i; j-- > 0;) {
            if (arclen[j] < s0 - window) break;
            if (valid[j]) sep = std::max(sep, std::abs(dist[j]));
        }
        for (std::size_t j = i + 1; j < n; ++j) {
            if (arclen[j] > s0 + window) break;
            if (valid[j]) sep = std::max(sep, std::abs(dist[j]));
        }
        if (sep < separation_floor) continue;
        bool merged = false;
        for (auto& c : out) {
            if ((c.point - point).norm() < dedupe_dist) {
                if (angle > c.angle) {
                    c.point = point;
                    c.angle = angle;
                    c.separation = sep;
                }
                merged = true;
                break;
            }
        }
        if (!merged) out.push_back({point, angle, sep});
    }
    return out;
}

}  // namespace hamiltonia
