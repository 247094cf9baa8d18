#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "hamiltonia/chaos.hpp"
#include "hamiltonia/ensemble.hpp"
#include "hamiltonia/frequency.hpp"
#include "hamiltonia/parallel.hpp"
#include "hamiltonia/rng.hpp"
#include "hamiltonia/vec.hpp"

namespace hamiltonia {

// ---------------------------------------------------------------------------
// Diophantine condition |omega . k| >= gamma |k|^{-(d-1)-tau}, brute force.
// ---------------------------------------------------------------------------

struct DiophantineParams {
    double gamma = 0.01;
    double tau = 1.0;  // upper end of the admissible (tau_1, tau_2) = (0.1, 1.0)
    int K = 30;        // exhaustive cutoff |k|_inf <= K
};

struct DiophantineResult {
    bool pass = false;
    double margin = 0.0;  // min over k of |omega.k| |k|^{(d-1)+tau}
    MultiIndex worst_k{};
};

/// Exhaustive scan over 0 < |k|_inf <= K (half lattice; the condition is
/// even in k).  |k| is the Euclidean norm.
inline DiophantineResult diophantine_check(const Vec& omega, const DiophantineParams& params) {
    const int d = omega.size();
    DiophantineResult out;
    out.margin = 1e300;
    MultiIndex k{};
    for (int j = 0; j < d; ++j) k[j] = -params.K;
    const double expo = static_cast<double>(d - 1) + params.tau;
    do {
        if (!detail::is_canonical(k, d)) continue;
        double dot = 0.0, norm2 = 0.0;
        for (int j = 0; j < d; ++j) {
            dot += omega[j] * k[j];
            norm2 += static_cast<double>(k[j]) * k[j];
        }
        const double margin = std::abs(dot) * std::pow(norm2, 0.5 * expo);
        if (margin < out.margin) {
            out.margin = margin;
            out.worst_k = k;
        }
    } while (detail::next_index(k, d, -params.K, params.K));
    out.pass = out.margin >= params.gamma;
    return out;
}

// ---------------------------------------------------------------------------
// Phase-space sampling regions.
// ---------------------------------------------------------------------------

/// Either a position box crossed with a momentum ball, or a round ball in
/// the full phase space (the model's Omega = {|x|^2 + |P|^2 < r^2}).
struct PhaseRegion {
    enum Kind { BoxTimesMomentumBall, PhaseBall };
    Kind kind = BoxTimesMomentumBall;
    Vec q_lo, q_hi;       // box case
    double p_radius = 0;  // box case
    double radius = 0;    // ball case
    int dim = 0;

    static PhaseRegion box(const Vec& lo, const Vec& hi, double p_radius) {
        PhaseRegion r;
        r.kind = BoxTimesMomentumBall;
        r.q_lo = lo;
        r.q_hi = hi;
        r.p_radius = p_radius;
        r.dim = lo.size();
        return r;
    }
    static PhaseRegion ball(int dim, double radius) {
        PhaseRegion r;
        r.kind = PhaseBall;
        r.radius = radius;
        r.dim = dim;
        return r;
    }

    /// Volume of the enclosing sampling box (for Monte Carlo volumes).
    double sampling_box_volume() const {
        double v = 1.0;
        if (kind == BoxTimesMomentumBall) {
            for (int j = 0; j < dim; ++j) v *= (q_hi[j] - q_lo[j]);
            for (int j = 0; j < dim; ++j) v *= 2.0 * p_radius;
        } else {
            for (int j = 0; j < 2 * dim; ++j) v *= 2.0 * radius;
        }
        return v;
    }

    bool draw(RngStream& rng, Vec* q, Vec* p) const {
        *q = Vec(dim);
        *p = Vec(dim);
        if (kind == BoxTimesMomentumBall) {
            for (int j = 0; j < dim; ++j) (*q)[j] = rng.uniform(q_lo[j], q_hi[j]);
            double n2 = 0.0;
            for (int j = 0; j < dim; ++j) {
                (*p)[j] = rng.uniform(-p_radius, p_radius);
                n2 += (*p)[j] * (*p)[j];
            }
            return n2 <= p_radius * p_radius;
        }
        double n2 = 0.0;
        for (int j = 0; j < dim; ++j) {
            (*q)[j] = rng.uniform(-radius, radius);
            n2 += (*q)[j] * (*q)[j];
        }
        for (int j = 0; j < dim; ++j) {
            (*p)[j] = rng.uniform(-radius, radius);
            n2 += (*p)[j] * (*p)[j];
        }
        return n2 <= radius * radius;
    }

    bool contains_q_box(const Vec& q_min, const Vec& q_max) const {
        if (kind != BoxTimesMomentumBall) return true;  // ball handled via radius below
        for (int j = 0; j < dim; ++j)
            if (q_min[j] < q_lo[j] || q_max[j] > q_hi[j]) return false;
        return true;
    }
};

// ---------------------------------------------------------------------------
// Per-sample classification.
// ---------------------------------------------------------------------------

struct ClassifierConfig {
    double t_total = 409.6;   // 2^13 samples at dt 0.05
    double h = 1e-2;
    int sample_every = 5;     // sample_dt = h * sample_every
    double drift_tol = 1e-5;
    double slope_min = 0.05;
    DiophantineParams dioph;
    double escape_radius = 50.0;       // momentum runaway guard
    double energy_drift_budget = 0.02;  // leaving the tracked energy shell
    bool require_containment = false;   // count only tori contained in the region

    ChaosThresholds thresholds() const { return ChaosThresholds::for_time(t_total); }
};

struct SampleReport {
    PhaseState ic;
    double energy = 0.0;
    double ftle = 0.0;
    double megno = 0.0;
    OrbitLabel label = OrbitLabel::Undetermined;  // chaos-module label
    bool regular_torus = false;                   // frequency + Diophantine + small FTLE
    bool contained = true;
    FrequencyVector freq;
    DiophantineResult dioph;
};

/// Runs the indicator pipeline on one initial condition.  "Chaotic" is the
/// chaos-module label; "regular_torus" additionally demands a recovered
/// Diophantine frequency vector with a stable (drift-checked) fundamental.
template <class P>
inline SampleReport classify_sample(const PhaseState& ic, const P& pot,
                                    const ClassifierConfig& cfg,
                                    const PhaseRegion* containment = nullptr) {
    SampleReport rep;
    rep.ic = ic;
    rep.energy = hamiltonian(ic, pot);

    IndicatorOptions opt;
    opt.t_total = cfg.t_total;
    opt.h = cfg.h;
    opt.sample_every = cfg.sample_every;
    opt.collect_samples = true;
    opt.escape_radius = cfg.escape_radius;
    IndicatorResult ind = indicator_run(ic, pot, opt);
    rep.ftle = ind.ftle;
    rep.megno = ind.megno;

    const ChaosThresholds th = cfg.thresholds();
    const bool escaped = ind.escaped || ind.energy_drift > cfg.energy_drift_budget;
    rep.label = classify_orbit(ind.ftle, ind.megno, escaped, false, th);

    if (containment && cfg.require_containment) {
        if (containment->kind == PhaseRegion::PhaseBall) {
            double r2max = 0.0;
            for (int j = 0; j < ic.dim(); ++j) {
                const double m = std::max(std::abs(ind.q_min[j]), std::abs(ind.q_max[j]));
                r2max += m * m;
            }
            // conservative: uses only the position excursion
            rep.contained = r2max <= containment->radius * containment->radius;
        } else {
            rep.contained = containment->contains_q_box(ind.q_min, ind.q_max);
        }
    }

    if (rep.label != OrbitLabel::Chaotic && !escaped) {
        rep.freq = frequency_analysis_samples(ind.q_samples, ind.p_samples, ind.sample_dt,
                                              cfg.slope_min);
        if (rep.freq.ok() && rep.freq.drift < cfg.drift_tol) {
            rep.dioph = diophantine_check(rep.freq.omega, cfg.dioph);
            rep.regular_torus =
                rep.dioph.pass && ind.ftle < th.lambda_reg && rep.contained;
        }
    }
    // coherence: a sample can never be both a counted torus and chaotic
    if (rep.label == OrbitLabel::Chaotic) rep.regular_torus = false;
    return rep;
}

/// Classify a synthetic, exactly sampled trajectory (oracle for zero
/// potential and other closed-form flows: no integration error).
inline bool classify_exact_regular(const std::vector<std::vector<double>>& q_samples,
                                   const std::vector<std::vector<double>>& p_samples, double dt,
                                   const ClassifierConfig& cfg) {
    FrequencyVector fv = frequency_analysis_samples(q_samples, p_samples, dt, cfg.slope_min);
    if (!fv.ok() || fv.drift >= cfg.drift_tol) return false;
    return diophantine_check(fv.omega, cfg.dioph).pass;
}

// ---------------------------------------------------------------------------
// Torus-volume estimation and structure counting.
// ---------------------------------------------------------------------------

struct ToriEstimate {
    int n_samples = 0;
    int n_regular = 0;
    int n_chaotic = 0;
    int n_undetermined = 0;
    double fraction = 0.0;   // regular share of the sampled band volume
    double ci_lo = 0.0, ci_hi = 0.0;
    int component_count = 0;  // connected regular clusters on the q-grid
    std::vector<SampleReport> reports;
};

struct EmptyBandError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Wilson score interval for a binomial proportion.
inline void wilson_interval(int successes, int n, double* lo, double* hi, double z = 1.96) {
    if (n == 0) {
        *lo = 0.0;
        *hi = 1.0;
        return;
    }
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    *lo = std::max(0.0, center - half);
    *hi = std::min(1.0, center + half);
}

namespace detail {
/// Rejection-samples an initial condition in region ∩ {h1 < H < h2}.
template <class P>
inline bool draw_in_band(const P& pot, const PhaseRegion& region, double h1, double h2,
                         RngStream& rng, PhaseState* out, long max_attempts = 4000) {
    for (long a = 0; a < max_attempts; ++a) {
        Vec q, p;
        if (!region.draw(rng, &q, &p)) continue;
        PhaseState s;
        s.q = q;
        s.p = p;
        const double H = hamiltonian(s, pot);
        if (H > h1 && H < h2) {
            *out = s;
            return true;
        }
    }
    return false;
}

/// Labels connected components (3^d neighborhood) of marked cells on a
/// q-grid.  Returns per-cell component ids, 1-based; 0 for unmarked cells.
inline std::vector<int> label_components(const std::vector<char>& marked,
                                         const std::array<int, kMaxDim>& cells, int d) {
    std::size_t total = 1;
    for (int j = 0; j < d; ++j) total *= static_cast<std::size_t>(cells[j]);
    std::vector<int> component(total, 0);
    std::vector<std::size_t> stack;
    auto decode = [&](std::size_t idx, std::array<int, kMaxDim>& c) {
        for (int j = d - 1; j >= 0; --j) {
            c[j] = static_cast<int>(idx % cells[j]);
            idx /= cells[j];
        }
    };
    auto encode = [&](const std::array<int, kMaxDim>& c) {
        std::size_t idx = 0;
        for (int j = 0; j < d; ++j) idx = idx * cells[j] + c[j];
        return idx;
    };
    int components = 0;
    for (std::size_t i = 0; i < total; ++i) {
        if (!marked[i] || component[i]) continue;
        ++components;
        stack.push_back(i);
        component[i] = components;
        while (!stack.empty()) {
            const std::size_t cur = stack.back();
            stack.pop_back();
            std::array<int, kMaxDim> c{};
            decode(cur, c);
            // 3^d neighborhood
            std::array<int, kMaxDim> off{};
            for (int j = 0; j < d; ++j) off[j] = -1;
            while (true) {
                std::array<int, kMaxDim> nb{};
                bool valid = true;
                for (int j = 0; j < d; ++j) {
                    nb[j] = c[j] + off[j];
                    if (nb[j] < 0 || nb[j] >= cells[j]) valid = false;
                }
                if (valid) {
                    const std::size_t nidx = encode(nb);
                    if (marked[nidx] && !component[nidx]) {
                        component[nidx] = components;
                        stack.push_back(nidx);
                    }
                }
                int j = d - 1;
                for (; j >= 0; --j) {
                    if (off[j] < 1) {
                        ++off[j];
                        for (int k = j + 1; k < d; ++k) off[k] = -1;
                        break;
                    }
                }
                if (j < 0) break;
            }
        }
    }
    return component;
}

inline int count_components(const std::vector<char>& marked, const std::array<int, kMaxDim>& cells,
                            int d) {
    const std::vector<int> component = label_components(marked, cells, d);
    int n = 0;
    for (int c : component) n = std::max(n, c);
    return n;
}
}  // namespace detail

/// Samples initial conditions in region ∩ band, classifies each, and
/// estimates the regular-torus share of the band volume.
template <class P>
inline ToriEstimate torus_fraction(const P& pot, const PhaseRegion& region, double h1, double h2,
                                   int n_samples, RngSeed seed, const ClassifierConfig& cfg,
                                   int jobs = 1) {
    // acceptance probe for the EmptyBand guard
    {
        RngStream probe({seed.master, substream(seed.stream, 0xACCE27)});
        int hits = 0;
        const int probes = 3000;
        for (int i = 0; i < probes; ++i) {
            Vec q, p;
            if (!region.draw(probe, &q, &p)) continue;
            PhaseState s;
            s.q = q;
            s.p = p;
            const double H = hamiltonian(s, pot);
            if (H > h1 && H < h2) ++hits;
        }
        if (hits < probes / 1000)
            throw EmptyBandError("torus_fraction: band acceptance below 1e-3 in region");
    }

    ToriEstimate est;
    est.reports.resize(n_samples);
    std::vector<char> drawn(n_samples, 0);
    parallel_for(static_cast<std::size_t>(n_samples), jobs, [&](std::size_t i) {
        RngStream rng({seed.master, substream(seed.stream, i)});
        PhaseState ic;
        if (!detail::draw_in_band(pot, region, h1, h2, rng, &ic)) return;
        drawn[i] = 1;
        est.reports[i] = classify_sample(ic, pot, cfg, &region);
    });
    // drop slots whose rejection sampling failed (deterministic order)
    std::vector<SampleReport> kept;
    kept.reserve(n_samples);
    for (int i = 0; i < n_samples; ++i)
        if (drawn[i]) kept.push_back(std::move(est.reports[i]));
    est.reports = std::move(kept);

    est.n_samples = static_cast<int>(est.reports.size());
    for (const auto& r : est.reports) {
        if (r.regular_torus) ++est.n_regular;
        if (r.label == OrbitLabel::Chaotic) ++est.n_chaotic;
        if (!r.regular_torus && r.label != OrbitLabel::Chaotic) ++est.n_undetermined;
    }
    est.fraction = est.n_samples > 0 ? static_cast<double>(est.n_regular) / est.n_samples : 0.0;
    wilson_interval(est.n_regular, est.n_samples, &est.ci_lo, &est.ci_hi);
    return est;
}

struct CountBudget {
    int max_samples = 200;
    double t_total = 409.6;
};

struct StructureCount {
    int chaos_count = 0;       // chaotic energy pockets (see below)
    double tori_volume = 0.0;  // regular fraction x band volume
    double band_volume = 0.0;  // Monte Carlo estimate of |region ∩ band|
    int n_regular = 0;
    int n_chaotic = 0;
    int n_samples = 0;
    int pocket_count = 0;      // accessible components of {V < h2} in the box
    std::vector<SampleReport> reports;
};

/// The Phi proxy on one region: chaotic-structure count and torus volume,
/// both restricted to the energy band.  Distinct chaotic structures are
/// counted as connected components (3^d neighborhood on a position grid of
/// cells_per_axis^d cells) of the classically allowed sublevel set
/// {V < h2} that contain at least one Chaotic-labeled sample: disconnected
/// pockets are disjoint invariant sets, and their number scales with the
/// number of potential wells, i.e. like L^d for the trigonometric ensemble.
template <class P>
inline StructureCount count_structures(const P& pot, const PhaseRegion& region, double h1,
                                       double h2, const CountBudget& budget, RngSeed seed,
                                       ClassifierConfig cfg, int cells_per_axis, int jobs = 1) {
    cfg.t_total = budget.t_total;
    StructureCount out;

    // Monte Carlo band volume (cheap, no dynamics)
    {
        RngStream rng({seed.master, substream(seed.stream, 0xB07D)});
        const int probes = 20000;
        int inside = 0, in_band = 0;
        for (int i = 0; i < probes; ++i) {
            Vec q, p;
            if (!region.draw(rng, &q, &p)) continue;
            ++inside;
            PhaseState s;
            s.q = q;
            s.p = p;
            const double H = hamiltonian(s, pot);
            if (H > h1 && H < h2) ++in_band;
        }
        out.band_volume =
            region.sampling_box_volume() * static_cast<double>(in_band) / probes;
        if (in_band == 0) throw EmptyBandError("count_structures: empty band in region");
    }

    std::vector<SampleReport> reports(budget.max_samples);
    std::vector<char> drawn(budget.max_samples, 0);
    parallel_for(static_cast<std::size_t>(budget.max_samples), jobs, [&](std::size_t i) {
        RngStream rng({seed.master, substream(seed.stream, i, 0x5A)});
        PhaseState ic;
        if (!detail::draw_in_band(pot, region, h1, h2, rng, &ic)) return;
        drawn[i] = 1;
        reports[i] = classify_sample(ic, pot, cfg, &region);
    });
    for (int i = 0; i < budget.max_samples; ++i)
        if (drawn[i]) out.reports.push_back(std::move(reports[i]));

    out.n_samples = static_cast<int>(out.reports.size());
    for (const auto& r : out.reports) {
        if (r.regular_torus) ++out.n_regular;
        if (r.label == OrbitLabel::Chaotic) ++out.n_chaotic;
    }
    const double frac =
        out.n_samples > 0 ? static_cast<double>(out.n_regular) / out.n_samples : 0.0;
    out.tori_volume = frac * out.band_volume;

    // chaotic energy pockets on the position grid
    if (region.kind == PhaseRegion::BoxTimesMomentumBall) {
        const int d = region.dim;
        std::array<int, kMaxDim> cells{};
        for (int j = 0; j < d; ++j) cells[j] = cells_per_axis;
        std::size_t total = 1;
        for (int j = 0; j < d; ++j) total *= cells_per_axis;

        auto cell_of = [&](const Vec& q) {
            std::size_t idx = 0;
            for (int j = 0; j < d; ++j) {
                const double rel = (q[j] - region.q_lo[j]) / (region.q_hi[j] - region.q_lo[j]);
                const int c =
                    std::clamp(static_cast<int>(rel * cells_per_axis), 0, cells_per_axis - 1);
                idx = idx * cells_per_axis + c;
            }
            return idx;
        };

        // allowed = sublevel set {V < h2} sampled at cell centers
        std::vector<char> allowed(total, 0);
        {
            std::array<int, kMaxDim> c{};
            for (std::size_t idx = 0; idx < total; ++idx) {
                std::size_t rest = idx;
                for (int j = d - 1; j >= 0; --j) {
                    c[j] = static_cast<int>(rest % cells_per_axis);
                    rest /= cells_per_axis;
                }
                Vec q(d);
                for (int j = 0; j < d; ++j)
                    q[j] = region.q_lo[j] + (c[j] + 0.5) * (region.q_hi[j] - region.q_lo[j]) /
                                                cells_per_axis;
                if (pot.value(q) < h2) allowed[idx] = 1;
            }
        }
        const std::vector<int> component = detail::label_components(allowed, cells, d);
        int n_components = 0;
        for (std::size_t i = 0; i < total; ++i) n_components = std::max(n_components, component[i]);
        out.pocket_count = n_components;

        std::vector<char> pocket_chaotic(static_cast<std::size_t>(n_components) + 1, 0);
        for (const auto& r : out.reports) {
            if (r.label != OrbitLabel::Chaotic) continue;
            const int comp = component[cell_of(r.ic.q)];
            if (comp > 0) pocket_chaotic[comp] = 1;
        }
        for (int c = 1; c <= n_components; ++c)
            if (pocket_chaotic[c]) ++out.chaos_count;
    } else if (out.n_chaotic > 0) {
        out.chaos_count = 1;  // ball regions: detection-level count
    }
    return out;
}

}  // namespace hamiltonia
