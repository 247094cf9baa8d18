#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "hamiltonia/ensemble.hpp"
#include "hamiltonia/parallel.hpp"
#include "hamiltonia/tori.hpp"

namespace hamiltonia {

// ---------------------------------------------------------------------------
// N-grid on the torus: the (2N)^d open cubes of side pi/N,
// Q_k = prod_j (pi k_j / N, pi (k_j + 1) / N), k in Z^d ∩ [-N, N-1]^d.
// ---------------------------------------------------------------------------

struct GridSpec {
    int N = 1;
    int d = 2;

    int n_cubes() const {
        int n = 1;
        for (int j = 0; j < d; ++j) n *= 2 * N;
        return n;
    }
    MultiIndex cube_index(int flat) const {
        MultiIndex k{};
        for (int j = d - 1; j >= 0; --j) {
            k[j] = flat % (2 * N) - N;
            flat /= 2 * N;
        }
        return k;
    }
    void cube_bounds(const MultiIndex& k, Vec* lo, Vec* hi) const {
        *lo = Vec(d);
        *hi = Vec(d);
        for (int j = 0; j < d; ++j) {
            (*lo)[j] = M_PI * k[j] / N;
            (*hi)[j] = M_PI * (k[j] + 1) / N;
        }
    }
    double cube_volume() const {
        double v = 1.0;
        for (int j = 0; j < d; ++j) v *= M_PI / N;
        return v;
    }
};

// ---------------------------------------------------------------------------
// The Theorem-1 experiment at desk scale.
// ---------------------------------------------------------------------------

struct SurveyBudget {
    int traj_per_cube = 200;
    double t_total = 500.0;  // cap; the classifier uses min(t_total, its default)
};

struct SurveyConfig {
    int d = 2;
    int N = 1;
    std::vector<int> L_list{3, 6, 12};
    int trials = 20;
    // Default band for the random ensemble: a window just below the mean
    // potential level, where classically-allowed pockets trap librations
    // (KAM tori) while their upper reaches carry chaotic layers.  Bands well
    // above the pointwise std (e.g. +1.5 sigma and up) are purely chaotic at
    // desk scale.  Re-tunable by config.
    double h1 = -0.8;
    double h2 = -0.3;
    SurveyBudget budget;
    RngSeed seed{0, 0};
    int jobs = 1;
    ClassifierConfig classifier;

    /// Pocket-counting grid: cells must resolve individual wells of the
    /// degree-L potential, whose linear scale is ~ 2 pi / L.
    int counting_cells(int L) const { return std::clamp(4 * L / N, 16, 72); }
};

struct CubeOutcome {
    MultiIndex k{};
    bool chaos_found = false;  // >= 3 initial conditions labeled Chaotic
    bool tori_found = false;   // >= 1 regular Diophantine torus detected
    int n_samples = 0;
    int n_chaotic = 0;
    int n_regular = 0;
    int chaos_count = 0;
    double tori_volume = 0.0;
    double band_volume = 0.0;
    bool budget_exhausted = false;  // rejection sampling failed in the band
};

struct TrialOutcome {
    int L = 0;
    int trial = 0;
    std::vector<CubeOutcome> cubes;
    bool all_cubes_both = false;
    double total_chaos_count = 0.0;
    double total_tori_volume = 0.0;
};

struct LSummary {
    int L = 0;
    int trials = 0;
    int successes = 0;
    double success_freq = 0.0;
    double ci_lo = 0.0, ci_hi = 0.0;
    double mean_chaos_count = 0.0;
    double mean_tori_volume = 0.0;
};

struct SurveyResult {
    SurveyConfig config;
    std::vector<TrialOutcome> trials;  // ordered by (L index, trial)
    std::vector<LSummary> summary;
};

namespace detail {
inline std::uint64_t survey_pot_stream(const SurveyConfig& cfg, int L, int trial) {
    return substream(cfg.seed.stream, 1, static_cast<std::uint64_t>(L), trial);
}
inline std::uint64_t survey_cube_stream(const SurveyConfig& cfg, int L, int trial, int cube) {
    return substream(cfg.seed.stream, 2, static_cast<std::uint64_t>(L),
                     (static_cast<std::uint64_t>(trial) << 20) | static_cast<std::uint64_t>(cube));
}
}  // namespace detail

/// One (realization, cube) cell of the survey: classify up to the budget and
/// derive detection flags plus the counting proxies.
inline CubeOutcome survey_cube(const TorusPotential& pot, const GridSpec& grid,
                               const MultiIndex& k, const SurveyConfig& cfg, RngSeed cube_seed) {
    CubeOutcome out;
    out.k = k;
    Vec lo, hi;
    grid.cube_bounds(k, &lo, &hi);
    // maximal speed in the band over this cube: |p| <= sqrt(2 (h2 - min V)),
    // with the floor estimated on a coarse grid
    double v_min = 1e300;
    {
        const int g = 24;
        MultiIndex c{};
        do {
            Vec q(cfg.d);
            for (int j = 0; j < cfg.d; ++j)
                q[j] = lo[j] + (c[j] + 0.5) * (hi[j] - lo[j]) / g;
            v_min = std::min(v_min, pot.value(q));
        } while (detail::next_index(c, cfg.d, 0, g - 1));
    }
    const double speed2 = 2.0 * (cfg.h2 - v_min) + 0.25;
    if (speed2 <= 0.0) {
        out.budget_exhausted = true;  // cube sits entirely above the band
        return out;
    }
    PhaseRegion region = PhaseRegion::box(lo, hi, std::sqrt(speed2));

    ClassifierConfig ccfg = cfg.classifier;
    ccfg.t_total = std::min(ccfg.t_total, cfg.budget.t_total);

    CountBudget budget{cfg.budget.traj_per_cube, ccfg.t_total};
    try {
        StructureCount sc = count_structures(pot, region, cfg.h1, cfg.h2, budget, cube_seed, ccfg,
                                             cfg.counting_cells(pot.degree()), 1);
        out.n_samples = sc.n_samples;
        out.n_chaotic = sc.n_chaotic;
        out.n_regular = sc.n_regular;
        out.chaos_count = sc.chaos_count;
        out.tori_volume = sc.tori_volume;
        out.band_volume = sc.band_volume;
        out.chaos_found = sc.n_chaotic >= 3;
        out.tori_found = sc.n_regular >= 1;
        out.budget_exhausted = sc.n_samples < cfg.budget.traj_per_cube / 2;
    } catch (const EmptyBandError&) {
        out.budget_exhausted = true;  // counted as failure, conservatively
    }
    return out;
}

/// Runs the full survey: for every L and trial, sample V^L, test each N-grid
/// cube for coexisting chaos and Diophantine tori in the band, and aggregate
/// per-L success frequencies with binomial confidence intervals.
/// Bitwise deterministic under the seed: all randomness is pre-split by
/// (L, trial, cube) stream ids and aggregation order is fixed.
inline SurveyResult run_survey(const SurveyConfig& cfg) {
    if (cfg.trials < 1) throw std::invalid_argument("run_survey: trials >= 1");
    if (cfg.L_list.empty()) throw std::invalid_argument("run_survey: empty L list");
    GridSpec grid{cfg.N, cfg.d};
    SurveyResult result;
    result.config = cfg;

    const int n_l = static_cast<int>(cfg.L_list.size());
    const int n_cubes = grid.n_cubes();
    result.trials.resize(static_cast<std::size_t>(n_l) * cfg.trials);
    for (int li = 0; li < n_l; ++li)
        for (int t = 0; t < cfg.trials; ++t) {
            auto& tr = result.trials[static_cast<std::size_t>(li) * cfg.trials + t];
            tr.L = cfg.L_list[li];
            tr.trial = t;
            tr.cubes.resize(n_cubes);
        }

    // flat task list over (L, trial, cube); workers fill disjoint slots
    const std::size_t n_tasks = static_cast<std::size_t>(n_l) * cfg.trials * n_cubes;
    parallel_for(n_tasks, cfg.jobs, [&](std::size_t task) {
        const int cube = static_cast<int>(task % n_cubes);
        const int t = static_cast<int>((task / n_cubes) % cfg.trials);
        const int li = static_cast<int>(task / (static_cast<std::size_t>(n_cubes) * cfg.trials));
        const int L = cfg.L_list[li];
        TorusPotential pot = sample_torus_potential(
            cfg.d, L, {cfg.seed.master, detail::survey_pot_stream(cfg, L, t)});
        RngSeed cube_seed{cfg.seed.master, detail::survey_cube_stream(cfg, L, t, cube)};
        result.trials[static_cast<std::size_t>(li) * cfg.trials + t].cubes[cube] =
            survey_cube(pot, grid, grid.cube_index(cube), cfg, cube_seed);
    });

    for (auto& tr : result.trials) {
        tr.all_cubes_both = true;
        tr.total_chaos_count = 0;
        tr.total_tori_volume = 0;
        for (const auto& c : tr.cubes) {
            if (!(c.chaos_found && c.tori_found)) tr.all_cubes_both = false;
            tr.total_chaos_count += c.chaos_count;
            tr.total_tori_volume += c.tori_volume;
        }
    }
    for (int li = 0; li < n_l; ++li) {
        LSummary s;
        s.L = cfg.L_list[li];
        s.trials = cfg.trials;
        for (int t = 0; t < cfg.trials; ++t) {
            const auto& tr = result.trials[static_cast<std::size_t>(li) * cfg.trials + t];
            if (tr.all_cubes_both) ++s.successes;
            s.mean_chaos_count += tr.total_chaos_count;
            s.mean_tori_volume += tr.total_tori_volume;
        }
        s.success_freq = static_cast<double>(s.successes) / cfg.trials;
        s.mean_chaos_count /= cfg.trials;
        s.mean_tori_volume /= cfg.trials;
        wilson_interval(s.successes, s.trials, &s.ci_lo, &s.ci_hi);
        result.summary.push_back(s);
    }
    return result;
}

/// Mean structure counts over a covering of the torus (the N-grid itself):
/// per-L mean total chaos-cluster count and torus volume.
struct ExpectedCounts {
    int L = 0;
    double mean_chaos_count = 0.0;
    double mean_tori_volume = 0.0;
};

inline std::vector<ExpectedCounts> expected_counts(const SurveyResult& result) {
    std::vector<ExpectedCounts> out;
    for (const auto& s : result.summary)
        out.push_back({s.L, s.mean_chaos_count, s.mean_tori_volume});
    return out;
}

// ---------------------------------------------------------------------------
// Rescaling equivalence between X^L and the rescaled-potential flow:
// (q(t), p(t)) = (q0 + (Lambda/L) x(L t / Lambda), P(L t / Lambda)).
// ---------------------------------------------------------------------------

struct RescalingCheck {
    double max_state_deviation = 0.0;   // sup over matched sample times
    double max_energy_mismatch = 0.0;   // energy identity along matched times
    int steps_q = 0;
    int steps_x = 0;
};

/// Integrates both sides with steps matched through the time rescaling
/// (h_x = (L/Lambda) h_q / x_refine) and reports the sup deviation after
/// mapping.  With x_refine = 1 the two discrete flows are step-conjugate,
/// so the deviation measures only roundoff; larger x_refine turns the x side
/// into a reference solution and the deviation into the q-side integrator
/// error, which converges at second order.
inline RescalingCheck rescaling_check(const TorusPotential& pot, const Vec& q0, double lambda,
                                      const PhaseState& x0, double t_end, double h_q,
                                      int x_refine = 1, Scheme scheme = Scheme::Leapfrog2) {
    if (lambda <= 0) throw std::invalid_argument("rescaling_check: Lambda > 0");
    const int d = pot.dim();
    const double L = pot.degree();
    const double scale = lambda / L;  // position scale Lambda/L
    RescaledTorusPotential resc(pot, q0, lambda);

    PhaseState qs;
    qs.q = q0;
    for (int j = 0; j < d; ++j) qs.q[j] += scale * x0.q[j];
    qs.p = x0.p;

    PhaseState xs = x0;
    const long n_q = static_cast<long>(std::llround(t_end / h_q));
    const double h_x = (L / lambda) * h_q / x_refine;

    RescalingCheck out;
    out.steps_q = static_cast<int>(n_q);
    out.steps_x = static_cast<int>(n_q) * x_refine;
    for (long k = 0; k < n_q; ++k) {
        step(qs, h_q, pot, scheme);
        for (int r = 0; r < x_refine; ++r) step(xs, h_x, resc, scheme);
        double dev = 0.0;
        for (int j = 0; j < d; ++j) {
            dev = std::max(dev, std::abs(qs.q[j] - (q0[j] + scale * xs.q[j])));
            dev = std::max(dev, std::abs(qs.p[j] - xs.p[j]));
        }
        out.max_state_deviation = std::max(out.max_state_deviation, dev);
        const double e_mismatch = std::abs(hamiltonian(qs, pot) - hamiltonian(xs, resc));
        out.max_energy_mismatch = std::max(out.max_energy_mismatch, e_mismatch);
    }
    return out;
}

}  // namespace hamiltonia
