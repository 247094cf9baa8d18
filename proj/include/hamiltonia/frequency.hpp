#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "hamiltonia/dynamics.hpp"
#include "hamiltonia/vec.hpp"

namespace hamiltonia {

namespace detail {

/// In-place radix-2 Cooley-Tukey FFT; n must be a power of two.
inline void fft_pow2(std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    if (n == 0 || (n & (n - 1)) != 0) throw std::invalid_argument("fft_pow2: size not a power of 2");
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * M_PI / static_cast<double>(len);
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

/// Hann-windowed correlation amplitude |<f, e^{i w t}>| at frequency w.
inline std::complex<double> windowed_projection(const std::vector<std::complex<double>>& f,
                                                double dt, double omega) {
    const std::size_t n = f.size();
    std::complex<double> acc(0.0, 0.0);
    double wsum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double w = 1.0 - std::cos(2.0 * M_PI * k / static_cast<double>(n));  // Hann, mean 1
        const double t = dt * static_cast<double>(k);
        acc += w * f[k] * std::complex<double>(std::cos(omega * t), -std::sin(omega * t));
        wsum += w;
    }
    return acc / wsum;
}

/// Golden-section maximization of |projection| over [lo, hi].
inline double maximize_projection(const std::vector<std::complex<double>>& f, double dt, double lo,
                                  double hi) {
    const double gr = 0.61803398874989484820;
    double a = lo, b = hi;
    double x1 = b - gr * (b - a);
    double x2 = a + gr * (b - a);
    double f1 = std::abs(windowed_projection(f, dt, x1));
    double f2 = std::abs(windowed_projection(f, dt, x2));
    for (int it = 0; it < 80 && (b - a) > 1e-13; ++it) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = std::abs(windowed_projection(f, dt, x2));
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = std::abs(windowed_projection(f, dt, x1));
        }
    }
    return 0.5 * (a + b);
}

}  // namespace detail

struct SpectralLine {
    double omega = 0.0;
    std::complex<double> amplitude;
};

struct NaffResult {
    std::vector<SpectralLine> lines;  // strongest first
    double residual_rms = 0.0;
    bool found = false;
};

/// Refined-Fourier frequency extraction: FFT peak of the Hann-windowed
/// signal, then local maximization of the windowed correlation, then
/// subtraction of the fitted exponential; repeated n_lines times.
/// The signal must have power-of-two length.
inline NaffResult naff(std::vector<std::complex<double>> f, double dt, int n_lines,
                       double min_amplitude = 1e-9) {
    NaffResult out;
    const std::size_t n = f.size();
    if (n < 16) throw std::invalid_argument("naff: signal too short");
    const double t_span = dt * static_cast<double>(n);
    const double bin = 2.0 * M_PI / t_span;
    for (int line = 0; line < n_lines; ++line) {
        // windowed FFT for the coarse peak
        std::vector<std::complex<double>> w(n);
        for (std::size_t k = 0; k < n; ++k) {
            const double win = 1.0 - std::cos(2.0 * M_PI * k / static_cast<double>(n));
            w[k] = win * f[k];
        }
        detail::fft_pow2(w);
        std::size_t peak = 0;
        double best = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double a = std::abs(w[k]);
            if (a > best) {
                best = a;
                peak = k;
            }
        }
        // map FFT bin to signed frequency
        double omega0 = bin * static_cast<double>(peak);
        if (peak > n / 2) omega0 -= bin * static_cast<double>(n);
        const double omega =
            detail::maximize_projection(f, dt, omega0 - 1.5 * bin, omega0 + 1.5 * bin);
        const std::complex<double> amp = detail::windowed_projection(f, dt, omega);
        if (std::abs(amp) < min_amplitude) break;
        out.lines.push_back({omega, amp});
        for (std::size_t k = 0; k < n; ++k) {
            const double t = dt * static_cast<double>(k);
            f[k] -= amp * std::complex<double>(std::cos(omega * t), std::sin(omega * t));
        }
    }
    double res = 0.0;
    for (const auto& v : f) res += std::norm(v);
    out.residual_rms = std::sqrt(res / static_cast<double>(n));
    out.found = !out.lines.empty();
    std::sort(out.lines.begin(), out.lines.end(),
              [](const SpectralLine& a, const SpectralLine& b) {
                  return std::abs(a.amplitude) > std::abs(b.amplitude);
              });
    return out;
}

enum class FrequencyStatus { Ok, PeakNotFound, TooShort };

struct FrequencyVector {
    Vec omega;          // fundamental |frequency| per degree of freedom
    Vec amplitude;      // dominant oscillation amplitude per dof
    double residual = 0.0;
    double drift = 0.0;  // max_j |omega_j(first half) - omega_j(second half)|
    FrequencyStatus status = FrequencyStatus::Ok;

    bool ok() const { return status == FrequencyStatus::Ok; }
};

namespace detail {

struct DofSignal {
    std::vector<double> q;  // unwrapped positions
    std::vector<double> p;
};

/// Fundamental frequency of one degree of freedom over sample range
/// [begin, begin+len).  Rotation-dominated motion reports the mean angular
/// velocity (least-squares slope of the unwrapped position); librations
/// report the strongest spectral line of q~ + i p~.
struct DofFrequency {
    double omega = 0.0;
    double amplitude = 0.0;
    bool ok = false;
};

inline DofFrequency dof_frequency(const DofSignal& sig, std::size_t begin, std::size_t len,
                                  double dt, double slope_min) {
    DofFrequency out;
    // least-squares line through q(t)
    double sy = 0.0, sty = 0.0;
    const double n = static_cast<double>(len);
    for (std::size_t k = 0; k < len; ++k) {
        sy += sig.q[begin + k];
        sty += static_cast<double>(k) * sig.q[begin + k];
    }
    const double st = 0.5 * n * (n - 1.0);
    const double stt = n * (n - 1.0) * (2.0 * n - 1.0) / 6.0;
    const double denom = n * stt - st * st;
    const double slope_idx = (n * sty - st * sy) / denom;
    const double slope = slope_idx / dt;
    const double mean_q = sy / n;
    double mean_p = 0.0;
    for (std::size_t k = 0; k < len; ++k) mean_p += sig.p[begin + k];
    mean_p /= n;

    std::vector<std::complex<double>> z(len);
    double rms = 0.0;
    for (std::size_t k = 0; k < len; ++k) {
        const double qd = sig.q[begin + k] - mean_q - slope_idx * (static_cast<double>(k) - 0.5 * (n - 1.0));
        const double pd = sig.p[begin + k] - mean_p;
        z[k] = {qd, pd};
        rms += qd * qd + pd * pd;
    }
    rms = std::sqrt(rms / n);

    if (std::abs(slope) > slope_min) {
        // Rotational dof: the torus frequency is the rotation rate.  The
        // least-squares slope carries an O(A/T^2) bias from the oscillating
        // part, so refine it as the strongest line of the phase signal
        // e^{i q(t)}, which is exactly quasi-periodic with fundamental at
        // the rotation rate.
        std::vector<std::complex<double>> ph(len);
        for (std::size_t k = 0; k < len; ++k)
            ph[k] = {std::cos(sig.q[begin + k]), std::sin(sig.q[begin + k])};
        NaffResult nr = naff(std::move(ph), dt, 1, 1e-12);
        out.omega = nr.found ? std::abs(nr.lines[0].omega) : std::abs(slope);
        out.amplitude = rms;
        out.ok = true;
        return out;
    }
    if (rms < 1e-10) {
        // frozen dof
        out.omega = 0.0;
        out.amplitude = 0.0;
        out.ok = true;
        return out;
    }
    NaffResult nr = naff(std::move(z), dt, 1, 1e-6 * rms);
    if (!nr.found) {
        out.ok = false;
        return out;
    }
    out.omega = std::abs(nr.lines[0].omega);
    out.amplitude = std::abs(nr.lines[0].amplitude);
    out.ok = true;
    return out;
}

inline std::size_t pow2_floor(std::size_t n) {
    std::size_t p = 1;
    while (2 * p <= n) p *= 2;
    return p;
}

}  // namespace detail

/// Frequency-map analysis of uniformly sampled phase-space data.  The drift
/// field compares fundamentals recovered from the two halves of the record;
/// quasi-periodic orbits give drifts at the refinement accuracy while
/// chaotic orbits drift at the diffusion scale.
inline FrequencyVector frequency_analysis_samples(const std::vector<std::vector<double>>& q_dof,
                                                  const std::vector<std::vector<double>>& p_dof,
                                                  double dt, double slope_min = 0.05) {
    const int d = static_cast<int>(q_dof.size());
    FrequencyVector out;
    out.omega = Vec(d);
    out.amplitude = Vec(d);
    const std::size_t n_total = q_dof[0].size();
    const std::size_t half = detail::pow2_floor(n_total / 2);
    const std::size_t full = detail::pow2_floor(n_total);
    if (full < 1024) {
        out.status = FrequencyStatus::TooShort;
        return out;
    }
    double drift = 0.0;
    for (int j = 0; j < d; ++j) {
        detail::DofSignal sig{q_dof[j], p_dof[j]};
        const auto whole = detail::dof_frequency(sig, 0, full, dt, slope_min);
        const auto first = detail::dof_frequency(sig, 0, half, dt, slope_min);
        const auto second = detail::dof_frequency(sig, n_total - half, half, dt, slope_min);
        if (!whole.ok || !first.ok || !second.ok) {
            out.status = FrequencyStatus::PeakNotFound;
            return out;
        }
        out.omega[j] = whole.omega;
        out.amplitude[j] = whole.amplitude;
        drift = std::max(drift, std::abs(first.omega - second.omega));
    }
    out.drift = drift;
    out.status = FrequencyStatus::Ok;
    return out;
}

/// Convenience overload for recorded trajectories (n_freq = one fundamental
/// per degree of freedom).  Sampling must be uniform; positions are used as
/// recorded, i.e. unwrapped by the integrator.
inline FrequencyVector frequency_analysis(const Trajectory& traj, int /*n_freq*/ = 1,
                                          double slope_min = 0.05) {
    if (traj.states.size() < 2) throw std::invalid_argument("frequency_analysis: empty trajectory");
    const int d = traj.states[0].dim();
    const double dt = traj.states[1].t - traj.states[0].t;
    std::vector<std::vector<double>> q(d), p(d);
    for (int j = 0; j < d; ++j) {
        q[j].reserve(traj.states.size());
        p[j].reserve(traj.states.size());
    }
    for (const auto& s : traj.states)
        for (int j = 0; j < d; ++j) {
            q[j].push_back(s.q[j]);
            p[j].push_back(s.p[j]);
        }
    return frequency_analysis_samples(q, p, dt, slope_min);
}

}  // namespace hamiltonia
