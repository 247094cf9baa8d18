#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "hamiltonia/rng.hpp"
#include "hamiltonia/vec.hpp"

namespace hamiltonia {

using Complex = std::complex<double>;
using MultiIndex = std::array<int, kMaxDim>;

namespace detail {

/// sinc in the pi convention, f(t) = sin(pi t)/(pi t), with derivatives.
/// Series branch near t = 0; elsewhere the ODE u f'' + 2 f' + pi^2 u f = 0
/// is unrolled into direct formulas.
inline void sinc_pi_d012(double t, double* f, double* f1, double* f2) {
    const double pt = M_PI * t;
    if (std::abs(pt) < 0.05) {
        const double x = pt * pt;
        // sin(y)/y = 1 - y^2/6 + y^4/120 - y^6/5040 + y^8/362880
        const double s = 1.0 - x / 6.0 * (1.0 - x / 20.0 * (1.0 - x / 42.0 * (1.0 - x / 72.0)));
        // d/dy [sin y / y] = -y/3 (1 - y^2/10 (1 - y^2/28 (1 - y^2/54)))
        const double s1 = -pt / 3.0 * (1.0 - x / 10.0 * (1.0 - x / 28.0 * (1.0 - x / 54.0)));
        // d2/dy2 [sin y / y] = -1/3 + y^2/10 * ... (termwise)
        const double s2 = -1.0 / 3.0 + x * (0.1 - x * (1.0 / 168.0 - x / 6480.0));
        if (f) *f = s;
        if (f1) *f1 = M_PI * s1;
        if (f2) *f2 = M_PI * M_PI * s2;
        return;
    }
    const double sp = std::sin(pt);
    const double cp = std::cos(pt);
    const double v = sp / pt;
    if (f) *f = v;
    if (f1) *f1 = M_PI * (cp - v) / pt;
    if (f2) *f2 = M_PI * M_PI * (-v - 2.0 * (cp - v) / (pt * pt));
    return;
}

/// dirichlet kernel factor s(u) = sin(u)/u and derivatives up to order 4.
/// Uses u s'' + 2 s' + u s = 0 and its derivatives away from 0; the Taylor
/// series s(u) = sum_k (-1)^k u^{2k}/(2k+1)! near 0.
inline void sin_over_x_derivs(double u, int order, double* out) {
    if (std::abs(u) < 0.5) {
        for (int m = 0; m <= order; ++m) {
            double acc = 0.0;
            double fac = 1.0;  // (2k+1)!
            for (int k = 0; k <= 14; ++k) {
                if (k > 0) fac *= (2 * k) * (2 * k + 1);
                if (2 * k >= m) {
                    double falling = 1.0;  // (2k)(2k-1)...(2k-m+1)
                    for (int t = 0; t < m; ++t) falling *= (2 * k - t);
                    double upow = 1.0;
                    for (int t = 0; t < 2 * k - m; ++t) upow *= u;
                    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
                    acc += sign * falling * upow / fac;
                }
            }
            out[m] = acc;
        }
        return;
    }
    const double s = std::sin(u) / u;
    const double c = std::cos(u);
    out[0] = s;
    if (order >= 1) out[1] = (c - s) / u;
    if (order >= 2) out[2] = -s - 2.0 * out[1] / u;
    if (order >= 3) out[3] = (-3.0 * out[2] - s) / u - out[1];
    if (order >= 4) out[4] = (-4.0 * out[3] - 2.0 * out[1]) / u - out[2];
}

/// Lexicographic odometer over the integer box [-L, L]^d.  Returns false
/// when the scan is complete.
inline bool next_index(MultiIndex& n, int d, int lo, int hi) {
    for (int j = d - 1; j >= 0; --j) {
        if (n[j] < hi) {
            ++n[j];
            for (int k = j + 1; k < d; ++k) n[k] = lo;
            return true;
        }
    }
    return false;
}

inline bool is_zero(const MultiIndex& n, int d) {
    for (int j = 0; j < d; ++j)
        if (n[j] != 0) return false;
    return true;
}

/// Canonical representative of a Hermitian pair {n, -n}: first nonzero
/// component positive.
inline bool is_canonical(const MultiIndex& n, int d) {
    for (int j = 0; j < d; ++j) {
        if (n[j] > 0) return true;
        if (n[j] < 0) return false;
    }
    return false;  // zero mode
}

}  // namespace detail

// ---------------------------------------------------------------------------
// TorusPotential: V(q) = d_L^{-1/2} sum_{0<|n|_inf<=L} a_n e^{i n.q} on T^d,
// with the Hermitian constraint a_n = conj(a_{-n}) enforcing real values.
// ---------------------------------------------------------------------------

class TorusPotential {
public:
    // Evaluation uses stack tables of size 2L+1 per axis.
    static constexpr int kMaxDegree = 31;

    TorusPotential() = default;
    TorusPotential(int d, int L)
        : dim_(d), degree_(L), coeffs_(box_size(d, L), Complex(0, 0)) {
        if (d < 1 || d > kMaxDim) throw std::invalid_argument("TorusPotential: bad dimension");
        if (L < 1 || L > kMaxDegree)
            throw std::invalid_argument("TorusPotential: degree must be in [1, 31]");
        double dl = 1.0;
        for (int j = 0; j < d; ++j) dl *= static_cast<double>(2 * L + 1);
        norm_const_ = dl - 1.0;
        inv_sqrt_norm_ = 1.0 / std::sqrt(norm_const_);
    }

    int dim() const { return dim_; }
    int degree() const { return degree_; }
    double norm_const() const { return norm_const_; }
    int n_modes() const { return static_cast<int>(norm_const_); }

    Complex coeff(const MultiIndex& n) const { return coeffs_[flat_index(n)]; }
    void set_coeff(const MultiIndex& n, Complex a) {
        // Hermitian pair written together so realness cannot be broken.
        coeffs_[flat_index(n)] = a;
        MultiIndex m{};
        for (int j = 0; j < dim_; ++j) m[j] = -n[j];
        coeffs_[flat_index(m)] = std::conj(a);
    }

    /// Value, gradient and Hessian in one coefficient pass.  Accumulation is
    /// over Hermitian pairs, so every output is exactly real.
    void eval(const Vec& q, int order, double* value, Vec* grad, Mat* hess) const {
        const int d = dim_, L = degree_;
        // per-axis tables e^{i m q_j}, m = -L..L, built by recurrence
        std::array<std::array<Complex, 64>, kMaxDim> table;
        for (int j = 0; j < d; ++j) {
            const Complex step(std::cos(q[j]), std::sin(q[j]));
            Complex cur(1.0, 0.0);
            table[j][L] = cur;
            for (int m = 1; m <= L; ++m) {
                cur *= step;
                table[j][L + m] = cur;
                table[j][L - m] = std::conj(cur);
            }
        }
        double v = 0.0;
        Vec g(d);
        Mat h(d, d);
        MultiIndex n{};
        for (int j = 0; j < d; ++j) n[j] = -L;
        do {
            if (!detail::is_canonical(n, d)) continue;
            Complex e = coeffs_[flat_index(n)];
            for (int j = 0; j < d; ++j) e *= table[j][L + n[j]];
            const double re = 2.0 * e.real();
            const double im = 2.0 * e.imag();
            v += re;
            if (order >= 1)
                for (int j = 0; j < d; ++j) g[j] -= n[j] * im;
            if (order >= 2)
                for (int j = 0; j < d; ++j)
                    for (int k = j; k < d; ++k) h(j, k) -= n[j] * n[k] * re;
        } while (detail::next_index(n, d, -L, L));
        if (value) *value = v * inv_sqrt_norm_;
        if (grad && order >= 1) *grad = g * inv_sqrt_norm_;
        if (hess && order >= 2) {
            for (int j = 0; j < d; ++j)
                for (int k = 0; k < j; ++k) h(j, k) = h(k, j);
            for (int j = 0; j < d; ++j)
                for (int k = 0; k < d; ++k) h(j, k) *= inv_sqrt_norm_;
            *hess = h;
        }
    }

    double value(const Vec& q) const {
        double v;
        eval(q, 0, &v, nullptr, nullptr);
        return v;
    }
    void gradient(const Vec& q, Vec& g) const { eval(q, 1, nullptr, &g, nullptr); }
    void hessian(const Vec& q, Mat& h) const { eval(q, 2, nullptr, nullptr, &h); }

    /// Derivative d^alpha V at q for |alpha| <= 2 (used by the covariance
    /// diagnostics).
    double derivative(const Vec& q, const MultiIndex& alpha) const {
        int total = 0;
        for (int j = 0; j < dim_; ++j) total += alpha[j];
        if (total == 0) return value(q);
        if (total == 1) {
            Vec g(dim_);
            gradient(q, g);
            for (int j = 0; j < dim_; ++j)
                if (alpha[j] == 1) return g[j];
        }
        if (total == 2) {
            Mat h(dim_, dim_);
            hessian(q, h);
            int first = -1, second = -1;
            for (int j = 0; j < dim_; ++j) {
                for (int c = 0; c < alpha[j]; ++c) {
                    if (first < 0) first = j;
                    else second = j;
                }
            }
            return h(first, second);
        }
        throw std::invalid_argument("TorusPotential::derivative: |alpha| <= 2 only");
    }

    /// Visits coefficients in lexicographic n order, skipping the zero mode.
    template <class F>
    void for_each_mode(F&& fn) const {
        MultiIndex n{};
        for (int j = 0; j < dim_; ++j) n[j] = -degree_;
        do {
            if (detail::is_zero(n, dim_)) continue;
            fn(n, coeffs_[flat_index(n)]);
        } while (detail::next_index(n, dim_, -degree_, degree_));
    }

private:
    static std::size_t box_size(int d, int L) {
        std::size_t s = 1;
        for (int j = 0; j < d; ++j) s *= static_cast<std::size_t>(2 * L + 1);
        return s;
    }
    std::size_t flat_index(const MultiIndex& n) const {
        std::size_t idx = 0;
        for (int j = 0; j < dim_; ++j) idx = idx * (2 * degree_ + 1) + (n[j] + degree_);
        return idx;
    }

    int dim_ = 0;
    int degree_ = 0;
    double norm_const_ = 0.0;
    double inv_sqrt_norm_ = 0.0;
    std::vector<Complex> coeffs_;
};

/// Draws a potential from the trigonometric ensemble: one N(0,1/2)+iN(0,1/2)
/// coefficient per Hermitian pair, assigned in lexicographic order of the
/// canonical representative.  Deterministic under the seed.
inline TorusPotential sample_torus_potential(int d, int L, RngSeed seed) {
    if (d < 1) throw std::invalid_argument("sample_torus_potential: d >= 1 required");
    if (L < 1) throw std::invalid_argument("sample_torus_potential: L >= 1 required");
    TorusPotential pot(d, L);
    RngStream rng(seed);
    MultiIndex n{};
    for (int j = 0; j < d; ++j) n[j] = -L;
    do {
        if (!detail::is_canonical(n, d)) continue;
        pot.set_coeff(n, rng.normal_complex_halfvar());
    } while (detail::next_index(n, d, -L, L));
    return pot;
}

// ---------------------------------------------------------------------------
// Rescaled potential V^{L,q0}(x) = V^L(q0 + Lambda x / L).
// ---------------------------------------------------------------------------

class RescaledTorusPotential {
public:
    RescaledTorusPotential(const TorusPotential& base, Vec q0, double lambda)
        : base_(&base), q0_(q0), scale_(lambda / base.degree()) {
        if (lambda <= 0) throw std::invalid_argument("RescaledTorusPotential: Lambda > 0");
    }

    int dim() const { return base_->dim(); }
    double scale() const { return scale_; }

    void eval(const Vec& x, int order, double* value, Vec* grad, Mat* hess) const {
        Vec q = q0_;
        for (int j = 0; j < dim(); ++j) q[j] += scale_ * x[j];
        base_->eval(q, order, value, grad, hess);
        if (grad && order >= 1) *grad *= scale_;
        if (hess && order >= 2)
            for (int j = 0; j < dim(); ++j)
                for (int k = 0; k < dim(); ++k) (*hess)(j, k) *= scale_ * scale_;
    }
    double value(const Vec& x) const {
        double v;
        eval(x, 0, &v, nullptr, nullptr);
        return v;
    }
    void gradient(const Vec& x, Vec& g) const { eval(x, 1, nullptr, &g, nullptr); }
    void hessian(const Vec& x, Mat& h) const { eval(x, 2, nullptr, nullptr, &h); }

    /// d^alpha V^{L,q0} with the chain-rule power of (Lambda/L).
    double derivative(const Vec& x, const MultiIndex& alpha) const {
        Vec q = q0_;
        for (int j = 0; j < dim(); ++j) q[j] += scale_ * x[j];
        int total = 0;
        for (int j = 0; j < dim(); ++j) total += alpha[j];
        double s = 1.0;
        for (int t = 0; t < total; ++t) s *= scale_;
        return s * base_->derivative(q, alpha);
    }

private:
    const TorusPotential* base_;
    Vec q0_;
    double scale_;
};

inline RescaledTorusPotential rescale_potential(const TorusPotential& pot, const Vec& q0,
                                                double lambda) {
    return RescaledTorusPotential(pot, q0, lambda);
}

// ---------------------------------------------------------------------------
// BandLimitedField: truncated sinc expansion of the field W on R^d,
// W_N(x) = sum_{|n_j|<=N} b_n prod_j f(n_j + Lambda x_j / pi),
// f(t) = sin(pi t)/(pi t).  Mean-square truncation error is O(N^{-d/2}).
// ---------------------------------------------------------------------------

class BandLimitedField {
public:
    BandLimitedField() = default;
    BandLimitedField(int d, double lambda, int n_trunc)
        : dim_(d), cutoff_(lambda), trunc_(n_trunc), coeffs_(box_size(d, n_trunc), 0.0) {
        if (d < 1 || d > kMaxDim) throw std::invalid_argument("BandLimitedField: bad dimension");
        if (lambda <= 0) throw std::invalid_argument("BandLimitedField: Lambda > 0 required");
        if (n_trunc < 1) throw std::invalid_argument("BandLimitedField: N >= 1 required");
    }

    int dim() const { return dim_; }
    double cutoff() const { return cutoff_; }
    int truncation() const { return trunc_; }

    double& coeff_flat(std::size_t i) { return coeffs_[i]; }
    double coeff(const MultiIndex& n) const { return coeffs_[flat_index(n)]; }
    void set_coeff(const MultiIndex& n, double b) { coeffs_[flat_index(n)] = b; }
    std::size_t n_coeffs() const { return coeffs_.size(); }

    void eval(const Vec& x, int order, double* value, Vec* grad, Mat* hess) const {
        const int d = dim_, N = trunc_;
        const double s = cutoff_ / M_PI;  // chain-rule factor Lambda/pi per axis
        // per-axis tables of f, f', f'' at (n + Lambda x_j / pi)
        std::vector<double> f(d * (2 * N + 1)), f1, f2;
        if (order >= 1) f1.resize(d * (2 * N + 1));
        if (order >= 2) f2.resize(d * (2 * N + 1));
        for (int j = 0; j < d; ++j) {
            const double u = s * x[j];
            for (int m = -N; m <= N; ++m) {
                const int idx = j * (2 * N + 1) + (m + N);
                detail::sinc_pi_d012(m + u, &f[idx], order >= 1 ? &f1[idx] : nullptr,
                                     order >= 2 ? &f2[idx] : nullptr);
            }
        }
        double v = 0.0;
        Vec g(d);
        Mat h(d, d);
        MultiIndex n{};
        for (int j = 0; j < d; ++j) n[j] = -N;
        std::size_t flat = 0;
        do {
            const double b = coeffs_[flat++];
            if (b != 0.0) {
                double prod = 1.0;
                std::array<double, kMaxDim> fj{};
                for (int j = 0; j < d; ++j) {
                    fj[j] = f[j * (2 * N + 1) + (n[j] + N)];
                    prod *= fj[j];
                }
                v += b * prod;
                if (order >= 1) {
                    for (int j = 0; j < d; ++j) {
                        double t = b * s * f1[j * (2 * N + 1) + (n[j] + N)];
                        for (int k = 0; k < d; ++k)
                            if (k != j) t *= fj[k];
                        g[j] += t;
                    }
                }
                if (order >= 2) {
                    for (int j = 0; j < d; ++j)
                        for (int k = j; k < d; ++k) {
                            double t = b * s * s;
                            for (int l = 0; l < d; ++l) {
                                const int idx = l * (2 * N + 1) + (n[l] + N);
                                if (l == j && l == k) t *= f2[idx];
                                else if (l == j || l == k) t *= f1[idx];
                                else t *= f[idx];
                            }
                            h(j, k) += t;
                        }
                }
            }
        } while (detail::next_index(n, d, -N, N));
        if (value) *value = v;
        if (grad && order >= 1) *grad = g;
        if (hess && order >= 2) {
            for (int j = 0; j < d; ++j)
                for (int k = 0; k < j; ++k) h(j, k) = h(k, j);
            *hess = h;
        }
    }
    double value(const Vec& x) const {
        double v;
        eval(x, 0, &v, nullptr, nullptr);
        return v;
    }
    void gradient(const Vec& x, Vec& g) const { eval(x, 1, nullptr, &g, nullptr); }
    void hessian(const Vec& x, Mat& h) const { eval(x, 2, nullptr, nullptr, &h); }

    template <class F>
    void for_each_mode(F&& fn) const {
        MultiIndex n{};
        for (int j = 0; j < dim_; ++j) n[j] = -trunc_;
        std::size_t flat = 0;
        do {
            fn(n, coeffs_[flat++]);
        } while (detail::next_index(n, dim_, -trunc_, trunc_));
    }

private:
    static std::size_t box_size(int d, int N) {
        std::size_t s = 1;
        for (int j = 0; j < d; ++j) s *= static_cast<std::size_t>(2 * N + 1);
        return s;
    }
    std::size_t flat_index(const MultiIndex& n) const {
        std::size_t idx = 0;
        for (int j = 0; j < dim_; ++j) idx = idx * (2 * trunc_ + 1) + (n[j] + trunc_);
        return idx;
    }

    int dim_ = 0;
    double cutoff_ = 0.0;
    int trunc_ = 0;
    std::vector<double> coeffs_;
};

/// i.i.d. standard normal coefficients in lexicographic order.
inline BandLimitedField sample_field(int d, double lambda, int n_trunc, RngSeed seed) {
    BandLimitedField field(d, lambda, n_trunc);
    RngStream rng(seed);
    for (std::size_t i = 0; i < field.n_coeffs(); ++i) field.coeff_flat(i) = rng.normal();
    return field;
}

// ---------------------------------------------------------------------------
// Analytic covariance kernels.
// ---------------------------------------------------------------------------

struct CovarianceSpec {
    enum Kind { TorusRescaled, Continuum };
    Kind kind = Continuum;
    int dim = 1;
    int degree = 1;      // L, torus case
    double cutoff = M_PI;  // Lambda
};

/// kappa^L(x) = d_L^{-1} sum_{0<|n|_inf<=L} cos(Lambda n.x / L)  (rescaled torus)
/// kappa_W(x) = prod_j sin(Lambda x_j)/(Lambda x_j)              (continuum)
inline double covariance_analytic(const CovarianceSpec& spec, const Vec& x) {
    if (!x.finite()) throw std::invalid_argument("covariance_analytic: non-finite x");
    if (spec.kind == CovarianceSpec::Continuum) {
        double v = 1.0;
        for (int j = 0; j < spec.dim; ++j) {
            const double u = spec.cutoff * x[j];
            double s[1];
            detail::sin_over_x_derivs(u, 0, s);
            v *= s[0];
        }
        return v;
    }
    const int d = spec.dim, L = spec.degree;
    const double scale = spec.cutoff / L;
    double dl = 1.0;
    for (int j = 0; j < d; ++j) dl *= static_cast<double>(2 * L + 1);
    dl -= 1.0;
    double sum = 0.0;
    MultiIndex n{};
    for (int j = 0; j < d; ++j) n[j] = -L;
    do {
        if (!detail::is_canonical(n, d)) continue;
        double phase = 0.0;
        for (int j = 0; j < d; ++j) phase += n[j] * x[j];
        sum += 2.0 * std::cos(scale * phase);
    } while (detail::next_index(n, d, -L, L));
    return sum / dl;
}

/// d^beta of the kernel, needed for finite-dimensional-distribution tables.
inline double covariance_derivative(const CovarianceSpec& spec, const Vec& x,
                                    const MultiIndex& beta) {
    int total = 0;
    for (int j = 0; j < spec.dim; ++j) total += beta[j];
    if (total == 0) return covariance_analytic(spec, x);
    if (spec.kind == CovarianceSpec::Continuum) {
        double v = 1.0;
        for (int j = 0; j < spec.dim; ++j) {
            double der[5];
            detail::sin_over_x_derivs(spec.cutoff * x[j], beta[j], der);
            double lam_pow = 1.0;
            for (int t = 0; t < beta[j]; ++t) lam_pow *= spec.cutoff;
            v *= lam_pow * der[beta[j]];
        }
        return v;
    }
    const int d = spec.dim, L = spec.degree;
    const double scale = spec.cutoff / L;
    double dl = 1.0;
    for (int j = 0; j < d; ++j) dl *= static_cast<double>(2 * L + 1);
    dl -= 1.0;
    double sum = 0.0;
    MultiIndex n{};
    for (int j = 0; j < d; ++j) n[j] = -L;
    const double half_pi_shift = total * M_PI_2;
    do {
        if (!detail::is_canonical(n, d)) continue;
        double phase = 0.0;
        double factor = 1.0;
        for (int j = 0; j < d; ++j) {
            const double w = scale * n[j];
            phase += w * x[j];
            for (int t = 0; t < beta[j]; ++t) factor *= w;
        }
        // d^beta cos(w.x) = |w^beta| cos(w.x + |beta| pi/2) termwise
        sum += 2.0 * factor * std::cos(phase + half_pi_shift);
    } while (detail::next_index(n, d, -L, L));
    return sum / dl;
}

// ---------------------------------------------------------------------------
// Statistical diagnostics.
// ---------------------------------------------------------------------------

/// Ball averages of a translated functional:  mean over a quasi-uniform grid
/// of y in B_R of functional(field, y), one value per requested radius.
template <class F>
inline std::vector<double> ergodic_average(const BandLimitedField& field, F&& functional,
                                           const std::vector<double>& radii,
                                           double grid_step = 0.5) {
    if (radii.empty()) throw std::invalid_argument("ergodic_average: empty R list");
    const int d = field.dim();
    std::vector<double> out;
    out.reserve(radii.size());
    for (double r : radii) {
        const int m = std::max(1, static_cast<int>(std::ceil(r / grid_step)));
        const double step = r / m;
        double sum = 0.0;
        std::size_t count = 0;
        MultiIndex n{};
        for (int j = 0; j < d; ++j) n[j] = -m;
        do {
            Vec y(d);
            double r2 = 0.0;
            for (int j = 0; j < d; ++j) {
                y[j] = n[j] * step;
                r2 += y[j] * y[j];
            }
            if (r2 > r * r) continue;
            sum += functional(field, y);
            ++count;
        } while (detail::next_index(n, d, -m, m));
        out.push_back(sum / static_cast<double>(count));
    }
    return out;
}

/// Empirical vs analytic covariance matrices of derivative evaluations of
/// the rescaled ensemble, against both the finite-L and the limit kernel.
struct FddComparison {
    Mat sigma_l;     // analytic, finite L
    Mat sigma_w;     // analytic, band-limited limit
    Mat empirical;   // Monte Carlo second moments
    double max_dev_empirical_vs_l = 0.0;
    double max_dev_l_vs_w = 0.0;
};

inline FddComparison fdd_compare(int d, int L, const Vec& q0, double lambda,
                                 const std::vector<Vec>& points,
                                 const std::vector<MultiIndex>& multiindices, int n_samples,
                                 RngSeed seed) {
    const int n = static_cast<int>(points.size());
    if (static_cast<int>(multiindices.size()) != n)
        throw std::invalid_argument("fdd_compare: points/multiindices size mismatch");
    for (const auto& a : multiindices) {
        int total = 0;
        for (int j = 0; j < d; ++j) total += a[j];
        if (total > 2) throw std::invalid_argument("fdd_compare: |alpha| <= 2 required");
    }
    FddComparison out;
    out.sigma_l = Mat(n, n);
    out.sigma_w = Mat(n, n);
    out.empirical = Mat(n, n);

    CovarianceSpec spec_l{CovarianceSpec::TorusRescaled, d, L, lambda};
    CovarianceSpec spec_w{CovarianceSpec::Continuum, d, L, lambda};
    for (int l = 0; l < n; ++l)
        for (int m = 0; m < n; ++m) {
            Vec diff = points[l] - points[m];
            MultiIndex beta{};
            int total_m = 0;
            for (int j = 0; j < d; ++j) {
                beta[j] = multiindices[l][j] + multiindices[m][j];
                total_m += multiindices[m][j];
            }
            const double sign = (total_m % 2 == 0) ? 1.0 : -1.0;
            out.sigma_l(l, m) = sign * covariance_derivative(spec_l, diff, beta);
            out.sigma_w(l, m) = sign * covariance_derivative(spec_w, diff, beta);
        }

    std::vector<double> v(n);
    for (int s = 0; s < n_samples; ++s) {
        TorusPotential pot = sample_torus_potential(d, L, {seed.master, substream(seed.stream, s)});
        RescaledTorusPotential resc(pot, q0, lambda);
        for (int l = 0; l < n; ++l) v[l] = resc.derivative(points[l], multiindices[l]);
        for (int l = 0; l < n; ++l)
            for (int m = 0; m < n; ++m) out.empirical(l, m) += v[l] * v[m];
    }
    for (int l = 0; l < n; ++l)
        for (int m = 0; m < n; ++m) {
            out.empirical(l, m) /= n_samples;
            out.max_dev_empirical_vs_l =
                std::max(out.max_dev_empirical_vs_l, std::abs(out.empirical(l, m) - out.sigma_l(l, m)));
            out.max_dev_l_vs_w =
                std::max(out.max_dev_l_vs_w, std::abs(out.sigma_l(l, m) - out.sigma_w(l, m)));
        }
    return out;
}

}  // namespace hamiltonia
