#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>

namespace hamiltonia {

/// Complete elliptic integrals K(k), E(k) of the first and second kind,
/// modulus convention K(k) = int_0^{pi/2} dt / sqrt(1 - k^2 sin^2 t).
///
/// Evaluated with the arithmetic-geometric mean: a_{n+1} = (a_n+g_n)/2,
/// g_{n+1} = sqrt(a_n g_n), c_{n+1} = (a_n-g_n)/2, starting from a_0 = 1,
/// g_0 = k' = sqrt(1-k^2), c_0 = k.  Then K = pi/(2 agm) and
/// E = K (1 - sum_n 2^{n-1} c_n^2).  Quadratic convergence reaches
/// machine precision in a handful of iterations for k bounded away from 1.
inline std::pair<double, double> elliptic_ke(double k) {
    if (!(k >= 0.0 && k < 1.0)) throw std::domain_error("elliptic_ke: need 0 <= k < 1");
    double a = 1.0;
    double g = std::sqrt(1.0 - k * k);
    double c = k;
    double csum = 0.5 * c * c;  // 2^{-1} c_0^2
    double pow2 = 0.5;
    for (int n = 0; n < 64; ++n) {
        // cancellation-free update: c_n^2 = a_n^2 - g_n^2 gives
        // c_{n+1} = (a_n - g_n)/2 = c_n^2 / (2 (a_n + g_n))
        c = c * c / (2.0 * (a + g));
        const double an = 0.5 * (a + g);
        g = std::sqrt(a * g);
        a = an;
        pow2 *= 2.0;
        csum += pow2 * c * c;
        if (c <= a * 1e-17) break;
    }
    const double kk = M_PI / (2.0 * a);
    const double ee = kk * (1.0 - csum);
    return {kk, ee};
}

inline double elliptic_k(double k) { return elliptic_ke(k).first; }
inline double elliptic_e(double k) { return elliptic_ke(k).second; }

}  // namespace hamiltonia
