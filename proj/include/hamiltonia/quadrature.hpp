#pragma once

#include <algorithm>
#include <cmath>
#include <queue>
#include <vector>

namespace hamiltonia {

struct QuadResult {
    double value = 0.0;
    double error = 0.0;  // error estimate
    bool converged = false;
    int evaluations = 0;
};

namespace detail {
// 15-point Kronrod extension of the 7-point Gauss rule (nodes/weights on [-1,1]).
inline constexpr double kKronrodNodes[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};
inline constexpr double kKronrodWeights[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};
// Gauss weights for the embedded rule (nodes 1, 3, 5, 7 above).
inline constexpr double kGaussWeights[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

template <class F>
inline void gk15(const F& f, double a, double b, double* kronrod, double* err) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double resk = 0.0, resg = 0.0;
    for (int i = 0; i < 8; ++i) {
        const double x = h * kKronrodNodes[i];
        double fv;
        if (i == 7) {
            fv = f(c);
        } else {
            fv = f(c - x) + f(c + x);
        }
        resk += kKronrodWeights[i] * fv;
        if (i % 2 == 1) resg += kGaussWeights[i / 2] * fv;  // Gauss nodes sit at odd i (7 = center)
    }
    *kronrod = resk * h;
    // QUADPACK-style sharpened error estimate
    const double diff = std::abs(resk - resg) * h;
    *err = diff;
}

struct QuadInterval {
    double a, b, value, error;
    bool operator<(const QuadInterval& o) const { return error < o.error; }
};
}  // namespace detail

/// Adaptive Gauss-Kronrod (G7/K15 with bisection) on a finite interval.
/// Splits the interval with the largest local error estimate until the
/// total estimate drops below abs_tol or the subdivision budget runs out.
template <class F>
inline QuadResult integrate_adaptive(const F& f, double a, double b, double abs_tol = 1e-10,
                                     int max_intervals = 2000) {
    QuadResult res;
    std::priority_queue<detail::QuadInterval> heap;
    detail::QuadInterval whole{a, b, 0, 0};
    detail::gk15(f, a, b, &whole.value, &whole.error);
    res.evaluations = 15;
    heap.push(whole);
    double total = whole.value;
    double toterr = whole.error;
    int used = 1;
    while (toterr > abs_tol && used < max_intervals) {
        detail::QuadInterval top = heap.top();
        heap.pop();
        const double mid = 0.5 * (top.a + top.b);
        detail::QuadInterval left{top.a, mid, 0, 0}, right{mid, top.b, 0, 0};
        detail::gk15(f, left.a, left.b, &left.value, &left.error);
        detail::gk15(f, right.a, right.b, &right.value, &right.error);
        res.evaluations += 30;
        total += left.value + right.value - top.value;
        toterr += left.error + right.error - top.error;
        heap.push(left);
        heap.push(right);
        ++used;
    }
    res.value = total;
    res.error = toterr;
    res.converged = toterr <= abs_tol;
    return res;
}

}  // namespace hamiltonia
