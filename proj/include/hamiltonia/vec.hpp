#pragma once

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>

namespace hamiltonia {

// Desk-scale builds work in d <= 4 configuration-space dimensions.
inline constexpr int kMaxDim = 4;

/// Fixed-capacity vector for positions, momenta and frequency vectors.
/// No heap allocation; size is the runtime dimension d <= kMaxDim.
class Vec {
public:
    Vec() : n_(0) { a_.fill(0.0); }
    explicit Vec(int n, double fill = 0.0) : n_(n) {
        check_dim(n);
        a_.fill(0.0);
        for (int i = 0; i < n; ++i) a_[i] = fill;
    }
    Vec(std::initializer_list<double> xs) : n_(static_cast<int>(xs.size())) {
        check_dim(n_);
        a_.fill(0.0);
        int i = 0;
        for (double x : xs) a_[i++] = x;
    }

    int size() const { return n_; }
    double& operator[](int i) { return a_[i]; }
    double operator[](int i) const { return a_[i]; }
    double* data() { return a_.data(); }
    const double* data() const { return a_.data(); }

    Vec& operator+=(const Vec& o) {
        for (int i = 0; i < n_; ++i) a_[i] += o.a_[i];
        return *this;
    }
    Vec& operator-=(const Vec& o) {
        for (int i = 0; i < n_; ++i) a_[i] -= o.a_[i];
        return *this;
    }
    Vec& operator*=(double s) {
        for (int i = 0; i < n_; ++i) a_[i] *= s;
        return *this;
    }

    friend Vec operator+(Vec a, const Vec& b) { return a += b; }
    friend Vec operator-(Vec a, const Vec& b) { return a -= b; }
    friend Vec operator*(double s, Vec a) { return a *= s; }
    friend Vec operator*(Vec a, double s) { return a *= s; }

    double dot(const Vec& o) const {
        double s = 0;
        for (int i = 0; i < n_; ++i) s += a_[i] * o.a_[i];
        return s;
    }
    double norm2() const { return dot(*this); }
    double norm() const { return std::sqrt(norm2()); }
    double norm_inf() const {
        double m = 0;
        for (int i = 0; i < n_; ++i) m = std::max(m, std::abs(a_[i]));
        return m;
    }
    bool finite() const {
        for (int i = 0; i < n_; ++i)
            if (!std::isfinite(a_[i])) return false;
        return true;
    }

private:
    static void check_dim(int n) {
        if (n < 0 || n > kMaxDim) throw std::invalid_argument("Vec: dimension out of range");
    }
    std::array<double, kMaxDim> a_;
    int n_;
};

/// Fixed-capacity row-major matrix, up to (2 kMaxDim) x (2 kMaxDim).
/// Covers Hessians (d x d) and tangent-flow matrices (2d x 2d).
class Mat {
public:
    static constexpr int kMaxSide = 2 * kMaxDim;

    Mat() : r_(0), c_(0) { a_.fill(0.0); }
    Mat(int r, int c) : r_(r), c_(c) {
        if (r < 0 || r > kMaxSide || c < 0 || c > kMaxSide)
            throw std::invalid_argument("Mat: dimension out of range");
        a_.fill(0.0);
    }
    static Mat identity(int n) {
        Mat m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    int rows() const { return r_; }
    int cols() const { return c_; }
    double& operator()(int i, int j) { return a_[i * c_ + j]; }
    double operator()(int i, int j) const { return a_[i * c_ + j]; }

    Mat operator*(const Mat& o) const {
        assert(c_ == o.r_);
        Mat out(r_, o.c_);
        for (int i = 0; i < r_; ++i)
            for (int k = 0; k < c_; ++k) {
                const double v = (*this)(i, k);
                if (v == 0.0) continue;
                for (int j = 0; j < o.c_; ++j) out(i, j) += v * o(k, j);
            }
        return out;
    }
    Mat transpose() const {
        Mat out(c_, r_);
        for (int i = 0; i < r_; ++i)
            for (int j = 0; j < c_; ++j) out(j, i) = (*this)(i, j);
        return out;
    }
    Mat& operator-=(const Mat& o) {
        for (int i = 0; i < r_ * c_; ++i) a_[i] -= o.a_[i];
        return *this;
    }
    double norm_inf() const {
        // max absolute entry
        double m = 0;
        for (int i = 0; i < r_ * c_; ++i) m = std::max(m, std::abs(a_[i]));
        return m;
    }
    bool finite() const {
        for (int i = 0; i < r_ * c_; ++i)
            if (!std::isfinite(a_[i])) return false;
        return true;
    }

private:
    std::array<double, kMaxSide * kMaxSide> a_;
    int r_, c_;
};

/// Canonical skew form Omega on R^{2d} in (q, p) block ordering.
inline Mat canonical_skew(int d) {
    Mat J(2 * d, 2 * d);
    for (int i = 0; i < d; ++i) {
        J(i, d + i) = 1.0;
        J(d + i, i) = -1.0;
    }
    return J;
}

/// Symplecticity defect max|M^T Omega M - Omega| of a 2d x 2d matrix.
inline double symplectic_defect(const Mat& m) {
    const int d = m.rows() / 2;
    Mat j = canonical_skew(d);
    Mat r = m.transpose() * j * m;
    r -= j;
    return r.norm_inf();
}

/// Solve a small dense linear system A x = b in place (partial pivoting).
inline Vec solve_small(Mat a, Vec b) {
    const int n = a.rows();
    std::array<int, Mat::kMaxSide> perm{};
    for (int i = 0; i < n; ++i) perm[i] = i;
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
        if (std::abs(a(piv, col)) < 1e-300) throw std::runtime_error("solve_small: singular matrix");
        if (piv != col) {
            for (int j = 0; j < n; ++j) std::swap(a(col, j), a(piv, j));
            std::swap(b[col], b[piv]);
        }
        for (int r = col + 1; r < n; ++r) {
            const double f = a(r, col) / a(col, col);
            if (f == 0.0) continue;
            for (int j = col; j < n; ++j) a(r, j) -= f * a(col, j);
            b[r] -= f * b[col];
        }
    }
    Vec x(n);
    for (int i = n - 1; i >= 0; --i) {
        double s = b[i];
        for (int j = i + 1; j < n; ++j) s -= a(i, j) * x[j];
        x[i] = s / a(i, i);
    }
    return x;
}

}  // namespace hamiltonia
