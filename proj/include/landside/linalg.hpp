#pragma once

#include <array>
#include <cmath>
#include <cstddef>

#include "landside/errors.hpp"

// Small fixed-size dense linear algebra. Everything in this project is a
// 4- or 8-dimensional object, so plain arrays beat a matrix library and keep
// the arithmetic easy to reason about for reproducibility.

namespace landside {

using Vec4 = std::array<double, 4>;
using Vec8 = std::array<double, 8>;

template <std::size_t R, std::size_t C>
struct Mat {
    std::array<double, R * C> a{};

    double& operator()(std::size_t r, std::size_t c) { return a[r * C + c]; }
    double operator()(std::size_t r, std::size_t c) const { return a[r * C + c]; }

    static constexpr std::size_t rows() { return R; }
    static constexpr std::size_t cols() { return C; }

    bool operator==(const Mat&) const = default;

    static Mat identity()
        requires(R == C)
    {
        Mat m;
        for (std::size_t i = 0; i < R; ++i) m(i, i) = 1.0;
        return m;
    }

    Mat& operator+=(const Mat& o) {
        for (std::size_t i = 0; i < R * C; ++i) a[i] += o.a[i];
        return *this;
    }
    Mat& operator-=(const Mat& o) {
        for (std::size_t i = 0; i < R * C; ++i) a[i] -= o.a[i];
        return *this;
    }
    Mat& operator*=(double s) {
        for (double& v : a) v *= s;
        return *this;
    }

    friend Mat operator+(Mat l, const Mat& r) { return l += r; }
    friend Mat operator-(Mat l, const Mat& r) { return l -= r; }
    friend Mat operator*(Mat l, double s) { return l *= s; }
    friend Mat operator*(double s, Mat r) { return r *= s; }

    std::array<double, C> row(std::size_t r) const {
        std::array<double, C> out;
        for (std::size_t c = 0; c < C; ++c) out[c] = (*this)(r, c);
        return out;
    }
    void set_row(std::size_t r, const std::array<double, C>& v) {
        for (std::size_t c = 0; c < C; ++c) (*this)(r, c) = v[c];
    }

    double frobenius_norm() const {
        double s = 0.0;
        for (double v : a) s += v * v;
        return std::sqrt(s);
    }
};

using Mat44 = Mat<4, 4>;
using Mat48 = Mat<4, 8>;
using Mat88 = Mat<8, 8>;

template <std::size_t R, std::size_t C>
std::array<double, R> matvec(const Mat<R, C>& m, const std::array<double, C>& x) {
    std::array<double, R> y{};
    for (std::size_t r = 0; r < R; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < C; ++c) s += m(r, c) * x[c];
        y[r] = s;
    }
    return y;
}

template <std::size_t N>
double dot(const std::array<double, N>& a, const std::array<double, N>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < N; ++i) s += a[i] * b[i];
    return s;
}

template <std::size_t N>
double norm2(const std::array<double, N>& v) {
    return std::sqrt(dot(v, v));
}

/// Cholesky factorization of a symmetric positive-definite matrix.
/// Returns the lower-triangular factor L with A = L*L^T.
/// Throws SolverError if the matrix is not positive definite.
template <std::size_t N>
Mat<N, N> cholesky(const Mat<N, N>& m) {
    Mat<N, N> l;
    for (std::size_t j = 0; j < N; ++j) {
        double d = m(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (!(d > 0.0)) {
            throw SolverError("cholesky: matrix is not positive definite", d, 0.0);
        }
        l(j, j) = std::sqrt(d);
        for (std::size_t i = j + 1; i < N; ++i) {
            double s = m(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / l(j, j);
        }
    }
    return l;
}

/// Solves A x = b given the Cholesky factor L of A.
template <std::size_t N>
std::array<double, N> cholesky_solve(const Mat<N, N>& l, const std::array<double, N>& b) {
    std::array<double, N> y{};
    for (std::size_t i = 0; i < N; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
        y[i] = s / l(i, i);
    }
    std::array<double, N> x{};
    for (std::size_t ii = N; ii-- > 0;) {
        double s = y[ii];
        for (std::size_t k = ii + 1; k < N; ++k) s -= l(k, ii) * x[k];
        x[ii] = s / l(ii, ii);
    }
    return x;
}

}  // namespace landside
