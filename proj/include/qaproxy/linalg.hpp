#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "qaproxy/errors.hpp"

namespace qaproxy {

using Vec = std::vector<double>;

// Dense row-major matrix. Small enough here (hundreds by hundreds) that
// plain loops beat pulling in a linear algebra dependency.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

    double& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
};

inline Vec matvec(const Matrix& m, const Vec& v) {
    if (static_cast<int>(v.size()) != m.cols)
        throw DimMismatch("matvec: " + std::to_string(m.cols) + " cols vs vector of " +
                          std::to_string(v.size()));
    Vec out(static_cast<std::size_t>(m.rows), 0.0);
    for (int r = 0; r < m.rows; ++r) {
        double acc = 0.0;
        const double* row = m.data.data() + static_cast<std::size_t>(r) * m.cols;
        for (int c = 0; c < m.cols; ++c) acc += row[c] * v[static_cast<std::size_t>(c)];
        out[static_cast<std::size_t>(r)] = acc;
    }
    return out;
}

// m^T v without materializing the transpose.
inline Vec matvec_transposed(const Matrix& m, const Vec& v) {
    if (static_cast<int>(v.size()) != m.rows)
        throw DimMismatch("matvec_transposed: " + std::to_string(m.rows) + " rows vs vector of " +
                          std::to_string(v.size()));
    Vec out(static_cast<std::size_t>(m.cols), 0.0);
    for (int r = 0; r < m.rows; ++r) {
        const double s = v[static_cast<std::size_t>(r)];
        if (s == 0.0) continue;
        const double* row = m.data.data() + static_cast<std::size_t>(r) * m.cols;
        for (int c = 0; c < m.cols; ++c) out[static_cast<std::size_t>(c)] += s * row[c];
    }
    return out;
}

// m += scale * a b^T
inline void add_outer(Matrix& m, const Vec& a, const Vec& b, double scale = 1.0) {
    if (static_cast<int>(a.size()) != m.rows || static_cast<int>(b.size()) != m.cols)
        throw DimMismatch("add_outer: shape mismatch");
    for (int r = 0; r < m.rows; ++r) {
        const double s = scale * a[static_cast<std::size_t>(r)];
        if (s == 0.0) continue;
        double* row = m.data.data() + static_cast<std::size_t>(r) * m.cols;
        for (int c = 0; c < m.cols; ++c) row[c] += s * b[static_cast<std::size_t>(c)];
    }
}

inline double dot(const Vec& u, const Vec& v) {
    if (u.size() != v.size()) throw DimMismatch("dot: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) acc += u[i] * v[i];
    return acc;
}

// y += a * x
inline void axpy(double a, const Vec& x, Vec& y) {
    if (x.size() != y.size()) throw DimMismatch("axpy: length mismatch");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

inline double l2_norm(const Vec& v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return std::sqrt(acc);
}

// Stable softmax: shift by the max before exponentiating.
inline Vec softmax(const Vec& logits) {
    Vec out(logits.size(), 0.0);
    if (logits.empty()) return out;
    const double m = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - m);
        sum += out[i];
    }
    for (double& x : out) x /= sum;
    return out;
}

inline double log_sum_exp(const Vec& logits) {
    const double m = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double x : logits) sum += std::exp(x - m);
    return m + std::log(sum);
}

inline bool all_finite(const Vec& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

inline bool all_finite(const Matrix& m) {
    for (double x : m.data)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace qaproxy
