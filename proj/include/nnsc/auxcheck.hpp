#pragma once

// Single-column majorization apparatus for the multiplicative S update:
// the column objective F, its gradient, the diagonal majorizer K and the
// auxiliary function G built from them. Used to check the monotonicity
// argument numerically.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "nnsc/densemat.hpp"

namespace nnsc::aux {

using Vector = std::vector<double>;

class ColumnSubproblem {
public:
    ColumnSubproblem(Matrix a, Vector x, double lambda) : a_(std::move(a)), x_(std::move(x)), lambda_(lambda) {
        if (x_.size() != a_.rows()) {
            throw DimensionError("ColumnSubproblem: x has length " + std::to_string(x_.size()) + " but A is " +
                                 a_.shape());
        }
        if (!(lambda_ >= 0.0)) throw std::invalid_argument("ColumnSubproblem: lambda must be >= 0");
        for (double v : a_.data())
            if (v < 0.0) throw std::invalid_argument("ColumnSubproblem: A must be non-negative");
        for (double v : x_)
            if (v < 0.0) throw std::invalid_argument("ColumnSubproblem: x must be non-negative");
        ata_ = matmul_tn(a_, a_);
        atx_ = matmul_tn(a_, Matrix::column_vector(x_)).column(0);
    }

    const Matrix& a() const noexcept { return a_; }
    const Vector& x() const noexcept { return x_; }
    double lambda() const noexcept { return lambda_; }
    std::size_t dim() const noexcept { return a_.cols(); }

    const Matrix& ata() const noexcept { return ata_; }
    const Vector& atx() const noexcept { return atx_; }

    void check_length(std::span<const double> s, const char* what) const {
        if (s.size() != dim()) {
            throw DimensionError(std::string(what) + ": vector has length " + std::to_string(s.size()) +
                                 ", expected " + std::to_string(dim()));
        }
    }

private:
    Matrix a_;
    Vector x_;
    double lambda_;
    Matrix ata_;
    Vector atx_;
};

namespace detail {

inline Vector ata_times(const ColumnSubproblem& sp, std::span<const double> s) {
    Vector out(sp.dim(), 0.0);
    for (std::size_t i = 0; i < sp.dim(); ++i)
        for (std::size_t j = 0; j < sp.dim(); ++j) out[i] += sp.ata()(i, j) * s[j];
    return out;
}

inline void require_positive(std::span<const double> s_t, const char* what) {
    for (std::size_t i = 0; i < s_t.size(); ++i) {
        if (!(s_t[i] > 0.0)) {
            throw std::invalid_argument(std::string(what) + ": s_t[" + std::to_string(i) + "] must be > 0");
        }
    }
}

}  // namespace detail

/// F(s) = 1/2 ||x - A s||^2 + lambda * sum(s).
inline double f_col(const ColumnSubproblem& sp, std::span<const double> s) {
    sp.check_length(s, "f_col");
    double fit = 0.0;
    for (std::size_t i = 0; i < sp.a().rows(); ++i) {
        double as = 0.0;
        for (std::size_t j = 0; j < sp.dim(); ++j) as += sp.a()(i, j) * s[j];
        const double r = sp.x()[i] - as;
        fit += r * r;
    }
    double total = 0.0;
    for (double v : s) total += v;
    return 0.5 * fit + sp.lambda() * total;
}

/// grad F(s) = A^T (A s - x) + lambda.
inline Vector grad_f(const ColumnSubproblem& sp, std::span<const double> s) {
    sp.check_length(s, "grad_f");
    Vector g = detail::ata_times(sp, s);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += sp.lambda() - sp.atx()[i];
    return g;
}

/// Diagonal of K(s_t): ((A^T A s_t)_a + lambda) / s_t_a.
inline Vector k_diag(const ColumnSubproblem& sp, std::span<const double> s_t) {
    sp.check_length(s_t, "k_diag");
    detail::require_positive(s_t, "k_diag");
    Vector k = detail::ata_times(sp, s_t);
    for (std::size_t i = 0; i < k.size(); ++i) k[i] = (k[i] + sp.lambda()) / s_t[i];
    return k;
}

/// G(s, s_t) = F(s_t) + (s - s_t)^T grad F(s_t) + 1/2 (s - s_t)^T K(s_t) (s - s_t).
inline double g_aux(const ColumnSubproblem& sp, std::span<const double> s, std::span<const double> s_t) {
    sp.check_length(s, "g_aux");
    const Vector k = k_diag(sp, s_t);
    const Vector g = grad_f(sp, s_t);
    double lin = 0.0;
    double quad = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double d = s[i] - s_t[i];
        lin += d * g[i];
        quad += k[i] * d * d;
    }
    return f_col(sp, s_t) + lin + 0.5 * quad;
}

/// Stationary point of G(., s_t): s_t - K(s_t)^{-1} grad F(s_t).
inline Vector g_argmin(const ColumnSubproblem& sp, std::span<const double> s_t) {
    const Vector k = k_diag(sp, s_t);
    const Vector g = grad_f(sp, s_t);
    Vector s(s_t.begin(), s_t.end());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] -= g[i] / k[i];
    return s;
}

/// K(s_t) - A^T A as a dense symmetric matrix.
inline Matrix k_minus_ata(const ColumnSubproblem& sp, std::span<const double> s_t) {
    const Vector k = k_diag(sp, s_t);
    Matrix m = scale(sp.ata(), -1.0);
    for (std::size_t i = 0; i < k.size(); ++i) m(i, i) += k[i];
    return m;
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
inline Vector symmetric_eigenvalues(const Matrix& sym, double tol = 1e-14, std::size_t max_sweeps = 100) {
    if (sym.rows() != sym.cols()) throw DimensionError("symmetric_eigenvalues: matrix is " + sym.shape());
    const std::size_t n = sym.rows();
    Matrix a = sym;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) a(i, j) = a(j, i) = 0.5 * (sym(i, j) + sym(j, i));

    const double scale_ref = std::max(std::sqrt(frobenius_sq(a)), 1e-300);
    for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
        if (std::sqrt(off) <= tol * scale_ref) break;

        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
            }
        }
    }
    Vector eig(n);
    for (std::size_t i = 0; i < n; ++i) eig[i] = a(i, i);
    std::sort(eig.begin(), eig.end());
    return eig;
}

inline double min_symmetric_eigenvalue(const Matrix& sym) { return symmetric_eigenvalues(sym).front(); }

}  // namespace nnsc::aux
