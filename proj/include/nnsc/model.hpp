#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "nnsc/densemat.hpp"

namespace nnsc {

enum class Mode { nnsc, nmf };

inline std::string_view to_string(Mode mode) { return mode == Mode::nnsc ? "nnsc" : "nmf"; }

/// Non-negative data matrix X (dimension x samples) with sparseness weight lambda.
class Problem {
public:
    Problem(Matrix x, double lambda) : x_(std::move(x)), lambda_(lambda) {
        if (!(lambda_ >= 0.0) || !std::isfinite(lambda_)) {
            throw std::invalid_argument("Problem: lambda must be finite and >= 0");
        }
        if (x_.empty()) throw DimensionError("Problem: empty data matrix");
        for (std::size_t i = 0; i < x_.rows(); ++i)
            for (std::size_t j = 0; j < x_.cols(); ++j)
                if (x_(i, j) < 0.0) {
                    throw std::invalid_argument("Problem: negative data entry at (" + std::to_string(i) + "," +
                                                std::to_string(j) + ")");
                }
    }

    const Matrix& x() const noexcept { return x_; }
    double lambda() const noexcept { return lambda_; }

private:
    Matrix x_;
    double lambda_;
};

/// Basis A (m x r) and hidden components S (r x n).
struct Factorization {
    Matrix a;
    Matrix s;
};

namespace detail {

inline void check_factorization_shapes(const Matrix& x, const Factorization& f, const char* what) {
    if (f.a.cols() != f.s.rows() || f.a.rows() != x.rows() || f.s.cols() != x.cols()) {
        throw DimensionError(std::string(what) + ": shapes X" + x.shape() + ", A" + f.a.shape() + ", S" +
                             f.s.shape() + " are incompatible");
    }
}

inline double half_residual_sq(const Matrix& x, const Matrix& a, const Matrix& s) {
    return 0.5 * frobenius_sq(x - matmul(a, s));
}

}  // namespace detail

/// 1/2 ||X - AS||^2.
inline double objective_nmf(const Problem& p, const Factorization& f) {
    detail::check_factorization_shapes(p.x(), f, "objective_nmf");
    return detail::half_residual_sq(p.x(), f.a, f.s);
}

/// 1/2 ||X - AS||^2 + lambda * sum(S).
inline double objective_nnsc(const Problem& p, const Factorization& f) {
    detail::check_factorization_shapes(p.x(), f, "objective_nnsc");
    return detail::half_residual_sq(p.x(), f.a, f.s) + p.lambda() * sum(f.s);
}

inline double objective(const Problem& p, const Factorization& f, Mode mode) {
    return mode == Mode::nnsc ? objective_nnsc(p, f) : objective_nmf(p, f);
}

struct Violation {
    enum class Kind { negative_a, negative_s, column_norm, shape };

    Kind kind;
    std::size_t row = 0;
    std::size_t col = 0;
    double magnitude = 0.0;  // distance from the feasible set along this constraint

    std::string describe() const {
        switch (kind) {
            case Kind::negative_a:
                return "A(" + std::to_string(row) + "," + std::to_string(col) + ") negative by " + format_double(magnitude);
            case Kind::negative_s:
                return "S(" + std::to_string(row) + "," + std::to_string(col) + ") negative by " + format_double(magnitude);
            case Kind::column_norm:
                return "column " + std::to_string(col) + " of A has norm deviating from 1 by " + format_double(magnitude);
            case Kind::shape:
                return "incompatible shapes";
        }
        return {};
    }
};

inline constexpr double default_validation_tol = 1e-9;

/// Audits the constraints that apply in `mode`. Violations are reported, never thrown.
inline std::vector<Violation> validate(const Problem& p, const Factorization& f, Mode mode,
                                       double tol = default_validation_tol) {
    std::vector<Violation> out;
    if (f.a.cols() != f.s.rows() || f.a.rows() != p.x().rows() || f.s.cols() != p.x().cols()) {
        out.push_back({Violation::Kind::shape, 0, 0, 0.0});
        return out;
    }
    for (std::size_t i = 0; i < f.a.rows(); ++i)
        for (std::size_t j = 0; j < f.a.cols(); ++j)
            if (f.a(i, j) < -tol) out.push_back({Violation::Kind::negative_a, i, j, -f.a(i, j)});
    for (std::size_t i = 0; i < f.s.rows(); ++i)
        for (std::size_t j = 0; j < f.s.cols(); ++j)
            if (f.s(i, j) < -tol) out.push_back({Violation::Kind::negative_s, i, j, -f.s(i, j)});
    if (mode == Mode::nnsc) {
        const auto norms = column_norms(f.a);
        for (std::size_t j = 0; j < norms.size(); ++j) {
            const double dev = std::abs(norms[j] - 1.0);
            if (dev > tol) out.push_back({Violation::Kind::column_norm, 0, j, dev});
        }
    }
    return out;
}

/// Largest constraint violation magnitude (0 when feasible), used for traces.
inline double max_violation(const Factorization& f, Mode mode) {
    double worst = 0.0;
    for (double v : f.a.data()) worst = std::max(worst, -v);
    for (double v : f.s.data()) worst = std::max(worst, -v);
    if (mode == Mode::nnsc) {
        for (double n : column_norms(f.a)) worst = std::max(worst, std::abs(n - 1.0));
    }
    return worst;
}

}  // namespace nnsc
