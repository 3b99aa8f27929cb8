#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "nnsc/densemat.hpp"

namespace nnsc::oracle {

struct ReferenceOptions {
    std::size_t max_iters = 1'000'000;
    double zero_tol = 1e-12;  // entries at or below this count as on the boundary
};

/// Largest first-order (KKT) violation of S for min 1/2||X - AS||^2 + lambda sum(S), S >= 0.
inline double kkt_residual(const Matrix& x, const Matrix& a, const Matrix& s, double lambda,
                           double zero_tol = 1e-12) {
    const Matrix grad = add_scalar(matmul_tn(a, matmul(a, s)) - matmul_tn(a, x), lambda);
    double worst = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double g = grad.data()[i];
        const double r = s.data()[i] <= zero_tol ? std::max(0.0, -g) : std::abs(g);
        worst = std::max(worst, r);
    }
    return worst;
}

/**
 * Reference minimizer of the convex S subproblem by projected gradient descent.
 *
 * Columns are solved independently from a fixed start of 0.5. The step is
 * adapted by backtracking: a trial step t is accepted when the exact
 * quadratic decrease condition d^T A^T A d <= |d|^2 / t holds for the
 * projected move d, and grows by 1.5x after each acceptance. Iteration stops
 * once every entry satisfies either (s <= zero_tol and dF/ds >= -tol) or
 * |dF/ds| <= tol. Throws NumericError if the cap is reached first.
 */
inline Matrix solve_s_reference(const Matrix& x, const Matrix& a, double lambda, double tol,
                                const ReferenceOptions& opts = {}) {
    if (a.rows() != x.rows()) {
        throw DimensionError("solve_s_reference: A" + a.shape() + " incompatible with X" + x.shape());
    }
    if (!(lambda >= 0.0)) throw std::invalid_argument("solve_s_reference: lambda must be >= 0");
    if (!(tol > 0.0)) throw std::invalid_argument("solve_s_reference: tol must be > 0");

    const std::size_t r = a.cols();
    const Matrix ata = matmul_tn(a, a);
    const Matrix atx = matmul_tn(a, x);
    Matrix s(r, x.cols(), 0.5);

    std::vector<double> col(r), grad(r), next(r), d(r);
    for (std::size_t j = 0; j < x.cols(); ++j) {
        for (std::size_t i = 0; i < r; ++i) col[i] = s(i, j);
        double step = 1.0 / std::max(std::sqrt(frobenius_sq(ata)), 1e-300);
        double residual = 0.0;
        std::size_t it = 0;
        for (;; ++it) {
            residual = 0.0;
            for (std::size_t i = 0; i < r; ++i) {
                double g = lambda - atx(i, j);
                for (std::size_t k = 0; k < r; ++k) g += ata(i, k) * col[k];
                grad[i] = g;
                residual = std::max(residual, col[i] <= opts.zero_tol ? std::max(0.0, -g) : std::abs(g));
            }
            if (residual <= tol) break;
            if (it >= opts.max_iters) {
                throw NumericError("solve_s_reference: column " + std::to_string(j) + " not converged after " +
                                   std::to_string(opts.max_iters) + " iterations, KKT residual " +
                                   format_double(residual));
            }
            while (true) {
                double dd = 0.0;
                for (std::size_t i = 0; i < r; ++i) {
                    next[i] = std::max(0.0, col[i] - step * grad[i]);
                    d[i] = next[i] - col[i];
                    dd += d[i] * d[i];
                }
                double dqd = 0.0;
                for (std::size_t i = 0; i < r; ++i) {
                    double row = 0.0;
                    for (std::size_t k = 0; k < r; ++k) row += ata(i, k) * d[k];
                    dqd += d[i] * row;
                }
                if (dqd * step <= dd) break;
                step *= 0.5;
            }
            col.swap(next);
            step *= 1.5;
        }
        for (std::size_t i = 0; i < r; ++i) s(i, j) = col[i];
    }
    return s;
}

}  // namespace nnsc::oracle
