#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "nnsc/densemat.hpp"
#include "nnsc/model.hpp"
#include "nnsc/random.hpp"

namespace nnsc {

struct SolverConfig {
    Mode mode = Mode::nnsc;
    double mu = 1e-2;             // initial gradient step for the basis
    std::size_t max_iters = 5000;
    double tol = 1e-9;            // relative objective change regarded as stalled
    std::size_t stall_window = 5; // consecutive stalled iterations before stopping
    double eps_div = 1e-12;       // floor for multiplicative-update denominators
    std::uint64_t seed = 0;
    bool backtracking = true;
    std::size_t max_halvings = 20;
    double mu_growth = 1.2;
    double mu_cap_factor = 10.0;  // mu never grows past mu_cap_factor * initial mu

    void check() const {
        if (!(mu > 0.0) || !std::isfinite(mu)) throw std::invalid_argument("SolverConfig: mu must be > 0");
        if (max_iters == 0) throw std::invalid_argument("SolverConfig: max_iters must be >= 1");
        if (!(tol > 0.0)) throw std::invalid_argument("SolverConfig: tol must be > 0");
        if (!(eps_div > 0.0)) throw std::invalid_argument("SolverConfig: eps_div must be > 0");
        if (stall_window == 0) throw std::invalid_argument("SolverConfig: stall_window must be >= 1");
    }
};

struct TraceRecord {
    std::size_t iter;
    double objective;
    double max_violation;
    double mu;  // basis step actually taken; 0 when the step was rejected or not gradient-based
};

struct Trace {
    std::uint64_t seed = 0;
    bool converged = false;
    std::vector<TraceRecord> records;

    void write_csv(std::ostream& os) const {
        os << "iter,objective,max_violation,mu\n";
        for (const auto& r : records) {
            os << r.iter << ',' << format_double(r.objective) << ',' << format_double(r.max_violation) << ','
               << format_double(r.mu) << '\n';
        }
    }

    void write_csv(const std::string& path) const {
        std::ofstream os(path, std::ios::binary);
        if (!os) throw FormatError("cannot open '" + path + "' for writing");
        write_csv(os);
        if (!os) throw FormatError("write failed for '" + path + "'");
    }
};

struct FitResult {
    Factorization factorization;
    Trace trace;

    std::size_t iterations() const { return trace.records.empty() ? 0 : trace.records.back().iter; }
    double final_objective() const { return trace.records.back().objective; }
};

/// Called after every outer iteration with the iteration index and current state.
using FitObserver = std::function<void(std::size_t, const Factorization&)>;

namespace detail {

inline void check_update_shapes(const Matrix& x, const Matrix& a, const Matrix& s, const char* what) {
    if (a.rows() != x.rows() || a.cols() != s.rows() || s.cols() != x.cols()) {
        throw DimensionError(std::string(what) + ": shapes X" + x.shape() + ", A" + a.shape() + ", S" + s.shape() +
                             " are incompatible");
    }
}

/// S .* atx ./ max(ata*S + lambda, eps_div), with A^T X and A^T A supplied.
inline Matrix multiplicative_s_step(const Matrix& s, const Matrix& atx, const Matrix& ata, double lambda,
                                    double eps_div) {
    Matrix den = matmul(ata, s);
    Matrix out(s.rows(), s.cols());
    const auto sv = s.data();
    const auto nv = atx.data();
    const auto dv = den.data();
    auto ov = out.data();
    for (std::size_t i = 0; i < ov.size(); ++i) {
        ov[i] = sv[i] * nv[i] / std::max(dv[i] + lambda, eps_div);
    }
    detail::ensure_finite(out, "update_s");
    return out;
}

inline Matrix draw_positive(Rng& rng, std::size_t rows, std::size_t cols) {
    Matrix m(rows, cols);
    for (double& v : m.data()) v = rng.uniform(0.1, 1.1);
    return m;
}

}  // namespace detail

/**
 * One multiplicative update of the hidden components:
 *
 *   S <- S .* (A^T X) ./ (A^T A S + lambda)
 *
 * Each entry is rescaled by a non-negative factor, so non-negativity is
 * preserved and zero entries stay zero. The denominator is floored at
 * eps_div; whenever the true denominator exceeds eps_div the result is the
 * unguarded update bit for bit. For lambda >= 0 the NNSC objective does not
 * increase.
 */
inline Matrix update_s(const Matrix& x, const Matrix& a, const Matrix& s, double lambda, double eps_div = 1e-12) {
    detail::check_update_shapes(x, a, s, "update_s");
    if (!(lambda >= 0.0)) throw std::invalid_argument("update_s: lambda must be >= 0");
    return detail::multiplicative_s_step(s, matmul_tn(a, x), matmul_tn(a, a), lambda, eps_div);
}

/// Applies update_s `iterations` times with A fixed.
inline Matrix iterate_s(const Matrix& x, const Matrix& a, Matrix s, double lambda, std::size_t iterations,
                        double eps_div = 1e-12) {
    detail::check_update_shapes(x, a, s, "iterate_s");
    const Matrix atx = matmul_tn(a, x);
    const Matrix ata = matmul_tn(a, a);
    for (std::size_t t = 0; t < iterations; ++t) s = detail::multiplicative_s_step(s, atx, ata, lambda, eps_div);
    return s;
}

/// Gradient of 1/2 ||X - AS||^2 with respect to A: (AS - X) S^T.
inline Matrix basis_gradient(const Matrix& x, const Matrix& a, const Matrix& s) {
    return matmul_nt(matmul(a, s) - x, s);
}

/// A - mu (AS - X) S^T with negatives set to zero, before column rescaling.
inline Matrix projected_basis_step_unnormalized(const Matrix& x, const Matrix& a, const Matrix& s, double mu) {
    detail::check_update_shapes(x, a, s, "update_a_projected");
    if (!(mu >= 0.0)) throw std::invalid_argument("update_a_projected: mu must be >= 0");
    return clamp_nonneg(a - scale(basis_gradient(x, a, s), mu));
}

/**
 * Projected gradient step on the basis: gradient step, zero the negatives,
 * rescale columns to unit norm. Throws ZeroColumnError if a column is
 * entirely clamped away.
 */
inline Matrix update_a_projected(const Matrix& x, const Matrix& a, const Matrix& s, double mu) {
    Matrix clamped = projected_basis_step_unnormalized(x, a, s, mu);
    const auto norms = column_norms(clamped);
    for (std::size_t j = 0; j < norms.size(); ++j) {
        if (!(norms[j] > 0.0)) throw ZeroColumnError(j, "update_a_projected");
    }
    return normalize_columns(clamped);
}

/// Multiplicative basis update for plain NMF: A .* (X S^T) ./ (A S S^T).
inline Matrix update_a_multiplicative(const Matrix& x, const Matrix& a, const Matrix& s, double eps_div = 1e-12) {
    detail::check_update_shapes(x, a, s, "update_a_multiplicative");
    const Matrix num = matmul_nt(x, s);
    const Matrix den = matmul(a, matmul_nt(s, s));
    Matrix out(a.rows(), a.cols());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out.data()[i] = a.data()[i] * num.data()[i] / std::max(den.data()[i], eps_div);
    }
    detail::ensure_finite(out, "update_a_multiplicative");
    return out;
}

/// Strictly positive random start; A's columns have unit norm. A is drawn before S.
inline Factorization initialize(std::size_t m, std::size_t r, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    Matrix a = normalize_columns(detail::draw_positive(rng, m, r));
    Matrix s = detail::draw_positive(rng, r, n);
    return {std::move(a), std::move(s)};
}

namespace detail {

class StallDetector {
public:
    StallDetector(double tol, std::size_t window) : tol_(tol), window_(window) {}

    /// Returns true once the relative change has stayed below tol for `window` updates.
    bool update(double previous, double current) {
        const double denom = std::max(std::abs(previous), std::numeric_limits<double>::min());
        const double rel = std::abs(previous - current) / denom;
        count_ = rel < tol_ ? count_ + 1 : 0;
        return count_ >= window_;
    }

private:
    double tol_;
    std::size_t window_;
    std::size_t count_ = 0;
};

inline void check_fit_args(const Problem& p, std::size_t r, const SolverConfig& cfg) {
    if (r == 0) throw std::invalid_argument("fit: number of components must be >= 1");
    cfg.check();
    (void)p;
}

}  // namespace detail

/**
 * Alternating NNSC fit. Each outer iteration takes a projected gradient step
 * on A using the current S, then one multiplicative S step using the new A.
 *
 * With backtracking on, a basis step that would increase the objective is
 * retried with mu halved (up to cfg.max_halvings times) and skipped if no
 * step decreases it; accepted steps grow mu by cfg.mu_growth for the next
 * iteration. A column that clamps to zero counts as a failed trial. With
 * backtracking off, such a column is redrawn from the initializer instead.
 *
 * The lambda weight is taken from the problem.
 */
inline FitResult nnsc_fit(const Problem& p, std::size_t r, const SolverConfig& cfg,
                          const FitObserver& observer = {}) {
    detail::check_fit_args(p, r, cfg);
    const Matrix& x = p.x();
    const double lambda = p.lambda();

    FitResult result;
    result.trace.seed = cfg.seed;
    Factorization& f = result.factorization;
    f = initialize(x.rows(), r, x.cols(), cfg.seed);
    // Collapsed columns (backtracking off) are redrawn from a stream derived from the seed.
    Rng redraw_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);

    double obj = objective_nnsc(p, f);
    double mu = cfg.mu;
    const double mu_cap = cfg.mu * cfg.mu_cap_factor;
    result.trace.records.push_back({0, obj, max_violation(f, Mode::nnsc), 0.0});

    detail::StallDetector stall(cfg.tol, cfg.stall_window);
    for (std::size_t t = 1; t <= cfg.max_iters; ++t) {
        const double start_obj = obj;
        double mu_used = 0.0;
        if (cfg.backtracking) {
            double trial = mu;
            for (std::size_t h = 0; h <= cfg.max_halvings; ++h, trial *= 0.5) {
                Matrix candidate;
                try {
                    candidate = update_a_projected(x, f.a, f.s, trial);
                } catch (const ZeroColumnError&) {
                    continue;
                }
                const double cand_obj = objective_nnsc(p, {candidate, f.s});
                if (cand_obj <= obj) {
                    f.a = std::move(candidate);
                    obj = cand_obj;
                    mu_used = trial;
                    break;
                }
            }
            mu = mu_used > 0.0 ? std::min(mu_used * cfg.mu_growth, mu_cap) : trial;
        } else {
            Matrix clamped = projected_basis_step_unnormalized(x, f.a, f.s, mu);
            const auto norms = column_norms(clamped);
            for (std::size_t j = 0; j < norms.size(); ++j) {
                if (norms[j] > 0.0) continue;
                for (std::size_t i = 0; i < clamped.rows(); ++i) clamped(i, j) = redraw_rng.uniform(0.1, 1.1);
            }
            f.a = normalize_columns(clamped);
            mu_used = mu;
        }

        f.s = update_s(x, f.a, f.s, lambda, cfg.eps_div);
        const double new_obj = objective_nnsc(p, f);
        result.trace.records.push_back({t, new_obj, max_violation(f, Mode::nnsc), mu_used});
        if (observer) observer(t, f);

        const bool stalled = stall.update(start_obj, new_obj);
        obj = new_obj;
        if (stalled) {
            result.trace.converged = true;
            break;
        }
    }
    return result;
}

/// NMF baseline: multiplicative updates for both factors, lambda ignored, no norm constraint.
inline FitResult nmf_fit(const Problem& p, std::size_t r, const SolverConfig& cfg,
                         const FitObserver& observer = {}) {
    detail::check_fit_args(p, r, cfg);
    const Matrix& x = p.x();

    FitResult result;
    result.trace.seed = cfg.seed;
    Factorization& f = result.factorization;
    f = initialize(x.rows(), r, x.cols(), cfg.seed);

    double obj = objective_nmf(p, f);
    result.trace.records.push_back({0, obj, max_violation(f, Mode::nmf), 0.0});

    detail::StallDetector stall(cfg.tol, cfg.stall_window);
    for (std::size_t t = 1; t <= cfg.max_iters; ++t) {
        f.a = update_a_multiplicative(x, f.a, f.s, cfg.eps_div);
        f.s = update_s(x, f.a, f.s, 0.0, cfg.eps_div);
        const double new_obj = objective_nmf(p, f);
        result.trace.records.push_back({t, new_obj, max_violation(f, Mode::nmf), 0.0});
        if (observer) observer(t, f);

        const bool stalled = stall.update(obj, new_obj);
        obj = new_obj;
        if (stalled) {
            result.trace.converged = true;
            break;
        }
    }
    return result;
}

inline FitResult fit(const Problem& p, std::size_t r, const SolverConfig& cfg, const FitObserver& observer = {}) {
    return cfg.mode == Mode::nnsc ? nnsc_fit(p, r, cfg, observer) : nmf_fit(p, r, cfg, observer);
}

}  // namespace nnsc
