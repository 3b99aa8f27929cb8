#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <sstream>

#include "nnsc/oracle.hpp"
#include "nnsc/solver.hpp"
#include "support/instances.hpp"

using namespace nnsc;
using nnsc::testing::random_basis;
using nnsc::testing::random_instance;
using nnsc::testing::random_matrix;
using nnsc::testing::relative_gap;

TEST(UpdateS, ScalarFixedPoint) {
    EXPECT_EQ(update_s(Matrix{{2}}, Matrix{{1}}, Matrix{{2}}, 0.0), (Matrix{{2}}));
}

TEST(UpdateS, ScalarShrinkage) {
    const Matrix x{{1}}, a{{1}};
    const Matrix s1 = update_s(x, a, Matrix{{1}}, 0.5);
    EXPECT_NEAR(s1(0, 0), 2.0 / 3.0, 1e-15);
    // Minimizer of 1/2 (1 - s)^2 + 0.5 s over s >= 0 is max(0, 1 - 0.5).
    EXPECT_NEAR(iterate_s(x, a, Matrix{{1}}, 0.5, 200)(0, 0), 0.5, 1e-12);
}

TEST(UpdateS, ReachesReferenceMinimumOfSubproblem) {
    Rng rng(31);
    const Matrix a = random_basis(rng, 5, 3);
    const Matrix x = random_matrix(rng, 5, 4);
    const double lambda = 0.1;
    const Problem p(x, lambda);
    const Matrix s = iterate_s(x, a, random_matrix(rng, 3, 4, 0.1, 1.1), lambda, 2000);
    const Matrix ref = oracle::solve_s_reference(x, a, lambda, 1e-11);
    EXPECT_LE(relative_gap(objective_nnsc(p, {a, s}), objective_nnsc(p, {a, ref})), 1e-6);
}

TEST(UpdateS, MonotoneOverManyIterationsAndInstances) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const double lambda = std::array{0.0, 0.1, 1.0}[seed % 3];
        const auto inst = random_instance(1000 + seed, 8, 6, 20, lambda);
        const Problem p(inst.x, lambda);
        Matrix s = inst.s0;
        double prev = objective_nnsc(p, {inst.a, s});
        for (int t = 0; t < 500; ++t) {
            s = update_s(inst.x, inst.a, s, lambda, 1e-300);
            const double cur = objective_nnsc(p, {inst.a, s});
            ASSERT_LE(cur, prev + nnsc::testing::monotone_slack(prev, inst.x)) << "seed " << seed << " iteration " << t;
            prev = cur;
        }
    }
}

TEST(UpdateS, PreservesNonNegativityAndLocksZeros) {
    Rng rng(32);
    const Matrix a = random_basis(rng, 6, 4);
    const Matrix x = random_matrix(rng, 6, 5);
    Matrix s = random_matrix(rng, 4, 5, 0.1, 1.1);
    s(1, 2) = 0.0;
    s(3, 0) = 0.0;
    for (int t = 0; t < 300; ++t) {
        s = update_s(x, a, s, 0.2);
        ASSERT_GE(min_entry(s), 0.0);
        ASSERT_EQ(s(1, 2), 0.0);
        ASSERT_EQ(s(3, 0), 0.0);
    }
}

TEST(UpdateS, ConvergesToKktPoint) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto inst = random_instance(2000 + seed, 8, 4, 6, 0.1 * static_cast<double>(seed % 4));
        const Matrix s = iterate_s(inst.x, inst.a, inst.s0, inst.lambda, 20000);
        const Matrix atx = matmul_tn(inst.a, inst.x);
        const Matrix grad = add_scalar(matmul_tn(inst.a, matmul(inst.a, s)) - atx, inst.lambda);
        const double scale_ref = max_entry(atx);
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s.data()[i] > 1e-6) {
                EXPECT_LT(std::abs(grad.data()[i]), 1e-5 * scale_ref) << "seed " << seed << " entry " << i;
            }
        }
    }
}

TEST(UpdateS, TerminalObjectiveIndependentOfPositiveStart) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto inst = random_instance(3000 + seed, 8, 5, 6, 0.3);
        const Problem p(inst.x, inst.lambda);
        Rng rng(seed);
        std::vector<double> finals;
        for (int start = 0; start < 10; ++start) {
            const Matrix s0 = random_matrix(rng, inst.s0.rows(), inst.s0.cols(), 1e-3, 5.0);
            finals.push_back(objective_nnsc(p, {inst.a, iterate_s(inst.x, inst.a, s0, inst.lambda, 20000)}));
        }
        for (double v : finals) EXPECT_LE(relative_gap(v, finals.front()), 1e-6) << "seed " << seed;
    }
}

TEST(UpdateS, ColumnsUpdateIndependently) {
    Rng rng(33);
    const Matrix a = random_basis(rng, 5, 3);
    const Matrix x = random_matrix(rng, 5, 4);
    const Matrix s = random_matrix(rng, 3, 4, 0.1, 1.1);
    const Matrix full = update_s(x, a, s, 0.4);
    for (std::size_t j = 0; j < 4; ++j) {
        const Matrix col = update_s(Matrix::column_vector(x.column(j)), a, Matrix::column_vector(s.column(j)), 0.4);
        for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(col(i, 0), full(i, j));
    }
}

TEST(UpdateS, RejectsBadInputs) {
    EXPECT_THROW((void)update_s(Matrix(2, 2), Matrix(3, 1), Matrix(1, 2), 0.0), DimensionError);
    EXPECT_THROW((void)update_s(Matrix{{1}}, Matrix{{1}}, Matrix{{1}}, -0.1), std::invalid_argument);
}

TEST(UpdateAProjected, ZeroGradientIsFixedPoint) {
    const Matrix a = normalize_columns(Matrix{{1, 0}, {1, 2}, {0, 1}});
    const Matrix s{{1.0, 0.5}, {0.2, 2.0}};
    const Matrix x = matmul(a, s);
    EXPECT_LE(max_abs_diff(update_a_projected(x, a, s, 0.1), a), 1e-12);
}

TEST(UpdateAProjected, ZeroStepLeavesFeasibleBasisUnchanged) {
    Rng rng(41);
    const Matrix a = random_basis(rng, 6, 3);
    const Matrix s = random_matrix(rng, 3, 7);
    const Matrix x = random_matrix(rng, 6, 7);
    EXPECT_LE(max_abs_diff(update_a_projected(x, a, s, 0.0), a), 1e-15);
}

TEST(UpdateAProjected, SmallStepDecreasesObjectiveAfterAtMostTwentyHalvings) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Rng rng(4200 + seed);
        const Matrix a = random_basis(rng, 7, 4);
        const Matrix s = random_matrix(rng, 4, 10);
        const Problem p(random_matrix(rng, 7, 10), 0.3);
        const double before = objective_nnsc(p, {a, s});
        double mu = 1e-3;
        bool decreased = false;
        for (int h = 0; h <= 20 && !decreased; ++h, mu *= 0.5) {
            decreased = objective_nnsc(p, {update_a_projected(p.x(), a, s, mu), s}) <= before;
        }
        EXPECT_TRUE(decreased) << "seed " << seed;
    }
}

TEST(UpdateAProjected, ColumnsStayUnitNormAndNonNegative) {
    Rng rng(43);
    for (int trial = 0; trial < 100; ++trial) {
        const Matrix a = random_basis(rng, 6, 4);
        const Matrix s = random_matrix(rng, 4, 8);
        const Matrix x = random_matrix(rng, 6, 8);
        const Matrix next = update_a_projected(x, a, s, rng.uniform(0.0, 0.05));
        EXPECT_GE(min_entry(next), 0.0);
        for (double n : column_norms(next)) EXPECT_NEAR(n, 1.0, 1e-12);
    }
}

TEST(UpdateAProjected, CollapsedColumnIsNamed) {
    // Column 1 is pushed entirely negative by a large step.
    const Matrix a = normalize_columns(Matrix{{1, 1}, {1, 1}});
    const Matrix s{{0.0}, {1.0}};
    const Matrix x{{0.0}, {0.0}};
    try {
        (void)update_a_projected(x, a, s, 10.0);
        FAIL() << "expected ZeroColumnError";
    } catch (const ZeroColumnError& e) {
        EXPECT_EQ(e.column(), 1u);
    }
}

TEST(NnscFit, RankOneDataIsFactorizedExactly) {
    const Matrix u = normalize_columns(Matrix{{1}, {2}, {0.5}, {3}});
    const Matrix v{{0.5, 1.0, 2.0, 0.1, 1.5}};
    const Problem p(matmul(u, v), 0.0);
    SolverConfig cfg;
    cfg.tol = 1e-15;
    cfg.seed = 3;
    const auto res = nnsc_fit(p, 1, cfg);
    EXPECT_LT(res.final_objective(), 1e-8);
    EXPECT_TRUE(validate(p, res.factorization, Mode::nnsc).empty());
}

TEST(NnscFit, FullRankBasisMatchesExactReconstruction) {
    // A = normalized columns of X with S = diag(norms) reconstructs X exactly;
    // with r = n the fit should get within rounding noise of that.
    Rng rng(51);
    const Matrix x = random_matrix(rng, 6, 4, 0.0, 1.0);
    const Problem p(x, 0.0);
    const auto norms = column_norms(x);
    Matrix diag(4, 4);
    for (std::size_t j = 0; j < 4; ++j) diag(j, j) = norms[j];
    const double exact = objective_nnsc(p, {normalize_columns(x), diag});
    SolverConfig cfg;
    cfg.seed = 5;
    cfg.max_iters = 20000;
    cfg.tol = 1e-15;
    const auto res = nnsc_fit(p, 4, cfg);
    EXPECT_LE(res.final_objective(), exact + 1e-6 * 0.5 * frobenius_sq(x));
}

TEST(NnscFit, FirstIterationFollowsAlgorithmOrder) {
    Rng rng(52);
    const Problem p(random_matrix(rng, 5, 8), 0.2);
    SolverConfig cfg;
    cfg.seed = 9;
    cfg.max_iters = 1;
    cfg.mu = 1e-4;
    const auto res = nnsc_fit(p, 3, cfg);
    const Factorization f0 = initialize(5, 3, 8, cfg.seed);
    const Matrix a1 = update_a_projected(p.x(), f0.a, f0.s, cfg.mu);
    ASSERT_LE(objective_nnsc(p, {a1, f0.s}), objective_nnsc(p, f0));
    const Matrix s1 = update_s(p.x(), a1, f0.s, 0.2);
    EXPECT_EQ(res.factorization.a, a1);
    EXPECT_EQ(res.factorization.s, s1);
    ASSERT_EQ(res.trace.records.size(), 2u);
    EXPECT_EQ(res.trace.records[1].mu, cfg.mu);
}

TEST(NnscFit, TraceIsMonotoneAndStateFeasibleEveryIteration) {
    Rng rng(53);
    const Problem p(random_matrix(rng, 9, 60), 0.5);
    SolverConfig cfg;
    cfg.seed = 2;
    cfg.max_iters = 400;
    std::size_t calls = 0;
    const auto res = nnsc_fit(p, 5, cfg, [&](std::size_t, const Factorization& f) {
        ++calls;
        EXPECT_TRUE(validate(p, f, Mode::nnsc).empty());
    });
    EXPECT_EQ(calls, res.iterations());
    const auto& recs = res.trace.records;
    for (std::size_t i = 1; i < recs.size(); ++i) {
        EXPECT_LE(recs[i].objective, recs[i - 1].objective * (1.0 + 1e-12));
        EXPECT_LE(recs[i].max_violation, 1e-9);
    }
}

TEST(NnscFit, DeterministicForFixedSeed) {
    Rng rng(54);
    const Problem p(random_matrix(rng, 4, 20), 0.1);
    SolverConfig cfg;
    cfg.seed = 77;
    cfg.max_iters = 200;
    const auto r1 = nnsc_fit(p, 3, cfg);
    const auto r2 = nnsc_fit(p, 3, cfg);
    EXPECT_EQ(r1.factorization.a, r2.factorization.a);
    EXPECT_EQ(r1.factorization.s, r2.factorization.s);
    EXPECT_EQ(r1.trace.seed, 77u);
}

TEST(NnscFit, WithoutBacktrackingCollapsedColumnsAreRedrawn) {
    Rng rng(55);
    const Problem p(random_matrix(rng, 6, 30), 0.1);
    SolverConfig cfg;
    cfg.backtracking = false;
    cfg.mu = 50.0;
    cfg.max_iters = 30;
    const auto res = nnsc_fit(p, 4, cfg);
    EXPECT_TRUE(validate(p, res.factorization, Mode::nnsc).empty());
}

TEST(NnscFit, StopsEarlyOnceObjectiveStalls) {
    const Problem p(Matrix{{1, 2}, {2, 4}}, 0.0);
    SolverConfig cfg;
    cfg.tol = 1e-6;
    const auto res = nnsc_fit(p, 1, cfg);
    EXPECT_TRUE(res.trace.converged);
    EXPECT_LT(res.iterations(), cfg.max_iters);
}

TEST(NnscFit, RejectsInvalidConfiguration) {
    const Problem p(Matrix{{1}}, 0.0);
    SolverConfig cfg;
    EXPECT_THROW((void)nnsc_fit(p, 0, cfg), std::invalid_argument);
    cfg.mu = 0.0;
    EXPECT_THROW((void)nnsc_fit(p, 1, cfg), std::invalid_argument);
    cfg = {};
    cfg.max_iters = 0;
    EXPECT_THROW((void)nnsc_fit(p, 1, cfg), std::invalid_argument);
    cfg = {};
    cfg.eps_div = 0.0;
    EXPECT_THROW((void)nnsc_fit(p, 1, cfg), std::invalid_argument);
}

TEST(NmfFit, FirstIterationUsesMultiplicativeRulesAndIgnoresLambda) {
    Rng rng(61);
    const Matrix x = random_matrix(rng, 5, 8);
    SolverConfig cfg;
    cfg.mode = Mode::nmf;
    cfg.seed = 4;
    cfg.max_iters = 1;
    const auto res = fit(Problem(x, 5.0), 3, cfg);
    const Factorization f0 = initialize(5, 3, 8, cfg.seed);
    const Matrix a1 = update_a_multiplicative(x, f0.a, f0.s);
    EXPECT_EQ(res.factorization.a, a1);
    // The S step is the NNSC update with lambda = 0.
    EXPECT_EQ(res.factorization.s, update_s(x, a1, f0.s, 0.0));
}

TEST(NmfFit, TraceIsMonotoneAndNonNegative) {
    Rng rng(62);
    const Problem p(random_matrix(rng, 9, 50), 0.0);
    SolverConfig cfg;
    cfg.seed = 8;
    cfg.max_iters = 500;
    const auto res = nmf_fit(p, 4, cfg);
    const auto& recs = res.trace.records;
    for (std::size_t i = 1; i < recs.size(); ++i) {
        EXPECT_LE(recs[i].objective, recs[i - 1].objective * (1.0 + 1e-12));
    }
    EXPECT_TRUE(validate(p, res.factorization, Mode::nmf).empty());
}

TEST(Trace, CsvLayout) {
    Trace t;
    t.records.push_back({0, 2.5, 0.0, 0.01});
    t.records.push_back({1, 1.25, 1e-17, 0.012});
    std::ostringstream os;
    t.write_csv(os);
    EXPECT_EQ(os.str(), "iter,objective,max_violation,mu\n0,2.5,0,0.01\n1,1.25,1.0000000000000001e-17,0.012\n");
}
