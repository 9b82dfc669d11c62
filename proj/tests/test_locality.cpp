#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "twinworld/locality.hpp"
#include "twinworld/program.hpp"
#include "twinworld/refresh.hpp"

using namespace twinworld;

namespace {

MatrixX<double> random_stochastic(std::mt19937_64& gen, Index d, const std::vector<Index>& zero_rows = {}) {
    std::exponential_distribution<double> e(1.0);
    MatrixX<double> S(d, d);
    for (Index i = 0; i < S.size(); ++i) S(i) = e(gen);
    for (Index r : zero_rows) S.row(r).setZero();
    for (Index c = 0; c < d; ++c) S.col(c) /= S.col(c).sum();
    return S;
}

VectorX<double> random_distribution(std::mt19937_64& gen, Index size) {
    std::exponential_distribution<double> e(1.0);
    VectorX<double> P(size);
    for (Index i = 0; i < size; ++i) P(i) = e(gen);
    return P / P.sum();
}

MatrixX<double> kron(const MatrixX<double>& A, const MatrixX<double>& B) {
    MatrixX<double> K(A.rows() * B.rows(), A.cols() * B.cols());
    for (Index i = 0; i < A.rows(); ++i)
        for (Index j = 0; j < A.cols(); ++j) K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
    return K;
}

void expect_feasible(const FactorizationProblem& pr, const LocalMaps& m) {
    for (const auto* pair : {&m.S_A, &m.S_B}) {
        const MatrixX<double>& S = *pair;
        EXPECT_GE(S.minCoeff(), -1e-10);
        EXPECT_LT((S.colwise().sum().array() - 1).abs().maxCoeff(), 1e-10);
    }
    for (Index i = 0; i < pr.d_A; ++i)
        if (std::find(pr.rows_A.begin(), pr.rows_A.end(), i) == pr.rows_A.end()) EXPECT_EQ(m.S_A.row(i).norm(), 0);
    for (Index j = 0; j < pr.d_B; ++j)
        if (std::find(pr.rows_B.begin(), pr.rows_B.end(), j) == pr.rows_B.end()) EXPECT_EQ(m.S_B.row(j).norm(), 0);
}

}  // namespace

TEST(Simplex, Projection) {
    const VectorX<double> a = project_simplex((VectorX<double>(3) << 0.2, 0.3, 0.5).finished());
    EXPECT_NEAR(a(0), 0.2, 1e-15);
    EXPECT_NEAR(a(2), 0.5, 1e-15);
    const VectorX<double> b = project_simplex((VectorX<double>(3) << 2, 0, 0).finished());
    EXPECT_EQ(b, (VectorX<double>(3) << 1, 0, 0).finished());
    const VectorX<double> c = project_simplex((VectorX<double>(2) << 0.5, 0.5).finished() * 3);
    EXPECT_NEAR(c(0), 0.5, 1e-15);
    std::mt19937_64 gen(1);
    std::normal_distribution<double> g;
    for (int t = 0; t < 100; ++t) {
        VectorX<double> v(6);
        for (Index i = 0; i < 6; ++i) v(i) = g(gen);
        const VectorX<double> p = project_simplex(v);
        EXPECT_GE(p.minCoeff(), 0);
        EXPECT_NEAR(p.sum(), 1, 1e-14);
        EXPECT_LT((project_simplex(p) - p).cwiseAbs().maxCoeff(), 1e-15);
    }
}

TEST(Reduction, FullSupportFreeVariables) {
    std::mt19937_64 gen(2);
    const FactorizationProblem pr = reduce_problem(random_distribution(gen, 256), random_distribution(gen, 256), 16, 16);
    EXPECT_TRUE(pr.zero_in.empty());
    EXPECT_TRUE(pr.zero_out.empty());
    EXPECT_EQ(pr.free_A(), 240);
    EXPECT_EQ(pr.free_B(), 240);
    EXPECT_EQ(pr.free_variables(), 480);
}

TEST(Reduction, DegenerateToyCase) {
    VectorX<double> in = VectorX<double>::Constant(4, 0.25);
    VectorX<double> out = VectorX<double>::Zero(4);
    out(0) = 1;
    const FactorizationProblem pr = reduce_problem(in, out, 2, 2);
    EXPECT_EQ(pr.rows_A, (std::vector<Index>{0}));
    EXPECT_EQ(pr.rows_B, (std::vector<Index>{0}));
    EXPECT_EQ(pr.free_variables(), 0);
    EXPECT_EQ(pr.j_max, 0);
    const LocalMaps m = minimize_Q(pr, {4, 100, 1, 1e-16});
    EXPECT_LT(m.Q, 1e-20);
    expect_feasible(pr, m);
}

TEST(Reduction, PreservesFeasiblePoints) {
    std::mt19937_64 gen(3);
    const MatrixX<double> A = random_stochastic(gen, 4, {1, 3});
    const MatrixX<double> B = random_stochastic(gen, 4, {0});
    const VectorX<double> in = random_distribution(gen, 16);
    const VectorX<double> out = kron(A, B) * in;
    const FactorizationProblem pr = reduce_problem(in, out, 4, 4);
    EXPECT_EQ(pr.rows_A, (std::vector<Index>{0, 2}));
    EXPECT_EQ(pr.rows_B, (std::vector<Index>{1, 2, 3}));
    EXPECT_LT((project_stochastic(A, pr.rows_A) - A).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LT((project_stochastic(B, pr.rows_B) - B).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LT(objective_Q(pr, A, B), 1e-30);
    const MatrixX<double> S = reduced_global_map(pr, A, B);
    EXPECT_LT((S * in - out).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Minimize, RecoversPlantedProducts) {
    std::mt19937_64 gen(4);
    for (Index d : {2, 4}) {
        const MatrixX<double> A = random_stochastic(gen, d);
        const MatrixX<double> B = random_stochastic(gen, d);
        const VectorX<double> in = random_distribution(gen, d * d);
        const FactorizationProblem pr = reduce_problem(in, kron(A, B) * in, d, d);
        const LocalMaps m = minimize_Q(pr, {8, 4000, 5, 1e-16});
        EXPECT_LT(m.Q, 1e-10) << d;
        expect_feasible(pr, m);
        const FactorizationProblem mp = map_problem(kron(A, B), d, d);
        const LocalMaps mm = minimize_Q(mp, {8, 4000, 5, 1e-16});
        EXPECT_LT(mm.Q, 1e-10) << d;
        expect_feasible(mp, mm);
    }
}

TEST(Minimize, KeepsBestAcrossRestarts) {
    std::mt19937_64 gen(5);
    const FactorizationProblem pr = map_problem(swap_map(0.3), 2, 2);
    const LocalMaps m = minimize_Q(pr, {12, 500, 2, 1e-16});
    ASSERT_EQ(m.history.size(), 12u);
    for (std::size_t k = 1; k < m.history.size(); ++k) EXPECT_LE(m.history[k], m.history[k - 1]);
    EXPECT_EQ(m.history.back(), m.Q);
    EXPECT_NEAR(objective_Q(pr, m.S_A, m.S_B), m.Q, 1e-15);
}

TEST(Swap, IdentityLimitFactorizes) {
    const SwapLemmaReport r = verify_swap_lemma(0.0, {16, 2000, 1, 1e-16});
    EXPECT_FALSE(r.contradiction);
    EXPECT_LT(r.Q_min, 1e-10);
}

TEST(Swap, HalfSwapIsNotLocal) {
    const SwapLemmaReport r = verify_swap_lemma(0.5, {100, 2000, 1, 1e-16});
    EXPECT_TRUE(r.contradiction);
    EXPECT_GE(r.steps.size(), 3u);
    EXPECT_GT(r.Q_min, 1e-4);
    EXPECT_EQ(r.restarts, 100);
}

TEST(Swap, ProductInputStaysInfeasible) {
    VectorX<double> in(4);
    in << 0.3 * 0.8, 0.3 * 0.2, 0.7 * 0.8, 0.7 * 0.2;
    const FactorizationProblem pr = reduce_problem(in, swap_map(0.5) * in, 2, 2);
    EXPECT_GT(minimize_Q(pr, {100, 2000, 1, 1e-16}).Q, 1e-4);
}

TEST(Swap, LocalHelpers) {
    const MatrixX<double> S = local_2x2(0.3, 0.9);
    EXPECT_DOUBLE_EQ(S(1, 0), 0.7);
    EXPECT_NEAR(S(1, 1), 0.1, 1e-15);
    EXPECT_THROW(swap_map(1.5), InvalidGate);
    EXPECT_EQ(swap_map(1.0)(1, 2), 1);
}

TEST(Chsh, FirstSettingFreeVariables) {
    const double h = std::numbers::pi / 2;
    const VectorX<double> P = run_distribution(chsh_program_unrefreshed(h, h / 2));
    const FactorizationProblem pr = reduce_problem(P, refresh_circuit(P), 16, 16);
    EXPECT_EQ(pr.free_variables(), 96);
}
