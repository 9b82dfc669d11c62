#include "twinworld/locality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "twinworld/rng.hpp"

namespace twinworld {

namespace {

MatrixX<double> as_matrix(const VectorX<double>& v, Index d_A, Index d_B) {
    MatrixX<double> M(d_A, d_B);
    for (Index i = 0; i < d_A; ++i)
        for (Index j = 0; j < d_B; ++j) M(i, j) = v(i * d_B + j);
    return M;
}

void fill_support(FactorizationProblem& pr) {
    std::vector<bool> a(pr.d_A, false), b(pr.d_B, false);
    std::vector<bool> out_nonzero(static_cast<std::size_t>(pr.d_A * pr.d_B), false);
    for (const auto& O : pr.outputs)
        for (Index i = 0; i < pr.d_A; ++i)
            for (Index j = 0; j < pr.d_B; ++j)
                if (std::abs(O(i, j)) >= kZeroTol) {
                    a[i] = b[j] = true;
                    out_nonzero[static_cast<std::size_t>(i * pr.d_B + j)] = true;
                }
    pr.rows_A.clear();
    pr.rows_B.clear();
    for (Index i = 0; i < pr.d_A; ++i)
        if (a[i]) pr.rows_A.push_back(i);
    for (Index j = 0; j < pr.d_B; ++j)
        if (b[j]) pr.rows_B.push_back(j);
    pr.j_max = -1;
    for (Index I = 0; I < pr.d_A * pr.d_B; ++I)
        if (out_nonzero[static_cast<std::size_t>(I)]) pr.j_max = I;
}

double lambda_max(const MatrixX<double>& G) {
    Eigen::SelfAdjointEigenSolver<MatrixX<double>> es(G, Eigen::EigenvaluesOnly);
    return std::max(es.eigenvalues().maxCoeff(), 0.0);
}

}  // namespace

Index FactorizationProblem::free_A() const {
    return rows_A.empty() ? 0 : d_A * static_cast<Index>(rows_A.size() - 1);
}

Index FactorizationProblem::free_B() const {
    return rows_B.empty() ? 0 : d_B * static_cast<Index>(rows_B.size() - 1);
}

FactorizationProblem reduce_problem(const VectorX<double>& P_in, const VectorX<double>& P_out, Index d_A, Index d_B) {
    if (d_A < 1 || d_B < 1 || P_in.size() != d_A * d_B || P_out.size() != d_A * d_B)
        throw InvalidDistribution("distribution sizes do not match d_A * d_B");
    require_probability_vector(P_in, "input distribution");
    require_probability_vector(P_out, "output distribution");
    FactorizationProblem pr;
    pr.d_A = d_A;
    pr.d_B = d_B;
    pr.inputs.push_back(as_matrix(P_in, d_A, d_B));
    pr.outputs.push_back(as_matrix(P_out, d_A, d_B));
    for (Index I = 0; I < d_A * d_B; ++I) {
        if (P_in(I) < kZeroTol) pr.zero_in.push_back(I);
        if (P_out(I) < kZeroTol) pr.zero_out.push_back(I);
    }
    fill_support(pr);
    return pr;
}

FactorizationProblem map_problem(const MatrixX<double>& S, Index d_A, Index d_B) {
    const Index d = d_A * d_B;
    if (S.rows() != d || S.cols() != d) throw InvalidDistribution("map size does not match d_A * d_B");
    FactorizationProblem pr;
    pr.d_A = d_A;
    pr.d_B = d_B;
    for (Index c = 0; c < d; ++c) {
        pr.inputs.push_back(as_matrix(VectorX<double>::Unit(d, c), d_A, d_B));
        pr.outputs.push_back(as_matrix(S.col(c), d_A, d_B));
    }
    for (Index I = 0; I < d; ++I)
        if (S.row(I).cwiseAbs().maxCoeff() < kZeroTol) pr.zero_out.push_back(I);
    fill_support(pr);
    return pr;
}

MatrixX<double> reduced_global_map(const FactorizationProblem& pr, const MatrixX<double>& S_A,
                                   const MatrixX<double>& S_B) {
    const Index d = pr.d_A * pr.d_B;
    MatrixX<double> S(d, d);
    for (Index i = 0; i < pr.d_A; ++i)
        for (Index j = 0; j < pr.d_B; ++j)
            for (Index k = 0; k < pr.d_A; ++k)
                for (Index l = 0; l < pr.d_B; ++l) S(i * pr.d_B + j, k * pr.d_B + l) = S_A(i, k) * S_B(j, l);
    for (Index I : pr.zero_out) S.row(I).setZero();
    std::vector<bool> identity_col(static_cast<std::size_t>(d), false);
    for (Index K : pr.zero_in) {
        S.col(K) = VectorX<double>::Unit(d, K);
        identity_col[static_cast<std::size_t>(K)] = true;
    }
    if (pr.j_max >= 0)
        for (Index K = 0; K < d; ++K) {
            if (identity_col[static_cast<std::size_t>(K)]) continue;
            S(pr.j_max, K) = 1 - (S.col(K).sum() - S(pr.j_max, K));
        }
    return S;
}

double objective_Q(const FactorizationProblem& pr, const MatrixX<double>& S_A, const MatrixX<double>& S_B) {
    double q = 0;
    for (std::size_t b = 0; b < pr.inputs.size(); ++b)
        q += (pr.outputs[b] - S_A * pr.inputs[b] * S_B.transpose()).squaredNorm();
    return q;
}

VectorX<double> project_simplex(const VectorX<double>& v) {
    const Index n = v.size();
    VectorX<double> u = v;
    std::sort(u.data(), u.data() + n, std::greater<double>());
    double css = 0;
    double theta = 0;
    for (Index k = 0; k < n; ++k) {
        css += u(k);
        const double t = (css - 1) / static_cast<double>(k + 1);
        if (u(k) - t > 0) theta = t;
    }
    return (v.array() - theta).cwiseMax(0.0);
}

MatrixX<double> project_stochastic(const MatrixX<double>& S, const std::vector<Index>& rows) {
    MatrixX<double> out = MatrixX<double>::Zero(S.rows(), S.cols());
    if (rows.empty()) return out;
    VectorX<double> v(static_cast<Index>(rows.size()));
    for (Index c = 0; c < S.cols(); ++c) {
        for (std::size_t r = 0; r < rows.size(); ++r) v(static_cast<Index>(r)) = S(rows[r], c);
        const VectorX<double> p = project_simplex(v);
        for (std::size_t r = 0; r < rows.size(); ++r) out(rows[r], c) = p(static_cast<Index>(r));
    }
    return out;
}

namespace {

constexpr std::uint64_t kRestartStage = 0x6c6f63616c697479ULL;

MatrixX<double> random_stochastic(SplitMix64& rng, Index d, const std::vector<Index>& rows) {
    MatrixX<double> S = MatrixX<double>::Zero(d, d);
    for (Index c = 0; c < d; ++c) {
        double total = 0;
        for (Index r : rows) total += S(r, c) = -std::log(1.0 - rng.uniform());
        for (Index r : rows) S(r, c) /= total;
    }
    return S;
}

constexpr int kInnerSteps = 30;

// Minimizes sum_b ||Out_b - X M_b||^2 over column-stochastic X supported on
// rows. Accelerated projected gradient with G = sum M M^T, C = sum Out M^T.
void solve_block(MatrixX<double>& X, const MatrixX<double>& G, const MatrixX<double>& C, const std::vector<Index>& rows) {
    const double L = 2 * lambda_max(G);
    if (!(L > 0)) return;
    MatrixX<double> Y = X;
    double t = 1;
    for (int k = 0; k < kInnerSteps; ++k) {
        const MatrixX<double> next = project_stochastic(Y - (2 / L) * (Y * G - C), rows);
        const double t_next = (1 + std::sqrt(1 + 4 * t * t)) / 2;
        Y = next + ((t - 1) / t_next) * (next - X);
        X = next;
        t = t_next;
    }
}

void step_A(const FactorizationProblem& pr, MatrixX<double>& A, const MatrixX<double>& B) {
    MatrixX<double> C = MatrixX<double>::Zero(pr.d_A, pr.d_A);
    MatrixX<double> G = MatrixX<double>::Zero(pr.d_A, pr.d_A);
    for (std::size_t b = 0; b < pr.inputs.size(); ++b) {
        const MatrixX<double> M = pr.inputs[b] * B.transpose();
        C.noalias() += pr.outputs[b] * M.transpose();
        G.noalias() += M * M.transpose();
    }
    solve_block(A, G, C, pr.rows_A);
}

void step_B(const FactorizationProblem& pr, const MatrixX<double>& A, MatrixX<double>& B) {
    MatrixX<double> C = MatrixX<double>::Zero(pr.d_B, pr.d_B);
    MatrixX<double> G = MatrixX<double>::Zero(pr.d_B, pr.d_B);
    for (std::size_t b = 0; b < pr.inputs.size(); ++b) {
        const MatrixX<double> N = A * pr.inputs[b];
        C.noalias() += pr.outputs[b].transpose() * N;
        G.noalias() += N.transpose() * N;
    }
    solve_block(B, G, C, pr.rows_B);
}

}  // namespace

LocalMaps minimize_Q(const FactorizationProblem& pr, const MinimizeOptions& options) {
    if (pr.inputs.empty()) throw InvalidDistribution("factorization problem has no data");
    LocalMaps best;
    best.Q = std::numeric_limits<double>::infinity();
    const int restarts = std::max(1, options.restarts);
    for (int r = 0; r < restarts; ++r) {
        auto rng = substream(options.seed, kRestartStage, static_cast<std::uint64_t>(r));
        MatrixX<double> A = random_stochastic(rng, pr.d_A, pr.rows_A);
        MatrixX<double> B = random_stochastic(rng, pr.d_B, pr.rows_B);
        double q = objective_Q(pr, A, B);
        double checkpoint = q;
        for (int it = 1; it <= options.iterations && q > options.target; ++it) {
            step_A(pr, A, B);
            step_B(pr, A, B);
            if (it % 200 == 0) {
                q = objective_Q(pr, A, B);
                if (checkpoint - q <= 1e-12 * checkpoint) break;
                checkpoint = q;
            }
        }
        q = objective_Q(pr, A, B);
        if (q < best.Q) {
            best.Q = q;
            best.S_A = A;
            best.S_B = B;
        }
        best.history.push_back(best.Q);
        best.restarts = r + 1;
    }
    return best;
}

MatrixX<double> swap_map(double p) {
    if (!(p >= 0 && p <= 1)) throw InvalidGate("swap probability must lie in [0, 1]");
    MatrixX<double> S = MatrixX<double>::Identity(4, 4);
    S(1, 1) = S(2, 2) = 1 - p;
    S(1, 2) = S(2, 1) = p;
    return S;
}

MatrixX<double> local_2x2(double x0, double x1) {
    MatrixX<double> S(2, 2);
    S << x0, x1, 1 - x0, 1 - x1;
    return S;
}

SwapLemmaReport verify_swap_lemma(double p, const MinimizeOptions& options) {
    SwapLemmaReport rep;
    rep.p = p;
    const MatrixX<double> S = swap_map(p);
    // Index 2k + l with the A bit first; (S^A (x) S^B)_{ij,kl} = a_ik b_jl.
    auto say = [&](const std::string& s) { rep.steps.push_back(s); };
    std::ostringstream os;
    if (S(0, 0) == 1) {
        say("S(00,00) = a0*b0 = 1 with a0, b0 in [0,1] forces a0 = b0 = 1");
        if (S(0, 2) == 0) {
            say("S(00,10) = a1*b0 = 0 with b0 = 1 forces a1 = 0");
            os << "S(01,10) = a1*(1-b0) = 0 but the map requires " << S(1, 2);
            say(os.str());
            rep.contradiction = S(1, 2) != 0;
            if (!rep.contradiction) say("no contradiction: the element chain is consistent");
        } else {
            say("S(00,10) is nonzero; chain does not apply");
        }
    } else {
        say("S(00,00) differs from 1; chain does not apply");
    }
    const LocalMaps m = minimize_Q(map_problem(S, 2, 2), options);
    rep.Q_min = m.Q;
    rep.restarts = m.restarts;
    return rep;
}

}  // namespace twinworld
