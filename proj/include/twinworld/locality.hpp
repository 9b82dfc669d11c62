#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "twinworld/core_state.hpp"

namespace twinworld {

/// Does some product S^A (x) S^B of column-stochastic local maps send every
/// input to its output? Bipartite configurations are indexed i*d_B + j.
struct FactorizationProblem {
    Index d_A = 0;
    Index d_B = 0;
    /// Input/output pairs, stored as d_A x d_B matrices.
    std::vector<MatrixX<double>> inputs;
    std::vector<MatrixX<double>> outputs;

    /// Zero sets of the (first) input and output over bipartite indices.
    std::vector<Index> zero_in;
    std::vector<Index> zero_out;

    /// Rows of S^A and S^B that survive the zero rows of the global map.
    std::vector<Index> rows_A;
    std::vector<Index> rows_B;

    /// Last surviving global row in row-major (i, j) order; it absorbs the
    /// normalization of every column of the reduced global map.
    Index j_max = -1;

    Index free_A() const;
    Index free_B() const;
    /// Independent local variables once each column's last surviving entry is
    /// fixed by normalization.
    Index free_variables() const { return free_A() + free_B(); }
};

/// Reduction of a single input/output pair: zero rows from the output zeros,
/// identity columns from the input zeros, normalization substitutions.
FactorizationProblem reduce_problem(const VectorX<double>& P_in, const VectorX<double>& P_out, Index d_A, Index d_B);

/// Map-level problem: the columns of S are the outputs for the basis inputs.
FactorizationProblem map_problem(const MatrixX<double>& S, Index d_A, Index d_B);

/// Global (d_A d_B)^2 matrix of the reduced ansatz for the given local maps:
/// zero rows on the output zero set, identity columns on the input zero set,
/// and row j_max set to one minus the rest of its column.
MatrixX<double> reduced_global_map(const FactorizationProblem& problem, const MatrixX<double>& S_A,
                                   const MatrixX<double>& S_B);

/// Sum of squared residuals over all pairs.
double objective_Q(const FactorizationProblem& problem, const MatrixX<double>& S_A, const MatrixX<double>& S_B);

struct MinimizeOptions {
    int restarts = 64;
    int iterations = 4000;
    std::uint64_t seed = 1;
    /// Stop a restart once Q falls below this.
    double target = 1e-16;
};

struct LocalMaps {
    MatrixX<double> S_A;
    MatrixX<double> S_B;
    double Q = 0;
    int restarts = 0;
    /// Best Q after each restart, non-increasing.
    std::vector<double> history;
};

/// Multistart alternating projected gradient over column-stochastic S^A, S^B
/// supported on the surviving rows. Restart r uses substream (seed, r).
LocalMaps minimize_Q(const FactorizationProblem& problem, const MinimizeOptions& options = {});

/// Euclidean projection of v onto the probability simplex.
VectorX<double> project_simplex(const VectorX<double>& v);

/// Column-wise projection onto stochastic matrices supported on rows.
MatrixX<double> project_stochastic(const MatrixX<double>& S, const std::vector<Index>& rows);

/// (1-p) identity + p swap on two bits.
MatrixX<double> swap_map(double p);

/// Two-by-two local map [[x0, x1], [1-x0, 1-x1]].
MatrixX<double> local_2x2(double x0, double x1);

struct SwapLemmaReport {
    double p = 0;
    /// True when the element chain rules out every k = 1 product.
    bool contradiction = false;
    std::vector<std::string> steps;
    /// Numerical floor of the map-level Q for k = 1.
    double Q_min = 0;
    int restarts = 0;
};

/// Walks the element chain S(00,00) = a0 b0, S(00,10) = a1 b0,
/// S(01,10) = a1 (1 - b0) against the entries of the probabilistic swap and
/// attaches the numerical floor of the map-level problem.
SwapLemmaReport verify_swap_lemma(double p, const MinimizeOptions& options = {});

}  // namespace twinworld
