#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "twinworld/core_state.hpp"
#include "twinworld/refresh.hpp"

namespace twinworld {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Periodic lattice with N sites per dimension, D dimensions and M particles.
/// Configurations are indexed big-endian over the D*M coordinates, particle
/// major: coordinate (i, j) of dimension i and particle j (both 1-based) is
/// axis D*(j-1) + i - 1.
struct LatticeSpec {
    Index N = 3;
    int D = 1;
    int M = 1;

    int axes() const { return D * M; }
    Index sites() const;
    /// Throws ConfigError unless N >= 3, D*M >= 1 and the state fits max_states.
    void validate(Index max_states = Index{1} << 24) const;
};

/// Above this many configurations the sparse generators are used.
inline constexpr Index kDenseSiteLimit = 1000;

/// Nearest-neighbour matrix of a periodic ring, (O1)_{ab} = delta_{a,b+1} + delta_{a,b-1}.
SparseMatrix build_O1(Index N);

/// O1 acting on coordinate (dim_i, particle_j), both 1-based, identity elsewhere.
SparseMatrix build_O1(const LatticeSpec& spec, int dim_i, int particle_j);

/// Sum of O1 over all coordinates.
SparseMatrix neighbor_sum(const LatticeSpec& spec);

/// Kinetic generator. Blocks in (rho, sigma) order 00, 01, 10, 11.
SparseMatrix build_GT_sparse(const LatticeSpec& spec);
MatrixX<double> build_GT(const LatticeSpec& spec);

/// Potential generator for total potential energy W per configuration.
SparseMatrix build_GV_sparse(const LatticeSpec& spec, const VectorX<double>& W);
MatrixX<double> build_GV(const LatticeSpec& spec, const VectorX<double>& W);

/// Largest dt for which 1 + dt*(G_T + G_V) has no negative entry.
double max_step(const LatticeSpec& spec, const VectorX<double>& W);

/// S = 1 + dt*(G_T + G_V). Throws StepTooLarge past max_step.
SparseMatrix build_step_sparse(const LatticeSpec& spec, const VectorX<double>& W, double dt);
MatrixX<double> build_step(const LatticeSpec& spec, const VectorX<double>& W, double dt);

/// Real 2x2 block of rows/columns (rho sigma) of a 4*sites generator.
MatrixX<double> ppv_block(const MatrixX<double>& G, Index sites, int row_block, int col_block);

// Potentials

/// height on sites lo..hi (0-based, inclusive), zero elsewhere.
VectorX<double> barrier_potential(Index N, Index lo, Index hi, double height);

/// u wherever at least two particles share a site (per-dimension coordinates equal).
VectorX<double> contact_potential(const LatticeSpec& spec, double u);

/// Throws InvalidPotential on non-finite entries or a size mismatch.
void validate_potential(const LatticeSpec& spec, const VectorX<double>& W);

// Initial states

/// exp(-(x-x0)^2/(4 sigma^2)) exp(2 pi i k x / N), x = 0..N-1, unit 2-norm.
/// sigma_x = 0 gives a state localized on the nearest site.
VectorX<std::complex<double>> gaussian_packet(Index N, double x0, double k, double sigma_x);

/// Interference-free unit-mass distribution whose extraction is the realified
/// state divided by its 1-norm.
VectorX<double> embed_state(const VectorX<std::complex<double>>& psi);

VectorX<double> init_gaussian_packet(const LatticeSpec& spec, double x0, double k, double sigma_x);

// Propagation

struct Trajectory {
    std::vector<Index> steps;
    std::vector<double> times;
    std::vector<VectorX<double>> states;
};

/// Repeats P <- refresh(S P). Records the states at the listed step numbers
/// (0 is the initial state).
Trajectory propagate(const VectorX<double>& P0, const MatrixX<double>& S, Index sites, double dt,
                     const std::vector<Index>& snapshot_steps);
Trajectory propagate(const VectorX<double>& P0, const SparseMatrix& S, Index sites, double dt,
                     const std::vector<Index>& snapshot_steps);

/// Builds the step for (spec, W, dt) with the dense or sparse path by size.
Trajectory propagate(const VectorX<double>& P0, const LatticeSpec& spec, const VectorX<double>& W, double dt,
                     Index n_steps, Index snapshot_stride = 1);

/// Experimental: each sample moves along a column of S, then the ensemble is
/// refreshed from its histogram. Noise dominates unless the ensemble is much
/// larger than the state space.
std::vector<Ensemble> propagate_ensemble(const Ensemble& e0, const SparseMatrix& S, Index n_steps,
                                         Index snapshot_stride = 1);

}  // namespace twinworld
