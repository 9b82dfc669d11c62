#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "twinworld/core_state.hpp"
#include "twinworld/program.hpp"
#include "twinworld/refresh.hpp"

namespace twinworld {

/// Squared, renormalized coincidence statistics. Rows of p are outcomes i,
/// columns the ReIm value rho; the result is sum_rho p^2 / sum p^2 per row.
VectorX<double> born2_distribution(const MatrixX<double>& p);

/// Per-world physical marginal over blv strings, |phi| / ||phi||_1.
VectorX<double> world_marginal(const VectorX<double>& P);

/// Coincidence product of two per-world marginals over full blv strings,
/// renormalized and reduced to the listed grabits (big-endian outcome index).
VectorX<double> coincidence_outcomes(const VectorX<double>& p_I, const VectorX<double>& p_II, int n_grabits,
                                     const std::vector<int>& measured);

/// Exact Born-2 outcome distribution. Both worlds run the program in
/// distribution mode; the program must refresh before its last measurement.
VectorX<double> run_twin_distribution(const Program& program);

struct TwinSample {
    /// Accepted counts per outcome of the measured grabits.
    std::vector<std::uint64_t> counts;
    std::uint64_t n_drawn = 0;
    std::uint64_t n_accepted = 0;

    double acceptance_rate() const { return n_drawn ? static_cast<double>(n_accepted) / static_cast<double>(n_drawn) : 0.0; }
    /// Relative frequencies of the accepted outcomes.
    VectorX<double> frequencies() const;
};

/// How each world is represented before the coincidence draw.
///   Exact: the world evolves its exact distribution; n configurations are
///     then drawn from the final distribution, so the only noise is the
///     sampling of the pairs.
///   Ensemble: the world is a finite ensemble from the start. Gates move
///     single samples and refreshments resample from the histogram, so
///     estimation noise enters at every refresh.
enum class WorldModel { Exact, Ensemble };

/// One world's ensemble after running the program with n samples.
Ensemble run_ensemble(const Program& program, std::size_t n_samples, std::uint64_t seed);

/// Pairs sample k of world I with sample k of world II and keeps the pair
/// when their blv strings agree. Throws DegenerateState if nothing is accepted.
TwinSample coincide(const Ensemble& world_I, const Ensemble& world_II, const std::vector<int>& measured);

/// One world's n configurations at readout under the given model.
Ensemble run_world(const Program& program, std::size_t n_samples, std::uint64_t seed, WorldModel model);

/// Both worlds sampled with n_samples each, seeds derived from seed.
TwinSample run_twin_sampled(const Program& program, std::size_t n_samples, std::uint64_t seed,
                            WorldModel model = WorldModel::Exact);
TwinSample run_twin_sampled(const Program& program, std::size_t n_samples, std::uint64_t seed_I,
                            std::uint64_t seed_II, WorldModel model);

/// Seeds of the two worlds derived from one run seed.
std::pair<std::uint64_t, std::uint64_t> world_seeds(std::uint64_t seed);

/// Sum over outcomes of (-1)^(parity of outcome bits) p(outcome).
double parity_expectation(const VectorX<double>& p);

}  // namespace twinworld
