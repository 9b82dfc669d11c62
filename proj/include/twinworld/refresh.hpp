#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "twinworld/core_state.hpp"
#include "twinworld/rng.hpp"

namespace twinworld {

// Refreshment puts the whole mass |phi| of every blv string (circuit) or
// (rho, x) cell (lattice) on a single sigma: sigma = 0 for phi >= 0, sigma = 1
// otherwise, then rescales to unit mass. In circuit mode a negative amplitude
// is carried by the sigma of the last grabit alone.

template <typename Derived>
VectorX<typename Derived::Scalar> embed_signed_circuit(const Eigen::MatrixBase<Derived>& phi_in) {
    using Scalar = typename Derived::Scalar;
    const VectorX<Scalar> phi = snap_zeros(phi_in);
    const Scalar mass = phi.template lpNorm<1>();
    if (!(mass > 0)) throw DegenerateState("extracted amplitude vanishes everywhere");
    const Index dim = phi.size();
    if (dim < 2 || (dim & (dim - 1)) != 0) throw InvalidDistribution("circuit amplitude length must be a power of 2");
    const int n = std::countr_zero(static_cast<std::uint64_t>(dim));
    VectorX<Scalar> P = VectorX<Scalar>::Zero(dim * dim);
    for (Index i = 0; i < dim; ++i) {
        if (phi(i) == 0) continue;
        P(pack_blv_sigma(i, phi(i) < 0 ? 1 : 0, n)) = std::abs(phi(i)) / mass;
    }
    return P;
}

template <typename Derived>
VectorX<typename Derived::Scalar> embed_signed_ppv(const Eigen::MatrixBase<Derived>& phi_in) {
    using Scalar = typename Derived::Scalar;
    const VectorX<Scalar> phi = snap_zeros(phi_in);
    const Scalar mass = phi.template lpNorm<1>();
    if (!(mass > 0)) throw DegenerateState("extracted amplitude vanishes everywhere");
    if (phi.size() % 2 != 0) throw InvalidDistribution("lattice amplitude length must be 2*sites");
    const Index sites = phi.size() / 2;
    VectorX<Scalar> P = VectorX<Scalar>::Zero(4 * sites);
    for (int rho = 0; rho < 2; ++rho)
        for (Index x = 0; x < sites; ++x) {
            const Scalar v = phi(rho * sites + x);
            if (v != 0) P(pack_ppv(rho, v < 0 ? 1 : 0, x, sites)) = std::abs(v) / mass;
        }
    return P;
}

/// True if P already is the refreshment of itself: unit mass and every
/// nonzero entry sits at the canonical sigma for its sign.
template <typename Derived>
bool is_refreshed_circuit(const Eigen::MatrixBase<Derived>& P) {
    if (!is_probability_vector(P)) return false;
    const int n = grabit_count(P.size());
    const Index last_only = 1;
    for (Index I = 0; I < P.size(); ++I) {
        if (P(I) == 0) continue;
        Index sigma = 0;
        for (int g = 0; g < n; ++g) sigma = 2 * sigma + b4v_sigma(grabit_digit(I, n, g));
        if (sigma != 0 && sigma != last_only) return false;
        if (sigma == 0 && P(I ^ 1) != 0) return false;
    }
    return true;
}

template <typename Derived>
bool is_refreshed_ppv(const Eigen::MatrixBase<Derived>& P, Index sites) {
    if (!is_probability_vector(P)) return false;
    for (int rho = 0; rho < 2; ++rho)
        for (Index x = 0; x < sites; ++x) {
            const auto a = P(pack_ppv(rho, 0, x, sites));
            const auto b = P(pack_ppv(rho, 1, x, sites));
            if (a != 0 && b != 0) return false;
        }
    return true;
}

template <typename Derived>
VectorX<typename Derived::Scalar> refresh_circuit(const Eigen::MatrixBase<Derived>& P) {
    if (is_refreshed_circuit(P)) return P;
    return embed_signed_circuit(extract_phi_circuit(P));
}

template <typename Derived>
VectorX<typename Derived::Scalar> refresh_ppv(const Eigen::MatrixBase<Derived>& P, Index sites) {
    if (is_refreshed_ppv(P, sites)) return P;
    return embed_signed_ppv(extract_phi_ppv(P, sites));
}

/// Marginal over sigma after refreshment: |phi| / ||phi||_1.
template <typename Derived>
VectorX<typename Derived::Scalar> born1_marginal(const Eigen::MatrixBase<Derived>& phi) {
    return normalize(phi.cwiseAbs(), Norm::One);
}

// ---------------------------------------------------------------------------
// Finite ensembles

enum class ConfigSpace { Circuit, Ppv };

struct EnsembleLayout {
    ConfigSpace space = ConfigSpace::Circuit;
    /// Number of grabits (circuit) or lattice sites (ppv).
    Index extent = 1;

    Index size() const { return space == ConfigSpace::Circuit ? Index{1} << (2 * extent) : 4 * extent; }
    static EnsembleLayout circuit(int n_grabits) { return {ConfigSpace::Circuit, n_grabits}; }
    static EnsembleLayout ppv(Index sites) { return {ConfigSpace::Ppv, sites}; }
};

/// Multiset of sampled configurations. The seed and generation counter fix
/// every random stream used to produce the next generation.
struct Ensemble {
    EnsembleLayout layout;
    std::vector<std::uint32_t> samples;
    std::uint64_t seed = 0;
    std::uint64_t generation = 0;

    std::size_t size() const { return samples.size(); }
};

/// Relative frequencies R over configurations.
VectorX<double> histogram(const Ensemble& e);

/// Amplitude estimate from relative frequencies, same formula as extraction.
VectorX<double> estimate_phi(const Ensemble& e);

/// Refreshment of a distribution in the ensemble's configuration space.
VectorX<double> refresh_in(const EnsembleLayout& layout, const VectorX<double>& P);

/// n i.i.d. draws from P. Sample k uses substream (seed, stage, k).
Ensemble sample_ensemble(const EnsembleLayout& layout, const VectorX<double>& P, std::size_t n, std::uint64_t seed,
                         std::uint64_t stage);

/// Redistributes the samples i.i.d. from the refreshment of their histogram.
Ensemble refresh_ensemble(const Ensemble& e);

}  // namespace twinworld
