#pragma once

#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "twinworld/errors.hpp"

namespace twinworld {

using Index = Eigen::Index;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Tolerance for distribution-level equalities (normalization, column sums).
inline constexpr double kProbTol = 1e-12;
/// Magnitudes below this are treated as exact zeros when deciding support.
inline constexpr double kZeroTol = 1e-14;

// ---------------------------------------------------------------------------
// b4v indexing
//
// A single grabit has four values I = 2*blv + sigma. An n-grabit string is
// packed big-endian: I = sum_g 4^(n-1-g) * I_g, so grabit 0 is the most
// significant digit. The blv string uses the same order in base 2.

inline constexpr int b4v(int blv, int sigma) { return 2 * blv + sigma; }
inline constexpr int b4v_blv(int I) { return I >> 1; }
inline constexpr int b4v_sigma(int I) { return I & 1; }

inline int grabit_count(Index size) {
    if (size < 4 || !std::has_single_bit(static_cast<std::uint64_t>(size)) ||
        std::countr_zero(static_cast<std::uint64_t>(size)) % 2 != 0)
        throw InvalidDistribution("length " + std::to_string(size) + " is not a power of 4");
    return std::countr_zero(static_cast<std::uint64_t>(size)) / 2;
}

inline constexpr std::uint64_t kSigmaMask = 0x5555555555555555ULL;

/// blv string index of a packed b4v string.
inline Index blv_string(Index I, int n) {
    std::uint64_t u = static_cast<std::uint64_t>(I);
    Index out = 0;
    for (int g = 0; g < n; ++g) out |= static_cast<Index>((u >> (2 * g + 1)) & 1u) << g;
    return out;
}

/// Parity of the sigma bits of a packed b4v string.
inline int sigma_parity(Index I) {
    return std::popcount(static_cast<std::uint64_t>(I) & kSigmaMask) & 1;
}

inline int grabit_digit(Index I, int n, int g) { return static_cast<int>((I >> (2 * (n - 1 - g))) & 3); }

inline Index set_grabit_digit(Index I, int n, int g, int value) {
    const int shift = 2 * (n - 1 - g);
    return (I & ~(Index{3} << shift)) | (Index{value} << shift);
}

inline Index pack_b4v_string(const std::vector<int>& digits) {
    Index I = 0;
    for (int d : digits) I = 4 * I + d;
    return I;
}

inline std::vector<int> unpack_b4v_string(Index I, int n) {
    std::vector<int> digits(n);
    for (int g = 0; g < n; ++g) digits[g] = grabit_digit(I, n, g);
    return digits;
}

/// Packs a blv string together with a sigma string (both big-endian bit indices).
inline Index pack_blv_sigma(Index blv, Index sigma, int n) {
    Index I = 0;
    for (int g = 0; g < n; ++g) {
        const int bit = n - 1 - g;
        I = 4 * I + b4v(static_cast<int>((blv >> bit) & 1), static_cast<int>((sigma >> bit) & 1));
    }
    return I;
}

// ---------------------------------------------------------------------------
// ppv indexing: I = (2*rho + sigma) * sites + x, rho most significant.

struct Ppv {
    int rho;
    int sigma;
    Index x;
};

inline constexpr Index pack_ppv(int rho, int sigma, Index x, Index sites) { return (2 * rho + sigma) * sites + x; }

inline constexpr Ppv unpack_ppv(Index I, Index sites) {
    const Index block = I / sites;
    return {static_cast<int>(block >> 1), static_cast<int>(block & 1), I % sites};
}

// ---------------------------------------------------------------------------
// Extraction

template <typename Derived>
VectorX<typename Derived::Scalar> extract_phi_circuit(const Eigen::MatrixBase<Derived>& P) {
    using Scalar = typename Derived::Scalar;
    const int n = grabit_count(P.size());
    VectorX<Scalar> phi = VectorX<Scalar>::Zero(Index{1} << n);
    for (Index I = 0; I < P.size(); ++I) {
        const Scalar v = P(I);
        phi(blv_string(I, n)) += sigma_parity(I) ? -v : v;
    }
    return phi;
}

template <typename Derived>
VectorX<typename Derived::Scalar> extract_phi_ppv(const Eigen::MatrixBase<Derived>& P, Index sites) {
    using Scalar = typename Derived::Scalar;
    if (sites <= 0 || P.size() != 4 * sites)
        throw InvalidDistribution("ppv distribution length must be 4*sites");
    VectorX<Scalar> phi(2 * sites);
    phi.head(sites) = P.segment(0, sites) - P.segment(sites, sites);
    phi.tail(sites) = P.segment(2 * sites, sites) - P.segment(3 * sites, sites);
    return phi;
}

// ---------------------------------------------------------------------------
// Realification

/// Where the real/imaginary index goes in a realified vector.
/// Major: index rho*n + i (Re block then Im block). Minor: index 2*i + rho.
enum class ReImLayout { Major, Minor };

inline Index reim_index(int rho, Index i, Index n, ReImLayout layout) {
    return layout == ReImLayout::Major ? rho * n + i : 2 * i + rho;
}

template <typename Derived>
VectorX<typename Derived::RealScalar> realify(const Eigen::MatrixBase<Derived>& psi,
                                              ReImLayout layout = ReImLayout::Major) {
    const Index n = psi.size();
    VectorX<typename Derived::RealScalar> phi(2 * n);
    for (Index i = 0; i < n; ++i) {
        phi(reim_index(0, i, n, layout)) = std::real(psi(i));
        phi(reim_index(1, i, n, layout)) = std::imag(psi(i));
    }
    return phi;
}

template <typename Derived>
VectorX<std::complex<typename Derived::Scalar>> complexify(const Eigen::MatrixBase<Derived>& phi,
                                                           ReImLayout layout = ReImLayout::Major) {
    if (phi.size() % 2 != 0) throw InvalidDistribution("realified vector must have even length");
    const Index n = phi.size() / 2;
    VectorX<std::complex<typename Derived::Scalar>> psi(n);
    for (Index i = 0; i < n; ++i) psi(i) = {phi(reim_index(0, i, n, layout)), phi(reim_index(1, i, n, layout))};
    return psi;
}

// ---------------------------------------------------------------------------
// Norms and validation

enum class Norm { One, Two };

template <typename Derived>
typename Derived::PlainObject normalize(const Eigen::MatrixBase<Derived>& v, Norm norm) {
    const auto n = norm == Norm::One ? v.template lpNorm<1>() : v.norm();
    if (!(n > 0) || !std::isfinite(static_cast<double>(n))) throw DegenerateState("cannot normalize a zero vector");
    return v / n;
}

template <typename Derived>
bool is_probability_vector(const Eigen::MatrixBase<Derived>& P, double tol = kProbTol) {
    if (P.size() == 0 || !P.allFinite()) return false;
    if ((P.array() < 0).any()) return false;
    return std::abs(static_cast<double>(P.sum()) - 1.0) <= tol;
}

template <typename Derived>
void require_probability_vector(const Eigen::MatrixBase<Derived>& P, const char* what = "distribution") {
    if (!is_probability_vector(P)) throw InvalidDistribution(std::string(what) + " is not a normalized probability vector");
}

/// Sets entries with magnitude below tol to exactly zero.
template <typename Derived>
typename Derived::PlainObject snap_zeros(const Eigen::MatrixBase<Derived>& v, double tol = kZeroTol) {
    typename Derived::PlainObject out = v;
    for (Index i = 0; i < out.size(); ++i)
        if (std::abs(out(i)) < tol) out(i) = 0;
    return out;
}

/// Unit-mass distribution on a single configuration.
inline VectorX<double> basis_distribution(Index size, Index at) {
    VectorX<double> P = VectorX<double>::Zero(size);
    P(at) = 1.0;
    return P;
}

}  // namespace twinworld
