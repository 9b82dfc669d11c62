#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "twinworld/core_state.hpp"

namespace twinworld {

template <typename Scalar>
using Matrix4 = Eigen::Matrix<Scalar, 4, 4>;
template <typename Scalar>
using Matrix2 = Eigen::Matrix<Scalar, 2, 2>;

/// Maps an angle into [-pi, pi).
template <typename Scalar>
Scalar wrap_angle(Scalar a) {
    const Scalar pi = std::numbers::pi_v<Scalar>;
    if (a >= -pi && a < pi) return a;
    Scalar r = std::fmod(a + pi, 2 * pi);
    if (r < 0) r += 2 * pi;
    return r - pi;
}

namespace detail {

/// |sin| and |cos| with sub-tolerance values snapped to zero, so that exact
/// multiples of pi/2 land on the permutation limit.
template <typename Scalar>
std::pair<Scalar, Scalar> abs_sin_cos(Scalar a) {
    Scalar s = std::abs(std::sin(a));
    Scalar c = std::abs(std::cos(a));
    if (s < Scalar(kZeroTol)) s = 0;
    if (c < Scalar(kZeroTol)) c = 0;
    return {s, c};
}

// Pattern entries: 0 -> 0, 1 -> |sin|/(|sin|+|cos|), 2 -> |cos|/(|sin|+|cos|).
using Pattern = std::array<std::array<int, 4>, 4>;

/// Weights |sin a|/(|sin a|+|cos a|) and |cos a|/(|sin a|+|cos a|), written
/// as (1 +- tan d)/2 with d the offset of the reference angle from pi/4. The
/// two weights are mirror images, exactly 1/2 at pi/4.
template <typename Scalar>
std::pair<Scalar, Scalar> pattern_weights(Scalar a) {
    const Scalar pi = std::numbers::pi_v<Scalar>;
    Scalar b = std::abs(wrap_angle(a));
    if (b > pi / 2) b = pi - b;
    const Scalar t = std::tan(b - pi / 4);
    Scalar ws = (1 + t) / 2;
    Scalar wc = (1 - t) / 2;
    if (ws < Scalar(kZeroTol)) ws = 0, wc = 1;
    if (wc < Scalar(kZeroTol)) wc = 0, ws = 1;
    return {ws, wc};
}

template <typename Scalar>
Matrix4<Scalar> from_pattern(const Pattern& rows, Scalar a) {
    const auto [one, q] = pattern_weights(a);
    Matrix4<Scalar> S;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) S(i, j) = rows[i][j] == 0 ? Scalar(0) : rows[i][j] == 1 ? one : q;
    return S;
}

}  // namespace detail

/// Stochastic emulation of Q(theta) = [[sin, cos], [cos, -sin]] on one grabit.
template <typename Scalar = double>
Matrix4<Scalar> s_q_theta(Scalar theta) {
    using detail::Pattern;
    static constexpr Pattern q1{{{1, 0, 2, 0}, {0, 1, 0, 2}, {2, 0, 0, 1}, {0, 2, 1, 0}}};
    static constexpr Pattern q2{{{1, 0, 0, 2}, {0, 1, 2, 0}, {0, 2, 0, 1}, {2, 0, 1, 0}}};
    static constexpr Pattern q3{{{0, 1, 0, 2}, {1, 0, 2, 0}, {0, 2, 1, 0}, {2, 0, 0, 1}}};
    static constexpr Pattern q4{{{0, 1, 2, 0}, {1, 0, 0, 2}, {2, 0, 1, 0}, {0, 2, 0, 1}}};
    const Scalar pi = std::numbers::pi_v<Scalar>;
    theta = wrap_angle(theta);
    const Pattern& p = theta >= 0 ? (theta < pi / 2 ? q1 : q2) : (theta < -pi / 2 ? q3 : q4);
    return detail::from_pattern(p, theta);
}

/// Stochastic emulation of the rotation [[cos, -sin], [sin, cos]] acting on the
/// ReIm grabit, i.e. multiplication by exp(i*phi).
template <typename Scalar = double>
Matrix4<Scalar> s_r_phi(Scalar phi) {
    using detail::Pattern;
    static constexpr Pattern q1{{{2, 0, 0, 1}, {0, 2, 1, 0}, {1, 0, 2, 0}, {0, 1, 0, 2}}};
    static constexpr Pattern q2{{{0, 2, 0, 1}, {2, 0, 1, 0}, {1, 0, 0, 2}, {0, 1, 2, 0}}};
    static constexpr Pattern q3{{{0, 2, 1, 0}, {2, 0, 0, 1}, {0, 1, 0, 2}, {1, 0, 2, 0}}};
    static constexpr Pattern q4{{{2, 0, 1, 0}, {0, 2, 0, 1}, {0, 1, 2, 0}, {1, 0, 0, 2}}};
    const Scalar pi = std::numbers::pi_v<Scalar>;
    phi = wrap_angle(phi);
    const Pattern& p = phi > 0 ? (phi <= pi / 2 ? q1 : q2) : (phi <= -pi / 2 ? q3 : q4);
    return detail::from_pattern(p, phi);
}

template <typename Scalar = double>
Matrix4<Scalar> s_h() {
    return s_q_theta<Scalar>(std::numbers::pi_v<Scalar> / 4);
}

template <typename Scalar = double>
Matrix4<Scalar> s_x() {
    Matrix4<Scalar> S = Matrix4<Scalar>::Zero();
    S(2, 0) = S(3, 1) = S(0, 2) = S(1, 3) = 1;
    return S;
}

/// Two-grabit CNOT, control is the first (most significant) grabit.
template <typename Scalar = double>
MatrixX<Scalar> s_cnot() {
    MatrixX<Scalar> S = MatrixX<Scalar>::Zero(16, 16);
    for (int c = 0; c < 4; ++c)
        for (int t = 0; t < 4; ++t) S(4 * c + (b4v_blv(c) ? t ^ 2 : t), 4 * c + t) = 1;
    return S;
}

/// Bistochastic 2x2 acting on sigma, off-diagonal r0.
template <typename Scalar = double>
Matrix2<Scalar> r2_from_r0(Scalar r0) {
    if (!(r0 >= 0 && r0 <= Scalar(0.5))) throw InvalidGate("amplitude reduction r0 must lie in [0, 1/2]");
    Matrix2<Scalar> R;
    R << 1 - r0, r0, r0, 1 - r0;
    return R;
}

/// Norm factor 1/(|sin|+|cos|) = sqrt(1+q^2)/(1+q) with q = |cot phi|.
template <typename Scalar = double>
Scalar amplitude_norm_factor(Scalar phi) {
    const auto [s, c] = detail::abs_sin_cos(wrap_angle(phi));
    return 1 / (s + c);
}

template <typename Scalar = double>
Matrix2<Scalar> r2_amplitude_reduction(Scalar phi) {
    return r2_from_r0<Scalar>((1 - amplitude_norm_factor(phi)) / 2);
}

/// R2 lifted to a full grabit: identity on blv, R2 on sigma.
template <typename Derived>
Matrix4<typename Derived::Scalar> lift_sigma(const Eigen::MatrixBase<Derived>& R2) {
    using Scalar = typename Derived::Scalar;
    Matrix4<Scalar> S = Matrix4<Scalar>::Zero();
    S.template block<2, 2>(0, 0) = R2;
    S.template block<2, 2>(2, 2) = R2;
    return S;
}

/// 2-norm of the extracted image of a basis distribution under a one-grabit gate.
template <typename Derived>
typename Derived::Scalar extracted_column_norm(const Eigen::MatrixBase<Derived>& gate, Index column) {
    return extract_phi_circuit(gate.col(column)).norm();
}

/// Controlled version of a one-grabit gate on a (control, target) pair. The
/// control-blv-1 subspace gets the gate, the control-blv-0 subspace gets the
/// matched amplitude reduction on the control sigma, so both branches shrink
/// the extracted 2-norm by the same factor.
template <typename Derived>
MatrixX<typename Derived::Scalar> lift_controlled(const Eigen::MatrixBase<Derived>& gate) {
    using Scalar = typename Derived::Scalar;
    if (gate.rows() != 4 || gate.cols() != 4) throw InvalidGate("lift_controlled expects a 4x4 gate");
    const Scalar N = extracted_column_norm(gate, 0);
    const Matrix2<Scalar> R2 = r2_from_r0<Scalar>(std::max(Scalar(0), (1 - N) / 2));
    MatrixX<Scalar> S = MatrixX<Scalar>::Zero(16, 16);
    for (int sc = 0; sc < 2; ++sc)
        for (int sc2 = 0; sc2 < 2; ++sc2)
            S.block(4 * sc, 4 * sc2, 4, 4) = R2(sc, sc2) * Matrix4<Scalar>::Identity();
    S.block(8, 8, 4, 4) = gate;
    S.block(12, 12, 4, 4) = gate;
    return S;
}

template <typename Derived>
bool is_column_stochastic(const Eigen::MatrixBase<Derived>& S, double tol = kProbTol) {
    if (!S.allFinite()) return false;
    if ((S.array() < -tol).any() || (S.array() > 1 + tol).any()) return false;
    return ((S.colwise().sum().array() - 1).abs() <= tol).all();
}

template <typename Derived>
bool is_permutation_matrix(const Eigen::MatrixBase<Derived>& S) {
    if (S.rows() != S.cols()) return false;
    for (Index j = 0; j < S.cols(); ++j) {
        int ones = 0;
        for (Index i = 0; i < S.rows(); ++i) {
            if (S(i, j) == 1) ++ones;
            else if (S(i, j) != 0) return false;
        }
        if (ones != 1) return false;
    }
    return ((S.rowwise().sum().array() - 1).abs() == 0).all();
}

/// Real (2n)x(2n) orthogonal image of an n x n unitary. Each element u maps to
/// [[Re u, -Im u], [Im u, Re u]] across the (rho, rho') indices in the given layout.
template <typename Derived>
MatrixX<typename Derived::RealScalar> realify_unitary(const Eigen::MatrixBase<Derived>& U, ReImLayout layout) {
    using Real = typename Derived::RealScalar;
    const Index n = U.rows();
    if (U.cols() != n) throw InvalidGate("unitary must be square");
    const MatrixX<typename Derived::Scalar> UU = U.adjoint() * U;
    if ((UU - MatrixX<typename Derived::Scalar>::Identity(n, n)).cwiseAbs().maxCoeff() > 1e-10)
        throw InvalidGate("matrix is not unitary within 1e-10");
    MatrixX<Real> R(2 * n, 2 * n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) {
            const Real re = std::real(U(i, j));
            const Real im = std::imag(U(i, j));
            R(reim_index(0, i, n, layout), reim_index(0, j, n, layout)) = re;
            R(reim_index(0, i, n, layout), reim_index(1, j, n, layout)) = -im;
            R(reim_index(1, i, n, layout), reim_index(0, j, n, layout)) = im;
            R(reim_index(1, i, n, layout), reim_index(1, j, n, layout)) = re;
        }
    return R;
}

// ---------------------------------------------------------------------------
// Application to grabit registers

namespace detail {

inline void check_operands(const std::vector<int>& targets, int n, Index gate_dim) {
    if (targets.empty()) throw InvalidGate("gate has no operands");
    if (gate_dim != (Index{1} << (2 * targets.size()))) throw InvalidGate("gate dimension does not match operand count");
    for (std::size_t a = 0; a < targets.size(); ++a) {
        if (targets[a] < 0 || targets[a] >= n) throw InvalidGate("operand outside register");
        for (std::size_t b = a + 1; b < targets.size(); ++b)
            if (targets[a] == targets[b]) throw InvalidGate("repeated operand");
    }
}

inline Index scatter_digits(Index base, const std::vector<int>& targets, int n, Index sub) {
    const int k = static_cast<int>(targets.size());
    for (int a = 0; a < k; ++a) base = set_grabit_digit(base, n, targets[a], static_cast<int>((sub >> (2 * (k - 1 - a))) & 3));
    return base;
}

inline Index gather_digits(Index I, const std::vector<int>& targets, int n) {
    Index sub = 0;
    for (int t : targets) sub = 4 * sub + grabit_digit(I, n, t);
    return sub;
}

}  // namespace detail

/// P' = S P with S acting on the listed grabits (first listed is most
/// significant in S's own index) and identity elsewhere.
template <typename DerivedP, typename DerivedS>
typename DerivedP::PlainObject apply_matrix(const Eigen::MatrixBase<DerivedP>& P, const Eigen::MatrixBase<DerivedS>& S,
                                            const std::vector<int>& targets) {
    using Scalar = typename DerivedP::Scalar;
    const int n = grabit_count(P.size());
    if (S.rows() != S.cols()) throw InvalidGate("gate must be square");
    detail::check_operands(targets, n, S.rows());
    const Index d = S.rows();
    typename DerivedP::PlainObject out = DerivedP::PlainObject::Zero(P.size());
    const MatrixX<Scalar> G = S.template cast<Scalar>();
    std::vector<Index> idx(d);
    VectorX<Scalar> sub(d);
    for (Index base = 0; base < P.size(); ++base) {
        if (detail::gather_digits(base, targets, n) != 0) continue;
        for (Index s = 0; s < d; ++s) {
            idx[s] = detail::scatter_digits(base, targets, n, s);
            sub(s) = P(idx[s]);
        }
        const VectorX<Scalar> img = G * sub;
        for (Index s = 0; s < d; ++s) out(idx[s]) = img(s);
    }
    return out;
}

/// Full 4^n x 4^n matrix of a gate embedded in an n-grabit register.
template <typename DerivedS>
MatrixX<typename DerivedS::Scalar> embed_gate(const Eigen::MatrixBase<DerivedS>& S, const std::vector<int>& targets, int n) {
    using Scalar = typename DerivedS::Scalar;
    const Index dim = Index{1} << (2 * n);
    MatrixX<Scalar> E(dim, dim);
    for (Index j = 0; j < dim; ++j) E.col(j) = apply_matrix(VectorX<Scalar>::Unit(dim, j), S, targets);
    return E;
}

}  // namespace twinworld
