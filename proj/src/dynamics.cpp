#include "twinworld/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "twinworld/rng.hpp"

namespace twinworld {

using Triplet = Eigen::Triplet<double>;

Index LatticeSpec::sites() const {
    Index s = 1;
    for (int a = 0; a < axes(); ++a) s *= N;
    return s;
}

void LatticeSpec::validate(Index max_states) const {
    if (N < 3) throw ConfigError("N", "lattice needs at least 3 sites per dimension");
    if (D < 1 || M < 1) throw ConfigError("D", "dimensions and particles must be positive");
    Index s = 1;
    for (int a = 0; a < axes(); ++a) {
        if (s > max_states / (4 * N)) throw ConfigError("N", "state dimension exceeds the memory bound");
        s *= N;
    }
}

SparseMatrix build_O1(Index N) {
    std::vector<Triplet> t;
    for (Index a = 0; a < N; ++a) {
        t.emplace_back((a + 1) % N, a, 1.0);
        t.emplace_back((a + N - 1) % N, a, 1.0);
    }
    SparseMatrix O(N, N);
    O.setFromTriplets(t.begin(), t.end());
    return O;
}

namespace {

Index axis_stride(const LatticeSpec& spec, int axis) {
    Index s = 1;
    for (int a = axis + 1; a < spec.axes(); ++a) s *= spec.N;
    return s;
}

}  // namespace

SparseMatrix build_O1(const LatticeSpec& spec, int dim_i, int particle_j) {
    if (dim_i < 1 || dim_i > spec.D || particle_j < 1 || particle_j > spec.M)
        throw ConfigError("O1", "coordinate index out of range");
    const int axis = spec.D * (particle_j - 1) + dim_i - 1;
    const Index stride = axis_stride(spec, axis);
    const Index n = spec.sites();
    std::vector<Triplet> t;
    t.reserve(2 * n);
    for (Index x = 0; x < n; ++x) {
        const Index c = (x / stride) % spec.N;
        const Index base = x - c * stride;
        t.emplace_back(base + ((c + 1) % spec.N) * stride, x, 1.0);
        t.emplace_back(base + ((c + spec.N - 1) % spec.N) * stride, x, 1.0);
    }
    SparseMatrix O(n, n);
    O.setFromTriplets(t.begin(), t.end());
    return O;
}

SparseMatrix neighbor_sum(const LatticeSpec& spec) {
    SparseMatrix sum(spec.sites(), spec.sites());
    for (int j = 1; j <= spec.M; ++j)
        for (int i = 1; i <= spec.D; ++i) sum += build_O1(spec, i, j);
    return sum;
}

namespace {

// Places a sites x sites sparse block at block position (rb, cb) of a 4x4 layout.
void put_block(std::vector<Triplet>& t, const SparseMatrix& B, Index sites, int rb, int cb, double scale = 1.0) {
    for (Index k = 0; k < B.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(B, k); it; ++it)
            t.emplace_back(rb * sites + it.row(), cb * sites + it.col(), scale * it.value());
}

void put_diag(std::vector<Triplet>& t, const VectorX<double>& d, Index sites, int rb, int cb) {
    for (Index x = 0; x < sites; ++x)
        if (d(x) != 0) t.emplace_back(rb * sites + x, cb * sites + x, d(x));
}

SparseMatrix assemble(std::vector<Triplet>& t, Index sites) {
    SparseMatrix G(4 * sites, 4 * sites);
    G.setFromTriplets(t.begin(), t.end());
    G.makeCompressed();
    return G;
}

}  // namespace

SparseMatrix build_GT_sparse(const LatticeSpec& spec) {
    spec.validate();
    const Index n = spec.sites();
    const double dm = 2.0 * spec.D * spec.M;
    const SparseMatrix O = neighbor_sum(spec);
    const VectorX<double> diag = VectorX<double>::Constant(n, -2 * dm);
    const VectorX<double> cross = VectorX<double>::Constant(n, dm);
    std::vector<Triplet> t;
    for (int b = 0; b < 4; ++b) put_diag(t, diag, n, b, b);
    // Row blocks 00 and 01 couple to column blocks 10 and 11, and vice versa.
    put_diag(t, cross, n, 0, 2);
    put_block(t, O, n, 0, 3);
    put_block(t, O, n, 1, 2);
    put_diag(t, cross, n, 1, 3);
    put_block(t, O, n, 2, 0);
    put_diag(t, cross, n, 2, 1);
    put_diag(t, cross, n, 3, 0);
    put_block(t, O, n, 3, 1);
    return assemble(t, n);
}

MatrixX<double> build_GT(const LatticeSpec& spec) { return MatrixX<double>(build_GT_sparse(spec)); }

void validate_potential(const LatticeSpec& spec, const VectorX<double>& W) {
    if (W.size() != spec.sites()) throw InvalidPotential("potential has " + std::to_string(W.size()) +
                                                         " entries, lattice has " + std::to_string(spec.sites()));
    if (!W.allFinite()) throw InvalidPotential("potential must be finite everywhere");
}

SparseMatrix build_GV_sparse(const LatticeSpec& spec, const VectorX<double>& W) {
    spec.validate();
    validate_potential(spec, W);
    const Index n = spec.sites();
    const double W0 = W.size() ? W.cwiseAbs().maxCoeff() : 0.0;
    const VectorX<double> absW = W.cwiseAbs();
    const VectorX<double> d = -(VectorX<double>::Constant(n, W0) + absW) / 2;
    const VectorX<double> o = (VectorX<double>::Constant(n, W0) - absW) / 2;
    const VectorX<double> wp = W.cwiseMax(0.0);
    const VectorX<double> wm = (-W).cwiseMax(0.0);
    std::vector<Triplet> t;
    for (int b = 0; b < 4; ++b) put_diag(t, d, n, b, b);
    put_diag(t, o, n, 0, 1);
    put_diag(t, o, n, 1, 0);
    put_diag(t, o, n, 2, 3);
    put_diag(t, o, n, 3, 2);
    put_diag(t, wp, n, 0, 2);
    put_diag(t, wm, n, 0, 3);
    put_diag(t, wm, n, 1, 2);
    put_diag(t, wp, n, 1, 3);
    put_diag(t, wm, n, 2, 0);
    put_diag(t, wp, n, 2, 1);
    put_diag(t, wp, n, 3, 0);
    put_diag(t, wm, n, 3, 1);
    return assemble(t, n);
}

MatrixX<double> build_GV(const LatticeSpec& spec, const VectorX<double>& W) {
    return MatrixX<double>(build_GV_sparse(spec, W));
}

double max_step(const LatticeSpec& spec, const VectorX<double>& W) {
    validate_potential(spec, W);
    const double W0 = W.size() ? W.cwiseAbs().maxCoeff() : 0.0;
    return 1.0 / (4.0 * spec.D * spec.M + W0);
}

SparseMatrix build_step_sparse(const LatticeSpec& spec, const VectorX<double>& W, double dt) {
    if (!(dt >= 0) || !std::isfinite(dt)) throw ConfigError("dt", "time step must be finite and non-negative");
    const double limit = max_step(spec, W);
    if (dt > limit) throw StepTooLarge(dt, limit);
    SparseMatrix I(4 * spec.sites(), 4 * spec.sites());
    I.setIdentity();
    SparseMatrix S = I + dt * (build_GT_sparse(spec) + build_GV_sparse(spec, W));
    S.prune(0.0);
    S.makeCompressed();
    return S;
}

MatrixX<double> build_step(const LatticeSpec& spec, const VectorX<double>& W, double dt) {
    return MatrixX<double>(build_step_sparse(spec, W, dt));
}

MatrixX<double> ppv_block(const MatrixX<double>& G, Index sites, int row_block, int col_block) {
    return G.block(row_block * sites, col_block * sites, sites, sites);
}

VectorX<double> barrier_potential(Index N, Index lo, Index hi, double height) {
    if (lo < 0 || hi >= N || lo > hi) throw ConfigError("barrier", "barrier range must satisfy 0 <= lo <= hi < N");
    VectorX<double> W = VectorX<double>::Zero(N);
    W.segment(lo, hi - lo + 1).setConstant(height);
    return W;
}

VectorX<double> contact_potential(const LatticeSpec& spec, double u) {
    const Index n = spec.sites();
    VectorX<double> W = VectorX<double>::Zero(n);
    std::vector<Index> coord(spec.axes());
    for (Index x = 0; x < n; ++x) {
        Index r = x;
        for (int a = spec.axes() - 1; a >= 0; --a) {
            coord[a] = r % spec.N;
            r /= spec.N;
        }
        bool touch = false;
        for (int j1 = 0; j1 < spec.M && !touch; ++j1)
            for (int j2 = j1 + 1; j2 < spec.M && !touch; ++j2) {
                bool same = true;
                for (int i = 0; i < spec.D; ++i) same = same && coord[spec.D * j1 + i] == coord[spec.D * j2 + i];
                touch = same;
            }
        if (touch) W(x) = u;
    }
    return W;
}

VectorX<std::complex<double>> gaussian_packet(Index N, double x0, double k, double sigma_x) {
    VectorX<std::complex<double>> psi(N);
    if (sigma_x <= 0) {
        psi.setZero();
        const Index at = static_cast<Index>(std::llround(x0));
        if (at < 0 || at >= N) throw ConfigError("x0", "packet centre outside the lattice");
        psi(at) = std::polar(1.0, 2 * std::numbers::pi * k * static_cast<double>(at) / static_cast<double>(N));
        return psi;
    }
    for (Index x = 0; x < N; ++x) {
        const double dx = static_cast<double>(x) - x0;
        psi(x) = std::exp(-dx * dx / (4 * sigma_x * sigma_x)) *
                 std::polar(1.0, 2 * std::numbers::pi * k * static_cast<double>(x) / static_cast<double>(N));
    }
    return normalize(psi, Norm::Two);
}

VectorX<double> embed_state(const VectorX<std::complex<double>>& psi) {
    return embed_signed_ppv(realify(psi, ReImLayout::Major));
}

VectorX<double> init_gaussian_packet(const LatticeSpec& spec, double x0, double k, double sigma_x) {
    if (spec.axes() != 1) throw ConfigError("D", "Gaussian packets are defined for one coordinate");
    spec.validate();
    return embed_state(gaussian_packet(spec.N, x0, k, sigma_x));
}

namespace {

template <typename Matrix>
Trajectory propagate_impl(const VectorX<double>& P0, const Matrix& S, Index sites, double dt,
                          const std::vector<Index>& snapshot_steps) {
    if (P0.size() != 4 * sites || S.rows() != P0.size() || S.cols() != P0.size())
        throw InvalidDistribution("state and step dimensions disagree");
    require_probability_vector(P0, "initial distribution");
    std::vector<Index> steps = snapshot_steps;
    std::sort(steps.begin(), steps.end());
    steps.erase(std::unique(steps.begin(), steps.end()), steps.end());
    Trajectory tr;
    VectorX<double> P = P0;
    VectorX<double> next(P.size());
    Index k = 0;
    for (Index target : steps) {
        if (target < 0) continue;
        for (; k < target; ++k) {
            next.noalias() = S * P;
            P = refresh_ppv(next, sites);
        }
        tr.steps.push_back(k);
        tr.times.push_back(static_cast<double>(k) * dt);
        tr.states.push_back(P);
    }
    return tr;
}

std::vector<Index> strided(Index n_steps, Index stride) {
    if (n_steps < 0) throw ConfigError("N_t", "number of steps must be non-negative");
    if (stride < 1) stride = 1;
    std::vector<Index> s;
    for (Index k = 0; k <= n_steps; k += stride) s.push_back(k);
    if (s.back() != n_steps) s.push_back(n_steps);
    return s;
}

}  // namespace

Trajectory propagate(const VectorX<double>& P0, const MatrixX<double>& S, Index sites, double dt,
                     const std::vector<Index>& snapshot_steps) {
    return propagate_impl(P0, S, sites, dt, snapshot_steps);
}

Trajectory propagate(const VectorX<double>& P0, const SparseMatrix& S, Index sites, double dt,
                     const std::vector<Index>& snapshot_steps) {
    return propagate_impl(P0, S, sites, dt, snapshot_steps);
}

Trajectory propagate(const VectorX<double>& P0, const LatticeSpec& spec, const VectorX<double>& W, double dt,
                     Index n_steps, Index snapshot_stride) {
    const auto steps = strided(n_steps, snapshot_stride);
    if (spec.sites() > kDenseSiteLimit) return propagate(P0, build_step_sparse(spec, W, dt), spec.sites(), dt, steps);
    return propagate(P0, build_step(spec, W, dt), spec.sites(), dt, steps);
}

std::vector<Ensemble> propagate_ensemble(const Ensemble& e0, const SparseMatrix& S, Index n_steps,
                                         Index snapshot_stride) {
    if (e0.layout.space != ConfigSpace::Ppv || S.rows() != e0.layout.size())
        throw InvalidDistribution("ensemble layout does not match the step matrix");
    constexpr std::uint64_t kMoveStage = 0x6d6f766500000000ULL;
    // Column CDFs of S in compressed column order.
    std::vector<std::vector<double>> cdf(static_cast<std::size_t>(S.cols()));
    std::vector<std::vector<Index>> rows(static_cast<std::size_t>(S.cols()));
    for (Index j = 0; j < S.outerSize(); ++j) {
        double acc = 0;
        for (SparseMatrix::InnerIterator it(S, j); it; ++it) {
            acc += it.value();
            cdf[j].push_back(acc);
            rows[j].push_back(it.row());
        }
    }
    std::vector<Ensemble> out{e0};
    Ensemble e = e0;
    if (snapshot_stride < 1) snapshot_stride = 1;
    for (Index k = 1; k <= n_steps; ++k) {
        for (std::size_t s = 0; s < e.samples.size(); ++s) {
            auto rng = substream(e.seed, kMoveStage + static_cast<std::uint64_t>(k), s);
            const auto j = e.samples[s];
            e.samples[s] = static_cast<std::uint32_t>(rows[j][sample_cdf(cdf[j], rng.uniform())]);
        }
        e = refresh_ensemble(e);
        if (k % snapshot_stride == 0 || k == n_steps) out.push_back(e);
    }
    return out;
}

}  // namespace twinworld
