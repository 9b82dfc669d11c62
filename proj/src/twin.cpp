#include "twinworld/twin.hpp"

#include <bit>

#include "twinworld/rng.hpp"

namespace twinworld {

VectorX<double> born2_distribution(const MatrixX<double>& p) {
    if (p.size() == 0 || (p.array() < 0).any() || !p.allFinite())
        throw InvalidDistribution("Born-2 input must be finite and non-negative");
    const VectorX<double> sq = p.cwiseAbs2().rowwise().sum();
    const double total = sq.sum();
    if (!(total > 0)) throw DegenerateState("no coincidence mass");
    return sq / total;
}

VectorX<double> world_marginal(const VectorX<double>& P) { return born1_marginal(extract_phi_circuit(P)); }

VectorX<double> coincidence_outcomes(const VectorX<double>& p_I, const VectorX<double>& p_II, int n_grabits,
                                     const std::vector<int>& measured) {
    if (p_I.size() != p_II.size() || p_I.size() != (Index{1} << n_grabits))
        throw InvalidDistribution("world marginals do not match the register");
    const VectorX<double> joint = p_I.cwiseProduct(p_II);
    const double total = joint.sum();
    if (!(total > 0)) throw DegenerateState("worlds never coincide");
    const int m = static_cast<int>(measured.size());
    VectorX<double> out = VectorX<double>::Zero(Index{1} << m);
    for (Index i = 0; i < joint.size(); ++i) {
        Index o = 0;
        for (int g : measured) o = 2 * o + ((i >> (n_grabits - 1 - g)) & 1);
        out(o) += joint(i);
    }
    return out / total;
}

namespace {

void require_final_refresh(const Program& program) {
    bool refreshed = false;
    bool measured_after = false;
    for (const auto& g : program.gates) {
        if (g.kind == GateKind::Refresh) refreshed = true;
        else if (g.kind == GateKind::Measure) measured_after = refreshed;
        else refreshed = false;
    }
    if (program.measured().empty()) throw InvalidProgram("program measures nothing");
    if (!measured_after) throw InvalidProgram("program must refresh before the readout");
}

}  // namespace

VectorX<double> run_twin_distribution(const Program& program) {
    require_final_refresh(program);
    const VectorX<double> P = run_distribution(program);
    const VectorX<double> p = world_marginal(P);
    // The worlds are identical in distribution mode; the product is still
    // formed over full configurations before marginalizing.
    return coincidence_outcomes(p, p, program.n_grabits, program.measured());
}

VectorX<double> TwinSample::frequencies() const {
    VectorX<double> f(static_cast<Index>(counts.size()));
    for (std::size_t i = 0; i < counts.size(); ++i)
        f(static_cast<Index>(i)) = n_accepted ? static_cast<double>(counts[i]) / static_cast<double>(n_accepted) : 0.0;
    return f;
}

Ensemble run_ensemble(const Program& program, std::size_t n_samples, std::uint64_t seed) {
    validate(program);
    if (n_samples < 1) throw ConfigError("n_samples", "need at least one sample");
    const int n = program.n_grabits;
    Ensemble e{EnsembleLayout::circuit(n), std::vector<std::uint32_t>(n_samples, 0), seed, 0};
    for (std::size_t gi = 0; gi < program.gates.size(); ++gi) {
        const auto& g = program.gates[gi];
        if (g.kind == GateKind::Measure) continue;
        if (g.kind == GateKind::Refresh) {
            e = refresh_ensemble(e);
            continue;
        }
        const BoundGate b = stochastic_gate(g, program);
        const Index d = b.matrix.rows();
        std::vector<std::vector<double>> cdf(static_cast<std::size_t>(d), std::vector<double>(static_cast<std::size_t>(d)));
        for (Index j = 0; j < d; ++j) {
            double acc = 0;
            for (Index i = 0; i < d; ++i) cdf[j][i] = acc += b.matrix(i, j);
        }
        for (std::size_t k = 0; k < n_samples; ++k) {
            const Index I = e.samples[k];
            const Index col = detail::gather_digits(I, b.operands, n);
            auto rng = substream(seed, gi, k);
            const Index row = static_cast<Index>(sample_cdf(cdf[col], rng.uniform()));
            e.samples[k] = static_cast<std::uint32_t>(detail::scatter_digits(I, b.operands, n, row));
        }
    }
    return e;
}

TwinSample coincide(const Ensemble& world_I, const Ensemble& world_II, const std::vector<int>& measured) {
    if (world_I.layout.space != ConfigSpace::Circuit || world_II.layout.space != ConfigSpace::Circuit ||
        world_I.layout.extent != world_II.layout.extent)
        throw InvalidDistribution("worlds must share a circuit layout");
    const int n = static_cast<int>(world_I.layout.extent);
    const std::size_t pairs = std::min(world_I.size(), world_II.size());
    TwinSample out;
    out.counts.assign(std::size_t{1} << measured.size(), 0);
    out.n_drawn = pairs;
    for (std::size_t k = 0; k < pairs; ++k) {
        const Index a = blv_string(world_I.samples[k], n);
        if (a != blv_string(world_II.samples[k], n)) continue;
        Index o = 0;
        for (int g : measured) o = 2 * o + ((a >> (n - 1 - g)) & 1);
        ++out.counts[static_cast<std::size_t>(o)];
        ++out.n_accepted;
    }
    if (out.n_accepted == 0)
        throw DegenerateState("no coincidences among " + std::to_string(out.n_drawn) + " drawn pairs");
    return out;
}

std::pair<std::uint64_t, std::uint64_t> world_seeds(std::uint64_t seed) {
    return {mix64(seed ^ 0x776f726c64490000ULL), mix64(seed ^ 0x776f726c64494900ULL)};
}

Ensemble run_world(const Program& program, std::size_t n_samples, std::uint64_t seed, WorldModel model) {
    if (model == WorldModel::Ensemble) return run_ensemble(program, n_samples, seed);
    if (n_samples < 1) throw ConfigError("n_samples", "need at least one sample");
    constexpr std::uint64_t kReadoutStage = 0x726561646f757400ULL;
    return sample_ensemble(EnsembleLayout::circuit(program.n_grabits), run_distribution(program), n_samples, seed,
                           kReadoutStage);
}

TwinSample run_twin_sampled(const Program& program, std::size_t n_samples, std::uint64_t seed_I,
                            std::uint64_t seed_II, WorldModel model) {
    require_final_refresh(program);
    const Ensemble a = run_world(program, n_samples, seed_I, model);
    const Ensemble b = run_world(program, n_samples, seed_II, model);
    return coincide(a, b, program.measured());
}

TwinSample run_twin_sampled(const Program& program, std::size_t n_samples, std::uint64_t seed, WorldModel model) {
    const auto [a, b] = world_seeds(seed);
    return run_twin_sampled(program, n_samples, a, b, model);
}

double parity_expectation(const VectorX<double>& p) {
    double e = 0;
    for (Index i = 0; i < p.size(); ++i) e += (std::popcount(static_cast<std::uint64_t>(i)) & 1 ? -1.0 : 1.0) * p(i);
    return e;
}

}  // namespace twinworld
