#include "twinworld/refresh.hpp"

namespace twinworld {

namespace {

constexpr std::uint64_t kResampleStage = 0x7265667265736801ULL;

void check_samples(const Ensemble& e) {
    if (e.samples.empty()) throw InvalidDistribution("ensemble is empty");
    const Index size = e.layout.size();
    for (auto s : e.samples)
        if (static_cast<Index>(s) >= size) throw InvalidDistribution("sample outside configuration space");
}

}  // namespace

VectorX<double> histogram(const Ensemble& e) {
    check_samples(e);
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(e.layout.size()), 0);
    for (auto s : e.samples) ++counts[s];
    VectorX<double> R(e.layout.size());
    const double n = static_cast<double>(e.samples.size());
    for (Index i = 0; i < R.size(); ++i) R(i) = static_cast<double>(counts[static_cast<std::size_t>(i)]) / n;
    return R;
}

VectorX<double> estimate_phi(const Ensemble& e) {
    const VectorX<double> R = histogram(e);
    return e.layout.space == ConfigSpace::Circuit ? extract_phi_circuit(R) : extract_phi_ppv(R, e.layout.extent);
}

VectorX<double> refresh_in(const EnsembleLayout& layout, const VectorX<double>& P) {
    return layout.space == ConfigSpace::Circuit ? refresh_circuit(P) : refresh_ppv(P, layout.extent);
}

Ensemble sample_ensemble(const EnsembleLayout& layout, const VectorX<double>& P, std::size_t n, std::uint64_t seed,
                         std::uint64_t stage) {
    if (P.size() != layout.size()) throw InvalidDistribution("distribution does not match ensemble layout");
    if ((P.array() < 0).any() || !(P.sum() > 0)) throw InvalidDistribution("cannot sample from this distribution");
    std::vector<double> cdf(static_cast<std::size_t>(P.size()));
    double acc = 0;
    for (Index i = 0; i < P.size(); ++i) cdf[static_cast<std::size_t>(i)] = acc += P(i);
    Ensemble out{layout, std::vector<std::uint32_t>(n), seed, stage};
    for (std::size_t k = 0; k < n; ++k) {
        auto rng = substream(seed, stage, k);
        out.samples[k] = static_cast<std::uint32_t>(sample_cdf(cdf, rng.uniform()));
    }
    return out;
}

Ensemble refresh_ensemble(const Ensemble& e) {
    const VectorX<double> refreshed = refresh_in(e.layout, histogram(e));
    Ensemble out = sample_ensemble(e.layout, refreshed, e.samples.size(), e.seed,
                                   kResampleStage + e.generation);
    out.generation = e.generation + 1;
    return out;
}

}  // namespace twinworld
