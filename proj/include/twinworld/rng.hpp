#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <vector>

namespace twinworld {

inline constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// SplitMix64. Cheap to construct, so every sample can own a stream.
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit constexpr SplitMix64(std::uint64_t state) : state_(state) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix64(state_);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t state_;
};

/// Independent stream keyed by (seed, stage, index). The key, not the call
/// order, fixes the stream, so results do not depend on scheduling.
inline constexpr SplitMix64 substream(std::uint64_t seed, std::uint64_t stage, std::uint64_t index) {
    return SplitMix64(mix64(mix64(mix64(seed) ^ (stage * 0xd1b54a32d192ed03ULL)) + index * 0x9e3779b97f4a7c15ULL));
}

/// Inverse-CDF draw from a cumulative table whose last entry is the total mass.
inline std::size_t sample_cdf(const std::vector<double>& cdf, double u) {
    const double target = u * cdf.back();
    auto it = std::upper_bound(cdf.begin(), cdf.end(), target);
    std::size_t k = static_cast<std::size_t>(it - cdf.begin());
    if (k < cdf.size()) return k;
    // Rounding put the target on the total; take the last non-empty bin.
    k = cdf.size() - 1;
    while (k > 0 && cdf[k] == cdf[k - 1]) --k;
    return k;
}

}  // namespace twinworld
