#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "twinworld/oracle.hpp"
#include "twinworld/twin.hpp"

using namespace twinworld;

namespace {

constexpr double pi = std::numbers::pi;

VectorX<double> vec(std::initializer_list<double> v) {
    VectorX<double> out(static_cast<Index>(v.size()));
    Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

// Random circuit on qubit grabits 0..2 with the ReIm grabit at 3.
Program random_program(std::mt19937_64& gen, bool mid_refresh) {
    Program p;
    p.n_grabits = 4;
    p.reim = 3;
    std::uniform_int_distribution<int> kind(0, 6), qubit(0, 2);
    std::uniform_real_distribution<double> angle(-pi, pi);
    for (int k = 0; k < 12; ++k) {
        const int a = qubit(gen);
        int b = qubit(gen);
        while (b == a) b = qubit(gen);
        switch (kind(gen)) {
            case 0: p.gates.push_back({GateKind::X, {a}, {}, 0}); break;
            case 1: p.gates.push_back({GateKind::H, {a}, {}, 0}); break;
            case 2: p.gates.push_back({GateKind::Q, {a}, {}, angle(gen)}); break;
            case 3: p.gates.push_back({GateKind::CNOT, {b}, {a}, 0}); break;
            case 4: p.gates.push_back({GateKind::ControlledQ, {b}, {a}, angle(gen)}); break;
            case 5: p.gates.push_back({GateKind::ControlledPhase, {3}, {a}, angle(gen)}); break;
            default: p.gates.push_back({GateKind::Phase, {3}, {}, angle(gen)}); break;
        }
        if (mid_refresh && k == 6) p.gates.push_back({GateKind::Refresh, {}, {}, 0});
    }
    p.gates.push_back({GateKind::Refresh, {}, {}, 0});
    p.gates.push_back({GateKind::Measure, {0, 1, 2}, {}, 0});
    return p;
}

// Two-sample permutation test on outcome labels with the total variation
// distance as statistic. Returns the p-value.
double permutation_p_value(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b, int rounds,
                           std::uint64_t seed) {
    std::vector<int> labels;
    std::vector<int> group;
    for (std::size_t o = 0; o < a.size(); ++o) {
        labels.insert(labels.end(), a[o], static_cast<int>(o));
        labels.insert(labels.end(), b[o], static_cast<int>(o));
        group.insert(group.end(), a[o], 0);
        group.insert(group.end(), b[o], 1);
    }
    std::size_t n_a = 0;
    for (auto c : a) n_a += c;
    const std::size_t n_b = labels.size() - n_a;
    auto statistic = [&](const std::vector<int>& g) {
        std::vector<double> ha(a.size(), 0), hb(a.size(), 0);
        for (std::size_t k = 0; k < labels.size(); ++k) (g[k] ? hb : ha)[static_cast<std::size_t>(labels[k])] += 1;
        double tv = 0;
        for (std::size_t o = 0; o < a.size(); ++o)
            tv += std::abs(ha[o] / static_cast<double>(n_a) - hb[o] / static_cast<double>(n_b));
        return tv;
    };
    const double observed = statistic(group);
    std::mt19937_64 gen(seed);
    int extreme = 0;
    for (int r = 0; r < rounds; ++r) {
        std::shuffle(group.begin(), group.end(), gen);
        if (statistic(group) >= observed) ++extreme;
    }
    return (extreme + 1.0) / (rounds + 1.0);
}

}  // namespace

TEST(Born2, Examples) {
    EXPECT_EQ(born2_distribution(vec({0.5, 0.5})), vec({0.5, 0.5}));
    const VectorX<double> p = born2_distribution(vec({1.0 / 3, 2.0 / 3}));
    EXPECT_NEAR(p(0), 0.2, 1e-15);
    EXPECT_NEAR(p(1), 0.8, 1e-15);
    EXPECT_THROW(born2_distribution(vec({0, 0})), DegenerateState);
    EXPECT_THROW(born2_distribution(vec({-0.1, 1.1})), InvalidDistribution);
}

TEST(Born2, PhaseRotationCurve) {
    for (int k = 0; k <= 40; ++k) {
        const double phi = -pi + 2 * pi * k / 40;
        const VectorX<double> p = run_twin_distribution(phase_rotation_program(phi));
        EXPECT_NEAR(p(0), (1 + std::cos(phi)) / 2, 1e-12) << phi;
        EXPECT_NEAR(p(0) + p(1), 1, 1e-14);
    }
    EXPECT_NEAR(run_twin_distribution(phase_rotation_program(0))(0), 1, 1e-15);
    EXPECT_NEAR(run_twin_distribution(phase_rotation_program(pi))(0), 0, 1e-15);
}

TEST(Born2, WorldMarginalIsBornOne) {
    // Refreshed marginal of the phase circuit: |cos(phi/2)| vs |sin(phi/2)| weights.
    const double phi = pi / 3;
    const Program p = phase_rotation_program(phi);
    const VectorX<double> P = run_distribution(p);
    const VectorX<double> m = world_marginal(P);
    EXPECT_NEAR(m.sum(), 1, 1e-15);
    const VectorX<double> phi_ex = extract_phi_circuit(P);
    EXPECT_LT((m - phi_ex.cwiseAbs() / phi_ex.lpNorm<1>()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Born2, ChshFirstSettingMatchesOracle) {
    const auto s = chsh_settings(-pi / 4);
    const Program p = chsh_program(s[0].first, s[0].second);
    const VectorX<double> twin = run_twin_distribution(p);
    const VectorX<double> oracle = oracle_outcomes(p);
    ASSERT_EQ(twin.size(), 4);
    EXPECT_LT((twin - oracle).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Born2, ChshExpectationCurve) {
    for (int k = 0; k <= 40; ++k) {
        const double phi = -pi + 2 * pi * k / 40;
        std::vector<double> e;
        for (const auto& [t1, t2] : chsh_settings(phi)) e.push_back(parity_expectation(run_twin_distribution(chsh_program(t1, t2))));
        EXPECT_NEAR(chsh_combination(e), 2 * (std::sin(phi) - std::cos(phi)), 1e-12) << phi;
    }
}

TEST(Born2, RandomCircuitsMatchOracle) {
    std::mt19937_64 gen(2024);
    int checked = 0;
    for (int trial = 0; trial < 60; ++trial) {
        const Program p = random_program(gen, trial % 2 == 1);
        VectorX<double> twin;
        try {
            twin = run_twin_distribution(p);
        } catch (const DegenerateState&) {
            continue;
        }
        EXPECT_LT((twin - oracle_outcomes(p)).cwiseAbs().maxCoeff(), 1e-12) << "trial " << trial;
        ++checked;
    }
    EXPECT_GE(checked, 50);
}

TEST(Twin, RequiresFinalRefresh) {
    Program p = chsh_program_unrefreshed(0.1, 0.2);
    p.gates.push_back({GateKind::Measure, {0, 2}, {}, 0});
    EXPECT_THROW(run_twin_distribution(p), InvalidProgram);
    EXPECT_THROW(run_twin_sampled(p, 10, 1), InvalidProgram);
}

TEST(Twin, CoincideCountsFullConfigurations) {
    const Ensemble a{EnsembleLayout::circuit(1), {0, 2, 2, 0}, 1, 0};
    const Ensemble b{EnsembleLayout::circuit(1), {1, 3, 0, 2}, 2, 0};
    const TwinSample s = coincide(a, b, {0});
    EXPECT_EQ(s.n_drawn, 4u);
    EXPECT_EQ(s.n_accepted, 2u);
    EXPECT_EQ(s.counts, (std::vector<std::uint64_t>{1, 1}));
    EXPECT_DOUBLE_EQ(s.acceptance_rate(), 0.5);
    const Ensemble c{EnsembleLayout::circuit(1), {2, 0, 0, 2}, 3, 0};
    EXPECT_THROW(coincide(a, c, {0}), DegenerateState);
}

TEST(Sampled, PhaseZeroIsCertain) {
    const TwinSample s = run_twin_sampled(phase_rotation_program(0), 100000, 5);
    EXPECT_EQ(s.frequencies()(0), 1.0);
    EXPECT_GT(s.acceptance_rate(), 0);
}

TEST(Sampled, PhaseThirdWithinBinomialBand) {
    for (auto model : {WorldModel::Exact, WorldModel::Ensemble}) {
        const TwinSample s = run_twin_sampled(phase_rotation_program(pi / 3), 100000, 6, model);
        const double p = 0.75;
        const double sd = std::sqrt(p * (1 - p) / static_cast<double>(s.n_accepted));
        EXPECT_NEAR(s.frequencies()(0), p, 3 * sd);
    }
}

TEST(Sampled, ChshLeftEdge) {
    std::vector<double> e;
    std::uint64_t seed = 10;
    for (const auto& [t1, t2] : chsh_settings(-pi / 4))
        e.push_back(parity_expectation(run_twin_sampled(chsh_program(t1, t2), 10000, seed++).frequencies()));
    EXPECT_NEAR(chsh_combination(e), -2 * std::sqrt(2.0), 0.15);
}

TEST(Sampled, Deterministic) {
    const Program p = chsh_program(0.3, 1.1);
    for (auto model : {WorldModel::Exact, WorldModel::Ensemble}) {
        const TwinSample a = run_twin_sampled(p, 5000, 99, model);
        const TwinSample b = run_twin_sampled(p, 5000, 99, model);
        EXPECT_EQ(a.counts, b.counts);
        EXPECT_EQ(a.n_accepted, b.n_accepted);
    }
}

TEST(Sampled, SeedExchangeInvariance) {
    const Program p = chsh_program(0.3, 1.1);
    const auto [a, b] = world_seeds(123);
    for (auto model : {WorldModel::Exact, WorldModel::Ensemble}) {
        const TwinSample ab = run_twin_sampled(p, 20000, a, b, model);
        const TwinSample ba = run_twin_sampled(p, 20000, b, a, model);
        EXPECT_GT(permutation_p_value(ab.counts, ba.counts, 500, 7), 0.01);
    }
    // Independent seed pairs agree in distribution as well.
    const TwinSample x = run_twin_sampled(p, 20000, 1);
    const TwinSample y = run_twin_sampled(p, 20000, 2);
    EXPECT_GT(permutation_p_value(x.counts, y.counts, 500, 8), 0.01);
}

TEST(Sampled, ErrorShrinksWithSamples) {
    const Program p = phase_rotation_program(pi / 3);
    auto mean_error = [&](std::size_t n) {
        double acc = 0;
        for (std::uint64_t s = 0; s < 40; ++s) acc += std::abs(run_twin_sampled(p, n, 1000 + s).frequencies()(0) - 0.75);
        return acc / 40;
    };
    const double ratio = mean_error(1000) / mean_error(100000);
    // Expected sqrt(100) = 10.
    EXPECT_GT(ratio, 6);
    EXPECT_LT(ratio, 16);
}

TEST(Parity, Expectation) {
    EXPECT_DOUBLE_EQ(parity_expectation(vec({0.25, 0.25, 0.25, 0.25})), 0);
    EXPECT_DOUBLE_EQ(parity_expectation(vec({0.5, 0, 0, 0.5})), 1);
    EXPECT_DOUBLE_EQ(parity_expectation(vec({0, 0.5, 0.5, 0})), -1);
}
