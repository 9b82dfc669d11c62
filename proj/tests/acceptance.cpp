// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "twinworld/dynamics.hpp"
#include "twinworld/experiments.hpp"
#include "twinworld/gates.hpp"
#include "twinworld/locality.hpp"
#include "twinworld/oracle.hpp"
#include "twinworld/program.hpp"
#include "twinworld/refresh.hpp"
#include "twinworld/twin.hpp"

using namespace twinworld;

namespace {

constexpr double pi = std::numbers::pi;

struct Outcome {
    bool pass = true;
    std::string detail;

    void check(bool ok, const std::string& what) {
        pass = pass && ok;
        if (!detail.empty()) detail += "; ";
        detail += what + (ok ? "" : " [x]");
    }
};

std::string fmt(double v, int digits = 4) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

int failures = 0;

void criterion(int id, const std::string& name, double limit_s, const std::function<void(Outcome&)>& body) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        body(o);
    } catch (const std::exception& e) {
        o.check(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.check(secs < limit_s, "runtime " + fmt(secs, 3) + " s < " + fmt(limit_s, 3) + " s");
    if (!o.pass) ++failures;
    std::printf("[%s] C%d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str());
    std::fflush(stdout);
}

void info(const std::string& line) {
    std::printf("       info: %s\n", line.c_str());
    std::fflush(stdout);
}

MatrixX<double> random_stochastic(std::mt19937_64& gen, Index d) {
    std::exponential_distribution<double> e(1.0);
    MatrixX<double> S(d, d);
    for (Index i = 0; i < S.size(); ++i) S(i) = e(gen);
    for (Index c = 0; c < d; ++c) S.col(c) /= S.col(c).sum();
    return S;
}

MatrixX<double> kron(const MatrixX<double>& A, const MatrixX<double>& B) {
    MatrixX<double> K(A.rows() * B.rows(), A.cols() * B.cols());
    for (Index i = 0; i < A.rows(); ++i)
        for (Index j = 0; j < A.cols(); ++j) K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
    return K;
}

double r_squared(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double icpt = (sy - slope * sx) / n;
    double ss_res = 0, ss_tot = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        ss_res += std::pow(y[i] - slope * x[i] - icpt, 2);
        ss_tot += std::pow(y[i] - sy / n, 2);
    }
    return 1 - ss_res / ss_tot;
}

double permutation_p_value(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b, int rounds) {
    std::vector<int> labels, group;
    std::size_t n_a = 0;
    for (std::size_t o = 0; o < a.size(); ++o) {
        labels.insert(labels.end(), a[o] + b[o], static_cast<int>(o));
        group.insert(group.end(), a[o], 0);
        group.insert(group.end(), b[o], 1);
        n_a += a[o];
    }
    const double n_b = static_cast<double>(labels.size() - n_a);
    auto stat = [&](const std::vector<int>& g) {
        std::vector<double> ha(a.size(), 0), hb(a.size(), 0);
        for (std::size_t k = 0; k < labels.size(); ++k) (g[k] ? hb : ha)[static_cast<std::size_t>(labels[k])] += 1;
        double tv = 0;
        for (std::size_t o = 0; o < a.size(); ++o) tv += std::abs(ha[o] / static_cast<double>(n_a) - hb[o] / n_b);
        return tv;
    };
    const double observed = stat(group);
    std::mt19937_64 gen(12345);
    int extreme = 0;
    for (int r = 0; r < rounds; ++r) {
        std::shuffle(group.begin(), group.end(), gen);
        extreme += stat(group) >= observed;
    }
    return (extreme + 1.0) / (rounds + 1.0);
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void c1(Outcome& o) {
    Program p;
    p.n_grabits = 1;
    p.gates = {{GateKind::H, {0}, {}, 0}, {GateKind::H, {0}, {}, 0}};
    const auto t0 = std::chrono::steady_clock::now();
    const VectorX<double> P = run_distribution(p);
    const VectorX<double> phi = extract_phi_circuit(P);
    const double us = std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - t0).count();
    const VectorX<double> expected = (VectorX<double>(4) << 2, 0, 1, 1).finished() / 4.0;
    o.check(P == expected, "P = (" + fmt(P(0)) + "," + fmt(P(1)) + "," + fmt(P(2)) + "," + fmt(P(3)) + ") bit-exact");
    o.check(phi == (VectorX<double>(2) << 0.5, 0).finished(), "phi = (" + fmt(phi(0)) + "," + fmt(phi(1)) + ")");
    o.check(us < 1000, "emulation " + fmt(us, 3) + " us < 1 ms");
}

void c2(Outcome& o) {
    ExperimentConfig c = default_config("phase_rotation");
    double worst = 0;
    for (double phi : phi_grid(c)) {
        const Program p = phase_rotation_program(phi);
        worst = std::max(worst, (run_twin_distribution(p) - oracle_outcomes(p)).cwiseAbs().maxCoeff());
    }
    o.check(worst <= 1e-12, "max |Born-2 - oracle| = " + fmt(worst) + " <= 1e-12 over 41 points");
}

int phase_band_hits(const std::vector<PhaseRotationRow>& rows) {
    int hits = 0;
    for (const auto& r : rows) {
        const double p = r.p0_exact;
        const double sd = std::sqrt(p * (1 - p) / static_cast<double>(r.n_accepted));
        hits += std::abs(r.p0_emulated - p) <= 3 * sd;
    }
    return hits;
}

void c3(Outcome& o) {
    ExperimentConfig c = default_config("phase_rotation");
    c.mode = "ensemble";
    c.n_samples = 100000;
    const auto rows = phase_rotation_rows(c);
    const int hits = phase_band_hits(rows);
    double rate = 1;
    for (const auto& r : rows) rate = std::min(rate, static_cast<double>(r.n_accepted) / static_cast<double>(r.n_drawn));
    o.check(hits >= 39, std::to_string(hits) + "/41 points within 3 sigma (need >= 39)");
    o.detail += "; min acceptance rate " + fmt(rate, 3);
}

void c4(Outcome& o) {
    ExperimentConfig c = default_config("chsh");
    c.mode = "ensemble";
    c.n_samples = 10000;
    const auto rows = chsh_rows(c);
    double e_left = 0, max_abs = 0;
    for (const auto& r : rows) {
        if (std::abs(r.phi + pi / 4) < 1e-12) e_left = r.E_emulated;
        max_abs = std::max(max_abs, std::abs(r.E_emulated));
    }
    o.check(std::abs(e_left) > 2, "|E(-pi/4)| = " + fmt(std::abs(e_left)) + " > 2");
    o.check(std::abs(max_abs - 2 * std::sqrt(2.0)) <= 0.15, "max |E| = " + fmt(max_abs) + " within 0.15 of 2.828");
    c.mode = "distribution";
    double worst = 0;
    for (const auto& r : chsh_rows(c)) worst = std::max(worst, std::abs(r.E_emulated - 2 * (std::sin(r.phi) - std::cos(r.phi))));
    o.check(worst <= 1e-12, "exact mode max |E - 2(sin - cos)| = " + fmt(worst) + " <= 1e-12");
}

void c5(Outcome& o) {
    const ExperimentConfig c = default_config("free_particle");
    const DynamicsRun run = run_dynamics(c, c.N_t.front(), 1, {c.t_max});
    const double err = run.points.back().two_norm_diff;
    double var_gap = 0;
    for (const auto& p : run.points) var_gap = std::max(var_gap, std::abs(p.variance_exact - p.variance_emulated));
    o.check(err < 1e-2, "||Phi - phi/||phi||_2||_2 at t=1 = " + fmt(err) + " < 1e-2");
    o.check(var_gap <= 1e-2, "max variance gap = " + fmt(var_gap) + " <= 1e-2");
}

void c6(Outcome& o) {
    const ExperimentConfig c = default_config("tunneling");
    const DynamicsRun coarse = run_dynamics(c, 8001, 80, {});
    const DynamicsRun fine = run_dynamics(c, 16001, 160, {10.0});
    const double ratio = fine.points.back().two_norm_diff / coarse.points.back().two_norm_diff;
    o.check(std::abs(ratio - 0.5) <= 0.1, "err(16001)/err(8001) at t=40 = " + fmt(ratio) + " (0.5 +- 0.1)");
    std::vector<double> t, e;
    for (const auto& p : fine.points)
        if (p.t >= 5 - 1e-9 && p.t <= 40 + 1e-9) {
            t.push_back(p.t);
            e.push_back(p.two_norm_diff);
        }
    const double r2 = r_squared(t, e);
    o.check(r2 >= 0.99, "linear fit R^2 = " + fmt(r2, 6) + " >= 0.99");
    const DensitySnapshot& s = fine.snapshots.front();
    double gap = 0;
    for (Index x = 0; x < s.p_exact.size(); ++x)
        if (s.p_exact(x) > 1e-20) gap = std::max(gap, std::abs(std::log10(s.p_exact(x)) - std::log10(s.p_emulated(x))));
    o.check(gap < 0.5, "max |log10 p gap| at t=10 = " + fmt(gap) + " < 0.5");
}

void c7(Outcome& o) {
    const LatticeSpec spec{3, 1, 2};
    const VectorX<double> W = contact_potential(spec, 0.7);
    const Index n = spec.sites();
    const MatrixX<double> G = build_GT(spec) + build_GV(spec, W);
    o.check(G.colwise().sum().cwiseAbs().maxCoeff() < 1e-14, "column sums 0");
    static const char pattern[4][5] = {"ABDC", "BACD", "CDAB", "DCBA"};
    bool blocks = true;
    for (int r = 0; r < 4; ++r)
        for (int cc = 0; cc < 4; ++cc)
            for (int r2 = 0; r2 < 4; ++r2)
                for (int c2 = 0; c2 < 4; ++c2)
                    if (pattern[r][cc] == pattern[r2][c2])
                        blocks = blocks && ppv_block(G, n, r, cc) == ppv_block(G, n, r2, c2);
    o.check(blocks, "block structure");
    const LatticeOracle oracle(spec, W);
    auto defect = [&](double dt) {
        const MatrixX<double> S = build_step(spec, W, dt);
        const double scale = 1 - dt * (4.0 * spec.D * spec.M + W.cwiseAbs().maxCoeff());
        double worst = 0;
        for (Index I = 0; I < 4 * n; ++I) {
            const Ppv p = unpack_ppv(I, n);
            VectorX<Complex> psi = VectorX<Complex>::Zero(n);
            psi(p.x) = (p.rho ? Complex(0, 1) : Complex(1, 0)) * (p.sigma ? -1.0 : 1.0);
            const VectorX<double> lhs = extract_phi_ppv(VectorX<double>(S.col(I)), n);
            worst = std::max(worst, (lhs - scale * oracle.realified(psi, dt)).cwiseAbs().maxCoeff());
        }
        return worst;
    };
    const double d1 = defect(0.01), d2 = defect(0.005);
    o.check(std::abs(d1 / d2 - 4) < 0.4, "commutation defect " + fmt(d1) + " -> " + fmt(d2) + " on halving dt (ratio " +
                                              fmt(d1 / d2) + ", O(dt^2) gives 4)");
}

void c8(Outcome& o) {
    std::mt19937_64 gen(8);
    const MatrixX<double> A = random_stochastic(gen, 16), B = random_stochastic(gen, 16);
    VectorX<double> in(256);
    std::exponential_distribution<double> e(1.0);
    for (Index i = 0; i < 256; ++i) in(i) = e(gen);
    in /= in.sum();
    const LocalMaps planted = minimize_Q(reduce_problem(in, kron(A, B) * in, 16, 16), {8, 4000, 3, 1e-16});
    o.check(planted.Q < 1e-10, "planted Q_min = " + fmt(planted.Q) + " < 1e-10");

    MinimizeOptions opt;
    opt.restarts = 100;
    const SwapLemmaReport swap = verify_swap_lemma(0.5, opt);
    o.check(swap.contradiction && swap.restarts >= 100 && swap.Q_min > 1e-4,
            "swap p=0.5 certificate " + std::string(swap.contradiction ? "found" : "missing") + ", Q_min = " +
                fmt(swap.Q_min) + " > 1e-4 over " + std::to_string(swap.restarts) + " restarts");

    ExperimentConfig c = default_config("locality");
    const LocalityStudy st = locality_study(c, 100);
    const LocalityRow& chsh = st.rows.front();
    o.check(chsh.free_variables == 96, "CHSH free variables = " + std::to_string(chsh.free_variables));
    o.check(chsh.Q_min >= 1e-3 && chsh.Q_min <= 0.022, "CHSH Q_min = " + fmt(chsh.Q_min) + " in [1e-3, 0.022]");
}

void c9(Outcome& o) {
    bool stochastic = true;
    for (int k = -40; k <= 40; ++k) {
        const double a = k * pi / 40;
        stochastic = stochastic && is_column_stochastic(s_q_theta(a)) && is_column_stochastic(s_r_phi(a)) &&
                     is_column_stochastic(lift_controlled(s_q_theta(a))) &&
                     is_column_stochastic(lift_sigma(r2_amplitude_reduction(a)));
    }
    stochastic = stochastic && is_column_stochastic(s_x()) && is_column_stochastic(s_cnot());
    const LatticeSpec spec{6, 1, 1};
    const VectorX<double> W = barrier_potential(6, 2, 3, 0.8);
    stochastic = stochastic && is_column_stochastic(build_step(spec, W, max_step(spec, W)));
    const LatticeSpec spec2{3, 1, 2};
    stochastic = stochastic && is_column_stochastic(build_step(spec2, contact_potential(spec2, 1.0), 0.1));
    o.check(stochastic, "constructed matrices column-stochastic");

    std::mt19937_64 gen(9);
    std::exponential_distribution<double> e(1.0);
    bool idem = true, sign = true;
    for (int t = 0; t < 200; ++t) {
        VectorX<double> P(64);
        for (Index i = 0; i < 64; ++i) P(i) = e(gen);
        P /= P.sum();
        const VectorX<double> R = refresh_circuit(P);
        idem = idem && refresh_circuit(R) == R && refresh_ppv(refresh_ppv(P, 16), 16) == refresh_ppv(P, 16);
        const VectorX<double> a = extract_phi_circuit(P), b = extract_phi_circuit(R);
        for (Index i = 0; i < a.size(); ++i)
            if (std::abs(a(i)) >= kZeroTol) sign = sign && std::signbit(a(i)) == std::signbit(b(i));
    }
    o.check(idem, "refresh idempotent");
    o.check(sign, "refresh sign-preserving");

    const Program p = chsh_program(0.3, 1.1);
    const auto [sa, sb] = world_seeds(77);
    const TwinSample ab = run_twin_sampled(p, 20000, sa, sb, WorldModel::Exact);
    const TwinSample ba = run_twin_sampled(p, 20000, sb, sa, WorldModel::Exact);
    const double pv = permutation_p_value(ab.counts, ba.counts, 200);
    o.check(pv > 0.01, "seed exchange permutation p = " + fmt(pv, 3) + " > 0.01");

    const char* cli = std::getenv("TWINWORLD_CLI");
    if (!cli) {
        o.check(false, "TWINWORLD_CLI not set");
        return;
    }
    const auto dir = std::filesystem::temp_directory_path() / ("twinworld_acceptance_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "run.cfg") << "experiment = chsh\nmode = ensemble\nn_samples = 5000\nseed = 4\n";
    bool same = true;
    for (const char* sub : {"a", "b"}) {
        const std::string cmd = std::string(cli) + " -q " + (dir / "run.cfg").string() + " --out " + (dir / sub).string() + " >/dev/null";
        const int status = std::system(cmd.c_str());
        same = same && WIFEXITED(status) && WEXITSTATUS(status) == 0;
    }
    const std::string a = slurp(dir / "a" / "chsh.csv");
    same = same && !a.empty() && a == slurp(dir / "b" / "chsh.csv");
    std::filesystem::remove_all(dir);
    o.check(same, "CSV reruns byte-identical");
}

}  // namespace

int main() {
    std::printf("twinworld acceptance, version %s\n", version_string().c_str());
    criterion(1, "H^2 worked example", 1.0, c1);
    criterion(2, "Born-2 chain, exact mode", 1.0, c2);
    criterion(3, "phase-rotation sampling", 30.0, c3);
    {
        ExperimentConfig c = default_config("phase_rotation");
        c.mode = "ensemble";
        c.world_model = "ensemble";
        info("finite-ensemble worlds: " + std::to_string(phase_band_hits(phase_rotation_rows(c))) +
             "/41 points within 3 sigma");
    }
    criterion(4, "CHSH violation", 60.0, c4);
    criterion(5, "free particle", 1.0, c5);
    criterion(6, "tunneling", 600.0, c6);
    criterion(7, "multiparticle generator", 1.0, c7);
    criterion(8, "locality checker", 300.0, c8);
    criterion(9, "invariant suite", 60.0, c9);
    std::printf("%d of 9 criteria failed\n", failures);
    return failures ? 1 : 0;
}
