#include "twinworld/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include "twinworld/dynamics.hpp"
#include "twinworld/locality.hpp"
#include "twinworld/oracle.hpp"
#include "twinworld/program.hpp"

#ifndef TWINWORLD_VERSION
#define TWINWORLD_VERSION "unknown"
#endif

namespace twinworld {

std::string version_string() { return TWINWORLD_VERSION; }

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// Configuration

ExperimentConfig default_config(const std::string& experiment) {
    ExperimentConfig c;
    c.experiment = experiment;
    if (experiment == "phase_rotation") {
        c.n_samples = 100000;
    } else if (experiment == "chsh") {
        c.n_samples = 10000;
    } else if (experiment == "free_particle") {
        c.N = 5;
        c.x0 = 2;
        c.k = 0;
        c.sigma_x = 0;
        c.N_t = {501};
        c.t_max = 1;
        c.barrier_lo = 0;
        c.barrier_hi = 0;
        c.barrier_height = 0;
    } else if (experiment == "tunneling") {
        c.N_t = {4001, 8001, 16001};
    } else if (experiment == "locality") {
        c.n_samples = 0;
    } else {
        throw ConfigError("experiment", "unknown experiment '" + experiment + "'");
    }
    return c;
}

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

template <typename T>
T parse_integer(const std::string& key, const std::string& v) {
    T out{};
    const auto* end = v.data() + v.size();
    auto [p, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || p != end) throw ConfigError(key, "expected an integer, got '" + v + "'");
    return out;
}

double parse_real(const std::string& key, const std::string& v) {
    if (v == "pi") return std::numbers::pi;
    if (v == "-pi") return -std::numbers::pi;
    std::size_t used = 0;
    double out = 0;
    try {
        out = std::stod(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != v.size() || !std::isfinite(out)) throw ConfigError(key, "expected a number, got '" + v + "'");
    return out;
}

}  // namespace

void apply_setting(ExperimentConfig& c, const std::string& key_in, const std::string& value_in) {
    const std::string key = trim(key_in);
    const std::string v = trim(value_in);
    if (key == "experiment") c.experiment = v;
    else if (key == "mode") c.mode = v;
    else if (key == "world_model") c.world_model = v;
    else if (key == "n_samples") c.n_samples = parse_integer<std::size_t>(key, v);
    else if (key == "seed") c.seed = parse_integer<std::uint64_t>(key, v);
    else if (key == "N") c.N = parse_integer<Index>(key, v);
    else if (key == "D") c.D = parse_integer<int>(key, v);
    else if (key == "M") c.M = parse_integer<int>(key, v);
    else if (key == "N_t") {
        c.N_t.clear();
        std::stringstream ss(v);
        std::string item;
        while (std::getline(ss, item, ',')) c.N_t.push_back(parse_integer<Index>(key, trim(item)));
        if (c.N_t.empty()) throw ConfigError(key, "needs at least one value");
    } else if (key == "t_max") c.t_max = parse_real(key, v);
    else if (key == "x0") c.x0 = parse_real(key, v);
    else if (key == "k") c.k = parse_real(key, v);
    else if (key == "sigma_x") c.sigma_x = parse_real(key, v);
    else if (key == "barrier_lo") c.barrier_lo = parse_integer<Index>(key, v);
    else if (key == "barrier_hi") c.barrier_hi = parse_integer<Index>(key, v);
    else if (key == "barrier_height") c.barrier_height = parse_real(key, v);
    else if (key == "phi_min") c.phi_min = parse_real(key, v);
    else if (key == "phi_max") c.phi_max = parse_real(key, v);
    else if (key == "phi_points") c.phi_points = parse_integer<int>(key, v);
    else if (key == "out_dir") c.out_dir = v;
    else throw ConfigError(key, "unknown configuration key");
}

ExperimentConfig parse_config(std::istream& in) {
    std::vector<std::pair<std::string, std::string>> entries;
    std::string line;
    int lineno = 0;
    std::string experiment;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno), "expected key=value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "experiment") experiment = value;
        else entries.emplace_back(key, value);
    }
    if (experiment.empty()) throw ConfigError("experiment", "missing");
    ExperimentConfig c = default_config(experiment);
    for (const auto& [k, v] : entries) apply_setting(c, k, v);
    return c;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot open '" + path + "'");
    return parse_config(in);
}

void validate(const ExperimentConfig& c) {
    const std::vector<std::string> experiments{"phase_rotation", "chsh", "free_particle", "tunneling", "locality"};
    if (std::find(experiments.begin(), experiments.end(), c.experiment) == experiments.end())
        throw ConfigError("experiment", "unknown experiment '" + c.experiment + "'");
    if (c.mode != "distribution" && c.mode != "ensemble") throw ConfigError("mode", "must be distribution or ensemble");
    if (c.world_model != "exact" && c.world_model != "ensemble")
        throw ConfigError("world_model", "must be exact or ensemble");
    if (c.out_dir.empty()) throw ConfigError("out_dir", "must not be empty");
    if (c.experiment == "phase_rotation" || c.experiment == "chsh") {
        if (c.phi_points < 1) throw ConfigError("phi_points", "must be at least 1");
        if (!(c.phi_min <= c.phi_max)) throw ConfigError("phi_min", "must not exceed phi_max");
        if (c.mode == "ensemble" && c.n_samples < 1) throw ConfigError("n_samples", "must be at least 1");
        if (c.n_samples > (std::size_t{1} << 31)) throw ConfigError("n_samples", "too large");
    }
    if (c.experiment == "free_particle" || c.experiment == "tunneling") {
        if (c.D != 1 || c.M != 1) throw ConfigError("D", "wave-packet experiments run on one particle in one dimension");
        LatticeSpec{c.N, c.D, c.M}.validate();
        if (!(c.t_max > 0)) throw ConfigError("t_max", "must be positive");
        for (Index n : c.N_t)
            if (n < 2) throw ConfigError("N_t", "needs at least two time points");
        if (c.x0 < 0 || c.x0 > static_cast<double>(c.N - 1)) throw ConfigError("x0", "packet centre outside the lattice");
        if (c.sigma_x < 0) throw ConfigError("sigma_x", "must be non-negative");
        if (c.barrier_height != 0 && (c.barrier_lo < 0 || c.barrier_hi >= c.N || c.barrier_lo > c.barrier_hi))
            throw ConfigError("barrier_lo", "barrier must satisfy 0 <= barrier_lo <= barrier_hi < N");
        const double W0 = std::abs(c.barrier_height);
        for (Index n : c.N_t) {
            const double dt = c.t_max / static_cast<double>(n - 1);
            const double limit = 1.0 / (4.0 + W0);
            if (dt > limit)
                throw ConfigError("N_t", "time step " + format_double(dt) + " exceeds admissible maximum " +
                                             format_double(limit));
        }
        if (c.mode == "ensemble" && c.n_samples < 1) throw ConfigError("n_samples", "must be at least 1");
    }
}

std::vector<double> phi_grid(const ExperimentConfig& c) {
    std::vector<double> g(static_cast<std::size_t>(c.phi_points));
    for (int i = 0; i < c.phi_points; ++i)
        g[i] = c.phi_points == 1 ? c.phi_min : c.phi_min + (c.phi_max - c.phi_min) * i / (c.phi_points - 1);
    return g;
}

WorldModel world_model_of(const ExperimentConfig& c) {
    return c.world_model == "ensemble" ? WorldModel::Ensemble : WorldModel::Exact;
}

// ---------------------------------------------------------------------------
// Experiments

namespace {

std::uint64_t point_seed(std::uint64_t seed, std::uint64_t point) { return mix64(seed) ^ mix64(point + 1); }

}  // namespace

std::vector<PhaseRotationRow> phase_rotation_rows(const ExperimentConfig& c) {
    std::vector<PhaseRotationRow> rows;
    const auto grid = phi_grid(c);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Program p = phase_rotation_program(grid[i]);
        PhaseRotationRow r{grid[i], 0, oracle_outcomes(p)(0), 0, 0};
        if (c.mode == "ensemble") {
            const TwinSample s = run_twin_sampled(p, c.n_samples, point_seed(c.seed, i), world_model_of(c));
            r.p0_emulated = s.frequencies()(0);
            r.n_accepted = s.n_accepted;
            r.n_drawn = s.n_drawn;
        } else {
            r.p0_emulated = run_twin_distribution(p)(0);
        }
        rows.push_back(r);
    }
    return rows;
}

std::vector<ChshRow> chsh_rows(const ExperimentConfig& c) {
    std::vector<ChshRow> rows;
    const auto grid = phi_grid(c);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        ChshRow r{grid[i], 0, chsh_expectation(grid[i]), {}, {}};
        std::vector<double> e;
        const auto settings = chsh_settings(grid[i]);
        for (std::size_t s = 0; s < settings.size(); ++s) {
            const Program p = chsh_program(settings[s].first, settings[s].second);
            if (c.mode == "ensemble") {
                const TwinSample t =
                    run_twin_sampled(p, c.n_samples, point_seed(c.seed, 4 * i + s), world_model_of(c));
                e.push_back(parity_expectation(t.frequencies()));
                r.n_accepted.push_back(t.n_accepted);
                r.n_drawn.push_back(t.n_drawn);
            } else {
                e.push_back(parity_expectation(run_twin_distribution(p)));
                r.n_accepted.push_back(0);
                r.n_drawn.push_back(0);
            }
        }
        r.E_emulated = chsh_combination(e);
        rows.push_back(r);
    }
    return rows;
}

DynamicsRun run_dynamics(const ExperimentConfig& c, Index N_t, Index error_stride,
                         const std::vector<double>& snapshot_times) {
    const LatticeSpec spec{c.N, 1, 1};
    const VectorX<double> W = c.barrier_height != 0 ? barrier_potential(c.N, c.barrier_lo, c.barrier_hi, c.barrier_height)
                                                    : VectorX<double>::Zero(c.N);
    const VectorX<Complex> psi0 = gaussian_packet(c.N, c.x0, c.k, c.sigma_x);
    const VectorX<double> P0 = embed_state(psi0);
    const Index n_steps = N_t - 1;
    const double dt = c.t_max / static_cast<double>(n_steps);
    if (error_stride < 1) error_stride = 1;

    std::vector<Index> steps;
    for (Index s = 0; s <= n_steps; s += error_stride) steps.push_back(s);
    if (steps.back() != n_steps) steps.push_back(n_steps);
    std::vector<Index> snap_steps;
    for (double t : snapshot_times) {
        const Index s = std::clamp<Index>(static_cast<Index>(std::llround(t / dt)), 0, n_steps);
        snap_steps.push_back(s);
        steps.push_back(s);
    }
    std::sort(steps.begin(), steps.end());
    steps.erase(std::unique(steps.begin(), steps.end()), steps.end());

    std::vector<VectorX<double>> phis;
    if (c.mode == "ensemble") {
        // Experimental: a finite ensemble refreshed from its histogram.
        const Ensemble e0 = sample_ensemble(EnsembleLayout::ppv(c.N), P0, c.n_samples, c.seed, 0);
        const auto ens = propagate_ensemble(e0, build_step_sparse(spec, W, dt), n_steps, 1);
        for (Index s : steps) phis.push_back(estimate_phi(ens[static_cast<std::size_t>(s)]));
    } else {
        const Trajectory tr = propagate(P0, build_step(spec, W, dt), spec.sites(), dt, steps);
        for (const auto& P : tr.states) phis.push_back(extract_phi_ppv(P, spec.sites()));
    }

    const LatticeOracle oracle(spec, W);
    DynamicsRun run{N_t, dt, {}, {}};
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const double t = static_cast<double>(steps[i]) * dt;
        const VectorX<double> Phi = oracle.realified(psi0, t);
        const GaugeAlignment al = align_gauge(Phi, normalize(phis[i], Norm::Two));
        const bool on_grid = steps[i] % error_stride == 0 || steps[i] == n_steps;
        if (on_grid)
            run.points.push_back({t, compare(Phi, al.phi, Metric::TwoNormDiff), position_variance(Phi),
                                  position_variance(al.phi), al.angle});
        if (std::find(snap_steps.begin(), snap_steps.end(), steps[i]) != snap_steps.end())
            run.snapshots.push_back({t, density(Phi), density(al.phi), Phi, al.phi});
    }
    return run;
}

LocalityStudy locality_study(const ExperimentConfig& c, int restarts) {
    LocalityStudy study;
    MinimizeOptions opt;
    opt.restarts = restarts;
    opt.seed = c.seed;

    const double h = std::numbers::pi / 2;
    const VectorX<double> P1 = run_distribution(chsh_program_unrefreshed(h, h / 2));
    const FactorizationProblem chsh = reduce_problem(P1, refresh_circuit(P1), 16, 16);
    const LocalMaps mc = minimize_Q(chsh, opt);
    study.rows.push_back({"chsh_first_setting", chsh.free_variables(), mc.Q, mc.restarts});

    const SwapLemmaReport swap = verify_swap_lemma(0.5, opt);
    study.rows.push_back({"swap_p0.5_map", map_problem(swap_map(0.5), 2, 2).free_variables(), swap.Q_min, swap.restarts});
    study.swap_certificate = swap.steps;
    study.swap_contradiction = swap.contradiction;

    const VectorX<double> u = (VectorX<double>(2) << 0.3, 0.7).finished();
    const VectorX<double> v = (VectorX<double>(2) << 0.8, 0.2).finished();
    VectorX<double> Pin(4);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) Pin(2 * i + j) = u(i) * v(j);
    const FactorizationProblem sd = reduce_problem(Pin, swap_map(0.5) * Pin, 2, 2);
    const LocalMaps ms = minimize_Q(sd, opt);
    study.rows.push_back({"swap_p0.5_product_input", sd.free_variables(), ms.Q, ms.restarts});
    return study;
}

// ---------------------------------------------------------------------------
// Runner

namespace {

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : out_(path) {
        if (!out_) throw ConfigError("out_dir", "cannot write '" + path.string() + "'");
        row(header);
    }
    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
        out_ << '\n';
    }

private:
    std::ofstream out_;
};

std::string join_counts(const std::vector<std::uint64_t>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ";" : "") + std::to_string(v[i]);
    return s;
}

std::string utc_now() {
    const std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

Index error_stride_for(Index N_t) { return std::max<Index>(1, (N_t - 1) / 100); }

}  // namespace

RunResult run_experiment(const ExperimentConfig& c, std::ostream& progress) {
    validate(c);
    const auto start = std::chrono::steady_clock::now();
    const std::filesystem::path dir(c.out_dir);
    std::filesystem::create_directories(dir);
    RunResult res;
    auto& meta = res.metadata;
    meta["version"] = version_string();
    meta["experiment"] = c.experiment;
    meta["mode"] = c.mode;
    meta["world_model"] = c.world_model;
    meta["seed"] = std::to_string(c.seed);
    meta["n_samples"] = std::to_string(c.n_samples);
    meta["started_utc"] = utc_now();
    auto add = [&](const std::string& name) { res.files.push_back((dir / name).string()); return dir / name; };

    if (c.experiment == "phase_rotation") {
        const auto rows = phase_rotation_rows(c);
        CsvWriter w(add("phase_rotation.csv"), {"phi", "p0_emulated", "p0_exact", "n_accepted"});
        double rmin = 1, rsum = 0;
        for (const auto& r : rows) {
            w.row({format_double(r.phi), format_double(r.p0_emulated), format_double(r.p0_exact),
                   std::to_string(r.n_accepted)});
            const double rate = r.n_drawn ? static_cast<double>(r.n_accepted) / static_cast<double>(r.n_drawn) : 0;
            rmin = std::min(rmin, rate);
            rsum += rate;
        }
        if (c.mode == "ensemble") {
            meta["acceptance_rate_min"] = format_double(rmin);
            meta["acceptance_rate_mean"] = format_double(rsum / static_cast<double>(rows.size()));
        }
        progress << "phase_rotation: " << rows.size() << " grid points written\n";
    } else if (c.experiment == "chsh") {
        const auto rows = chsh_rows(c);
        CsvWriter w(add("chsh.csv"), {"phi", "E_emulated", "E_exact", "n_accepted_per_setting"});
        double rmin = 1;
        for (const auto& r : rows) {
            w.row({format_double(r.phi), format_double(r.E_emulated), format_double(r.E_exact),
                   join_counts(r.n_accepted)});
            for (std::size_t s = 0; s < r.n_drawn.size(); ++s)
                if (r.n_drawn[s])
                    rmin = std::min(rmin, static_cast<double>(r.n_accepted[s]) / static_cast<double>(r.n_drawn[s]));
        }
        if (c.mode == "ensemble") meta["acceptance_rate_min"] = format_double(rmin);
        progress << "chsh: " << rows.size() << " grid points written\n";
    } else if (c.experiment == "free_particle") {
        const Index N_t = c.N_t.front();
        const DynamicsRun run = run_dynamics(c, N_t, 1, {c.t_max});
        {
            CsvWriter w(add("free_particle.csv"), {"t", "two_norm_diff", "variance_exact", "variance_emulated"});
            for (const auto& p : run.points)
                w.row({format_double(p.t), format_double(p.two_norm_diff), format_double(p.variance_exact),
                       format_double(p.variance_emulated)});
        }
        CsvWriter w(add("free_particle_state.csv"), {"x", "re_exact", "im_exact", "re_emulated", "im_emulated"});
        const auto& s = run.snapshots.back();
        for (Index x = 0; x < c.N; ++x)
            w.row({std::to_string(x), format_double(s.Phi_exact(x)), format_double(s.Phi_exact(c.N + x)),
                   format_double(s.phi_emulated(x)), format_double(s.phi_emulated(c.N + x))});
        meta["gauge_angle_final"] = format_double(run.points.back().gauge_angle);
        meta["two_norm_diff_final"] = format_double(run.points.back().two_norm_diff);
        progress << "free_particle: " << run.points.size() << " time points written\n";
    } else if (c.experiment == "tunneling") {
        CsvWriter err(add("tunneling_error.csv"), {"t", "two_norm_diff", "N_t"});
        std::vector<Index> order = c.N_t;
        const Index finest = *std::max_element(order.begin(), order.end());
        std::vector<double> snap_times;
        for (int i = 0; i <= 4; ++i) snap_times.push_back(c.t_max * i / 4);
        for (Index N_t : order) {
            const DynamicsRun run = run_dynamics(c, N_t, error_stride_for(N_t), N_t == finest ? snap_times : std::vector<double>{});
            for (const auto& p : run.points)
                err.row({format_double(p.t), format_double(p.two_norm_diff), std::to_string(N_t)});
            meta["two_norm_diff_final_N_t_" + std::to_string(N_t)] = format_double(run.points.back().two_norm_diff);
            meta["gauge_angle_final_N_t_" + std::to_string(N_t)] = format_double(run.points.back().gauge_angle);
            if (N_t == finest) {
                CsvWriter w(add("tunneling_snapshots.csv"), {"x", "p_exact", "p_emulated", "t"});
                for (const auto& s : run.snapshots)
                    for (Index x = 0; x < c.N; ++x)
                        w.row({std::to_string(x), format_double(s.p_exact(x)), format_double(s.p_emulated(x)),
                               format_double(s.t)});
            }
            progress << "tunneling: N_t=" << N_t << " done\n";
        }
    } else if (c.experiment == "locality") {
        const LocalityStudy st = locality_study(c, 100);
        CsvWriter w(add("locality.csv"), {"case", "free_variables", "Q_min", "restarts"});
        for (const auto& r : st.rows)
            w.row({r.case_name, std::to_string(r.free_variables), format_double(r.Q_min), std::to_string(r.restarts)});
        meta["swap_contradiction"] = st.swap_contradiction ? "true" : "false";
        for (std::size_t i = 0; i < st.swap_certificate.size(); ++i)
            meta["swap_certificate_" + std::to_string(i + 1)] = st.swap_certificate[i];
        progress << "locality: " << st.rows.size() << " cases written\n";
    }

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    meta["wall_time_s"] = format_double(wall);
    const auto meta_path = add(c.experiment + ".meta");
    std::ofstream m(meta_path);
    if (!m) throw ConfigError("out_dir", "cannot write '" + meta_path.string() + "'");
    for (const auto& [k, v] : meta) m << k << '=' << v << '\n';
    return res;
}

}  // namespace twinworld
