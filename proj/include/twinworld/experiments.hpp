#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "twinworld/core_state.hpp"
#include "twinworld/twin.hpp"

namespace twinworld {

struct ExperimentConfig {
    std::string experiment = "phase_rotation";
    /// distribution: exact Born-2 statistics. ensemble: sampled coincidences.
    std::string mode = "distribution";
    /// exact | ensemble, how each world is held in ensemble mode.
    std::string world_model = "exact";
    std::size_t n_samples = 100000;
    std::uint64_t seed = 1;
    Index N = 120;
    int D = 1;
    int M = 1;
    /// Time points including t = 0; several values run several resolutions.
    std::vector<Index> N_t{8001};
    double t_max = 40;
    double x0 = 40;
    double k = 10;
    double sigma_x = 4;
    Index barrier_lo = 59;
    Index barrier_hi = 61;
    double barrier_height = 1;
    double phi_min = -3.141592653589793;
    double phi_max = 3.141592653589793;
    int phi_points = 41;
    std::string out_dir = "out";
};

/// Defaults for one experiment: phase_rotation, chsh, free_particle,
/// tunneling or locality.
ExperimentConfig default_config(const std::string& experiment);

/// Sets one key from its text value. Throws ConfigError naming the field.
void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value);

/// Reads key=value lines ('#' starts a comment). The experiment key selects
/// the defaults; the remaining keys are applied on top in file order.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig parse_config_file(const std::string& path);

/// Throws ConfigError on the first field violating a precondition.
void validate(const ExperimentConfig& config);

std::vector<double> phi_grid(const ExperimentConfig& config);
WorldModel world_model_of(const ExperimentConfig& config);

// Data behind each experiment

struct PhaseRotationRow {
    double phi;
    double p0_emulated;
    double p0_exact;
    std::uint64_t n_accepted;
    std::uint64_t n_drawn;
};
std::vector<PhaseRotationRow> phase_rotation_rows(const ExperimentConfig& config);

struct ChshRow {
    double phi;
    double E_emulated;
    double E_exact;
    std::vector<std::uint64_t> n_accepted;
    std::vector<std::uint64_t> n_drawn;
};
std::vector<ChshRow> chsh_rows(const ExperimentConfig& config);

struct DynamicsPoint {
    double t;
    double two_norm_diff;
    double variance_exact;
    double variance_emulated;
    double gauge_angle;
};

struct DensitySnapshot {
    double t;
    VectorX<double> p_exact;
    VectorX<double> p_emulated;
    /// Realified states after 2-normalization and gauge alignment.
    VectorX<double> Phi_exact;
    VectorX<double> phi_emulated;
};

struct DynamicsRun {
    Index N_t;
    double dt;
    std::vector<DynamicsPoint> points;
    std::vector<DensitySnapshot> snapshots;
};

/// One propagation with N_t time points; error points every error_stride
/// steps, density snapshots at the listed times.
DynamicsRun run_dynamics(const ExperimentConfig& config, Index N_t, Index error_stride,
                         const std::vector<double>& snapshot_times);

struct LocalityRow {
    std::string case_name;
    Index free_variables;
    double Q_min;
    int restarts;
};
struct LocalityStudy {
    std::vector<LocalityRow> rows;
    std::vector<std::string> swap_certificate;
    bool swap_contradiction;
};
LocalityStudy locality_study(const ExperimentConfig& config, int restarts);

// Runner

/// Fixed 17 significant digits, enough to round-trip any double.
std::string format_double(double v);

struct RunResult {
    std::vector<std::string> files;
    std::map<std::string, std::string> metadata;
};

/// Writes the CSV files and <out_dir>/<experiment>.meta, one progress line
/// per stage to progress.
RunResult run_experiment(const ExperimentConfig& config, std::ostream& progress);

std::string version_string();

}  // namespace twinworld
