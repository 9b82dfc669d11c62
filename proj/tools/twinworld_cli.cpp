// Runs one experiment from a key=value config file and writes CSV output.
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "twinworld/errors.hpp"
#include "twinworld/experiments.hpp"

namespace {

constexpr int kExitInvalid = 2;
constexpr int kExitDegenerate = 3;

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Twin-world emulation experiments"};
    app.set_version_flag("--version", twinworld::version_string());

    std::string config_path;
    std::string experiment, mode, out_dir;
    std::uint64_t seed = 0;
    std::size_t samples = 0;
    std::vector<std::string> settings;
    bool quiet = false;

    app.add_option("config", config_path, "key=value configuration file")->required();
    auto* seed_opt = app.add_option("--seed", seed, "Override the run seed");
    auto* samples_opt = app.add_option("--samples", samples, "Override n_samples");
    app.add_option("--mode", mode, "distribution or ensemble");
    app.add_option("--out", out_dir, "Output directory");
    app.add_option("--experiment", experiment, "Override the experiment named in the file");
    app.add_option("--set", settings, "Extra key=value settings, applied last");
    app.add_flag("-q,--quiet", quiet, "Suppress progress lines");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitInvalid;
    }

    try {
        twinworld::ExperimentConfig c = twinworld::parse_config_file(config_path);
        if (!experiment.empty() && experiment != c.experiment) {
            // A different experiment starts from its own defaults.
            const twinworld::ExperimentConfig from_file = c;
            c = twinworld::default_config(experiment);
            c.mode = from_file.mode;
            c.seed = from_file.seed;
            c.out_dir = from_file.out_dir;
        }
        if (*seed_opt) c.seed = seed;
        if (*samples_opt) c.n_samples = samples;
        if (!mode.empty()) c.mode = mode;
        if (!out_dir.empty()) c.out_dir = out_dir;
        for (const auto& s : settings) {
            const auto eq = s.find('=');
            if (eq == std::string::npos) throw twinworld::ConfigError(s, "--set expects key=value");
            twinworld::apply_setting(c, s.substr(0, eq), s.substr(eq + 1));
        }
        std::ostream null_stream(nullptr);
        const auto res = twinworld::run_experiment(c, quiet ? null_stream : std::cerr);
        for (const auto& f : res.files) std::cout << f << '\n';
        return 0;
    } catch (const twinworld::DegenerateState& e) {
        std::cerr << "error: degenerate state: " << e.what() << '\n';
        return kExitDegenerate;
    } catch (const twinworld::ConfigError& e) {
        std::cerr << "error: invalid configuration: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const twinworld::StepTooLarge& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const twinworld::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
