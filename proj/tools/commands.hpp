#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "toftomo/config.hpp"
#include "toftomo/io.hpp"

namespace toftomo::cli {

namespace fs = io::fs;
using io::json;

struct CommonOptions {
    std::string config_path;
    std::vector<std::string> sets;
    std::string seed;  // empty: TOMO_SEED, then the config value
    int threads = 0;
    std::string out;
    bool verbose = false;
    bool quiet = false;
};

// Knobs with dedicated flags; each maps onto one config key.
struct FlagOverrides {
    std::optional<int> n_max, max_iter, rl_iterations, replicas, points;
    std::optional<double> tol, rl_filter, grid, extent;
    std::optional<std::string> initial;
};

// One invocation: resolved config, tracked inputs/outputs and the manifest written at the end.
class Run {
public:
    Run(std::string command, std::vector<std::string> arguments, const CommonOptions& opts,
        const FlagOverrides& flags);

    json& config() { return config_; }
    std::uint64_t seed() const { return seed_; }
    const fs::path& out_dir() const { return out_; }
    bool verbose() const { return verbose_; }

    void input(const fs::path& p);
    void write(const fs::path& relative, const std::string& content);
    void write_image(const fs::path& relative, const ImageFrame& frame);
    json& results() { return results_; }
    void finish();
    void log(const std::string& msg) const;

private:
    std::string command_;
    std::vector<std::string> arguments_;
    json config_;
    std::uint64_t seed_ = 0;
    std::string seed_source_;
    fs::path out_;
    bool verbose_ = false;
    std::vector<std::pair<std::string, std::string>> inputs_;
    std::vector<std::pair<std::string, std::string>> outputs_;
    json results_ = json::object();
};

std::string sha256_hex(const std::string& bytes);

struct SimulateOptions {
    bool frames = false;
};
void cmd_simulate(Run& run, const SimulateOptions& o);

struct DeconvolveOptions {
    std::string input;
    double theta = 0.0;
};
void cmd_deconvolve(Run& run, const DeconvolveOptions& o);

struct ReconstructOptions {
    std::string input;
    std::string truth;
};
void cmd_reconstruct(Run& run, const ReconstructOptions& o);

struct WignerOptions {
    std::string input;
};
void cmd_wigner(Run& run, const WignerOptions& o);

struct BootstrapOptions {
    std::string input;
    std::string angles_from;
    bool archive = false;
};
void cmd_bootstrap(Run& run, const BootstrapOptions& o);

struct FitOptions {
    std::string model;
    std::string input;
    std::string quadrature;
    std::string centre = "mean";
    double omega_guess_hz = 0.0;
    double lambda = 0.0;
    bool fix_lambda = false;
};
void cmd_fit(Run& run, const FitOptions& o);

struct RobustnessOptions {
    std::vector<std::string> points;
};
void cmd_robustness(Run& run, const RobustnessOptions& o);

struct NoiseBiasOptions {
    std::vector<double> levels;
    std::vector<std::string> studies;
    int simulations = 0;
};
void cmd_noise_bias(Run& run, const NoiseBiasOptions& o);

}  // namespace toftomo::cli
