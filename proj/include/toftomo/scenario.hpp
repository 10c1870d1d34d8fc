#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "toftomo/bootstrap.hpp"
#include "toftomo/dynamics.hpp"
#include "toftomo/mle.hpp"
#include "toftomo/pipeline.hpp"

namespace toftomo {

struct ScenarioConfig {
    TrapModel trap{OscillatorSpec(constants::rb87_mass, 2 * constants::pi * 9.05e3, 25)};
    MixtureSpec mixture{0.26, 0.651, 0.089};
    double displacement = 0.0;  // meters
    double depth_jump_ratio = 2.0;
    std::vector<double> angles = uniform_angles(64);
    // vertically integrated before deconvolution by default
    MeasurementChain chain = [] {
        MeasurementChain c;
        c.grid.ny = 1;
        c.noise = NoiseModel::measured();
        return c;
    }();
    MleConfig mle;
    std::uint64_t seed = 0;
    int bootstrap_replicas = 0;  // 0 skips the bootstrap stage
    double wigner_extent = 6.0;
    int wigner_points = 121;
    bool keep_frames = false;

    void validate() const;
};

struct ScenarioResult {
    DensityMatrix truth;
    QuadratureDataset data;
    MleResult mle;
    WignerGrid wigner;
    Negativity negativity;
    Negativity truth_negativity;
    double fidelity = 0.0;
    std::optional<BootstrapReport> bootstrap;
    std::vector<AngleMeasurement> frames;
};

struct SimulatedMeasurement {
    DensityMatrix truth;
    QuadratureDataset data;
    std::vector<AngleMeasurement> frames;  // filled when cfg.keep_frames
};

// Forward model only: prepare → per-angle evolution → camera chain.
SimulatedMeasurement simulate_scenario(const ScenarioConfig& cfg);

// prepare → per-angle evolution (t_e = θ/ω) → render → blur → noise → background → deconvolve →
// integrate → MLE → Wigner → optional bootstrap. Stage failures are rethrown with the stage name.
ScenarioResult run_tomography_scenario(const ScenarioConfig& cfg);

// Exact momentum distributions of ρ(0) evolved in `trap`, scheduled with the bare ω.
QuadratureDataset anharmonic_dataset(const DensityMatrix& rho0, const TrapModel& trap,
                                     const std::vector<double>& angles, const std::vector<double>& u_grid);

struct RobustnessPoint {
    std::array<double, 3> populations;
    double fidelity = 0.0;
    double gamma = 0.0;      // truth negativity
    double gamma_mle = 0.0;  // reconstructed negativity
    double delta_gamma = 0.0;
    int iterations = 0;
    bool converged = false;
};

struct RobustnessMap {
    double spacing = 0.05;
    double lambda = 0.0;
    double omega = 0.0;
    double displacement = 0.0;
    std::vector<RobustnessPoint> points;
};

struct RobustnessConfig {
    TrapModel trap{OscillatorSpec(constants::rb87_mass, 2 * constants::pi * 8.50e3, 25), -0.0037};
    double displacement = 166e-9;
    double depth_jump_ratio = 1.0;
    std::vector<double> angles = uniform_angles(64);
    std::vector<double> u_grid = linspace(-8.0, 8.0, 201);
    MleConfig mle;
    double wigner_extent = 6.0;
    int wigner_points = 61;
};

// Fitted trap moved to a deeper trap (depth ratio) with a scaled displacement.
struct RescaledTrap {
    TrapModel trap;
    double displacement;
};
RescaledTrap rescale_fitted_trap(const TrapModel& fitted, double fitted_displacement, double depth_ratio,
                                 double displacement_ratio);

// Barycentric grid over (P0, P1, P2) with the given spacing; every point sums to one.
std::vector<std::array<double, 3>> simplex_grid(double spacing);

RobustnessPoint robustness_point(const std::array<double, 3>& populations, const RobustnessConfig& cfg);
RobustnessMap run_anharmonic_robustness(const std::vector<std::array<double, 3>>& grid, const RobustnessConfig& cfg,
                                        double spacing = 0.05);

struct NoiseBiasStudyConfig {
    OscillatorSpec spec{constants::rb87_mass, 2 * constants::pi * 9.05e3, 25};
    double displacement_n0 = 166e-9;
    double displacement_n1 = 129e-9;
    std::vector<double> levels = {0.0, 0.5, 1.0, 2.0, 4.0, 8.0};
    int simulations = 50;
    int angles_n0 = 9;
    int angles_n1 = 64;
    // noise goes straight onto the quadrature profiles; no blur or deconvolution
    BootstrapConfig bootstrap = [] {
        BootstrapConfig b;
        b.blur = false;
        b.deconvolve = false;
        return b;
    }();
    MleConfig mle;
    std::vector<std::string> studies = {"displaced-n0", "squeezed-n1", "displaced-squeezed-n1"};
};

struct NoiseBiasStudy {
    std::string name;
    NoiseBiasTable table;
};

DensityMatrix noise_bias_base_state(const std::string& name, const NoiseBiasStudyConfig& cfg);
std::vector<NoiseBiasStudy> run_noise_bias_study(const NoiseBiasStudyConfig& cfg);

}  // namespace toftomo
