#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "toftomo/imaging.hpp"
#include "toftomo/mle.hpp"
#include "toftomo/pipeline.hpp"
#include "toftomo/stats.hpp"

namespace toftomo {

struct BootstrapConfig {
    int n_replicas = 50;
    NoiseModel noise = NoiseModel::measured();
    int rl_iterations = rl_defaults::iterations;
    double rl_filter_floor = rl_defaults::filter_floor;
    std::uint64_t seed = 0;
    ImagingGeometry pipeline_geometry;
    PsfModel psf;
    int grid_nx = 181;
    int n_averaged = 11320;
    double total_counts = 565.0;
    bool blur = true;
    bool deconvolve = true;
    bool shot_noise = false;
    double max_failure_fraction = 0.2;
    double wigner_extent = 6.0;
    int wigner_points = 61;

    void validate() const;
    // Vertically integrated chain with Gaussian noise added straight to the profile.
    MeasurementChain chain() const;
};

struct ReplicaFailure {
    int index;
    std::string message;
};

struct BootstrapReport {
    std::vector<int> replica_indices;
    std::vector<DensityMatrix> replica_rhos;
    std::vector<double> negativities;
    std::vector<double> fidelities;  // to the input state
    std::vector<bool> converged;
    std::vector<ReplicaFailure> failures;
    double negativity_mean = 0.0;
    double negativity_std = 0.0;
    double negativity_p025 = 0.0;
    double negativity_p975 = 0.0;
    RMatrix real_mean, real_std, imag_mean, imag_std;
    RMatrix real_p025, real_p975;
    std::vector<double> population_mean, population_std, population_p025, population_p975;
};

QuadratureDataset synthesize_replica(const DensityMatrix& rho_mle, const std::vector<double>& angles,
                                     const BootstrapConfig& cfg, int replica_index, const OscillatorSpec& spec,
                                     std::vector<AngleMeasurement>* frames = nullptr);

// Failed replicas (degenerate data) are recorded and replaced by the next unused index;
// more than max_failure_fraction·n_replicas failures abort the run.
BootstrapReport run_bootstrap(const DensityMatrix& rho_mle, const std::vector<double>& angles,
                              const BootstrapConfig& cfg, const MleConfig& mle_cfg, const OscillatorSpec& spec);

struct NoiseBiasLevel {
    double sigma = 0.0;  // RMS noise per profile bin, counts
    std::vector<std::vector<double>> populations;  // per simulation
    std::vector<double> high_n;                    // Σ_{n ≥ threshold} ρ_nn per simulation
    std::vector<double> wigner_at_min;             // W(x_m, p_m) per simulation
    std::vector<double> population_mean, population_p025, population_p975;
    double high_n_mean = 0.0, high_n_p025 = 0.0, high_n_p975 = 0.0;
    double wigner_mean = 0.0, wigner_p025 = 0.0, wigner_p975 = 0.0;
    int failures = 0;
};

struct NoiseBiasTable {
    std::vector<double> base_populations;
    double x_m = 0.0, p_m = 0.0, true_wigner_min = 0.0;
    int high_n_threshold = 3;
    std::vector<NoiseBiasLevel> levels;
    stats::Spearman high_n_trend;  // pooled simulations vs level
    stats::Spearman wigner_trend;
};

NoiseBiasTable noise_bias_sweep(const DensityMatrix& base_rho, const std::vector<double>& noise_levels,
                                const BootstrapConfig& cfg, const std::vector<double>& angles,
                                const MleConfig& mle_cfg, const OscillatorSpec& spec, int simulations = 50,
                                int high_n_threshold = 3);

}  // namespace toftomo
