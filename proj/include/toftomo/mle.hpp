#pragma once

#include <string>
#include <vector>

#include "toftomo/fock.hpp"

namespace toftomo {

struct BinnedQuadrature;

struct QuadratureRecord {
    double theta;
    double u;
    double weight;
    bool operator<(const QuadratureRecord& o) const;
};

class QuadratureDataset {
public:
    QuadratureDataset() = default;
    QuadratureDataset(std::vector<QuadratureRecord> records, double bin_width);
    static QuadratureDataset from_binned(const std::vector<BinnedQuadrature>& per_angle);

    const std::vector<QuadratureRecord>& records() const { return records_; }
    double bin_width() const { return bin_width_; }
    std::size_t size() const { return records_.size(); }
    int distinct_angles() const;
    bool clamped() const { return clamped_; }
    void set_clamped(bool c) { clamped_ = c; }

private:
    std::vector<QuadratureRecord> records_;
    double bin_width_ = 0.0;
    bool clamped_ = false;
};

enum class InitialState { maximally_mixed, all_ones };

struct MleConfig {
    int n_max = default_n_max;
    double tolerance = 1e-4;
    int max_iterations = 500;
    InitialState initial = InitialState::maximally_mixed;
    // Falls back to diluted steps (I + εR)ρ(I + εR) whenever a plain RρR step lowers the likelihood.
    bool monotone_safeguard = true;
    // Model each record as the density averaged over its bin rather than sampled at the centre.
    // Matches pixel-integrated camera data; leave off for point-sampled synthetic data.
    bool bin_average = false;

    void validate() const;
};

struct MleResult {
    DensityMatrix rho;
    int iterations_used;
    double final_step;
    std::vector<double> log_likelihood_trace;
    bool converged;
    bool weights_clamped;
    int diluted_steps;
};

inline constexpr double probability_floor = 1e-12;

CMatrix projector(const QuadraturePoint& q, int n_max, const OscillatorSpec& spec);
// Density in u-units.
double predicted_probability(const DensityMatrix& rho, const QuadraturePoint& q);
// R in the u measure with weights normalized to unit sum.
CMatrix r_operator(const DensityMatrix& rho, const QuadratureDataset& data, const OscillatorSpec& spec);
double log_likelihood(const DensityMatrix& rho, const QuadratureDataset& data);

// θ_j = 2πj/m, j = 0..m−1.
std::vector<double> uniform_angles(int m);
// Noiseless dataset with weights P(u)·Δu at each grid centre; the grid must be uniform.
QuadratureDataset synthesize_dataset(const DensityMatrix& rho, const std::vector<double>& angles,
                                     const std::vector<double>& u_grid);

MleResult reconstruct(const QuadratureDataset& data, const MleConfig& cfg, const OscillatorSpec& spec);

}  // namespace toftomo
