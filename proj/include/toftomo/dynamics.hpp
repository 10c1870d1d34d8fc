#pragma once

#include <array>
#include <memory>
#include <vector>

#include "toftomo/fock.hpp"

namespace toftomo {

class TrapModel {
public:
    // The sextic stabilizer is switched on automatically for λ < 0.
    TrapModel(OscillatorSpec spec, double lambda = 0.0);
    TrapModel(OscillatorSpec spec, double lambda, bool include_sextic);

    const OscillatorSpec& spec() const { return spec_; }
    double lambda() const { return lambda_; }
    bool include_sextic() const { return include_sextic_; }

private:
    OscillatorSpec spec_;
    double lambda_;
    bool include_sextic_;
};

struct EvolutionResult {
    DensityMatrix rho_t;
    double t_e;
    double theta_equivalent;
    double buffer_population;
};

class MixtureSpec {
public:
    MixtureSpec(double p0, double p1, double p2);
    const std::array<double, 3>& populations() const { return p_; }

private:
    std::array<double, 3> p_;
};

struct Eigensystem {
    RVector energies;  // units ħω, ascending
    CMatrix vectors;   // columns are eigenvectors in the Fock basis
    // Eigenvector index with the largest overlap onto Fock |n⟩, per n.
    std::vector<int> fock_label;
};

// Dimensionless H/ħω = P²/4 + X²/4 + λX⁴ (+ 2λ²/3 X⁶), with X = a + a†, P = i(a† − a).
CMatrix build_hamiltonian(const TrapModel& model);

// Cached, immutable eigendecomposition of build_hamiltonian(model).
std::shared_ptr<const Eigensystem> eigensystem(const TrapModel& model);

// Fraction of population in the top 20% of Fock levels.
double buffer_population(const DensityMatrix& rho);

EvolutionResult evolve(const DensityMatrix& rho, const TrapModel& model, double t_e);

// Probability density in u at each grid point.
std::vector<double> quadrature_distribution(const DensityMatrix& rho, double theta, const std::vector<double>& u_grid,
                                            const OscillatorSpec& spec);

std::vector<double> momentum_expectation_trace(const DensityMatrix& rho0, const TrapModel& model,
                                               const std::vector<double>& times);

// λ ∝ 1/√V, ω ∝ √V for a depth change V → depth_ratio·V.
TrapModel rescale_depth(const TrapModel& model, double depth_ratio);

// Mixture of the three lowest eigenstates of the pre-jump trap (depth V/ratio), squeezed into the
// final trap's basis by the sudden jump, then displaced by x_i.
DensityMatrix prepare_state(const MixtureSpec& mix, const TrapModel& model, double x_i, double depth_jump_ratio);

// Undisplaced, unsqueezed mixture of eigenstates of the model itself.
DensityMatrix eigen_mixture(const MixtureSpec& mix, const TrapModel& model);

}  // namespace toftomo
