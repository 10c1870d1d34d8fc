#pragma once

#include <vector>

#include "toftomo/linalg.hpp"

namespace toftomo {

inline constexpr int default_n_max = 25;

class OscillatorSpec {
public:
    OscillatorSpec(double mass, double omega, int n_max = default_n_max);

    double mass() const { return mass_; }
    double omega() const { return omega_; }
    int n_max() const { return n_max_; }
    int dim() const { return n_max_ + 1; }
    double x0() const { return x0_; }
    double p0() const { return p0_; }

    OscillatorSpec with_omega(double omega) const { return {mass_, omega, n_max_}; }
    OscillatorSpec with_n_max(int n_max) const { return {mass_, omega_, n_max}; }

private:
    double mass_;
    double omega_;
    int n_max_;
    double x0_;
    double p0_;
};

class PureState {
public:
    explicit PureState(CVector amplitudes);
    static PureState fock(int n, int dim);

    const CVector& amplitudes() const { return amplitudes_; }
    int dim() const { return static_cast<int>(amplitudes_.size()); }

private:
    CVector amplitudes_;
};

class DensityMatrix {
public:
    // Validates Hermiticity, unit trace and PSD within tol, then stores the exact Hermitian part.
    explicit DensityMatrix(const CMatrix& elements, double tol = 1e-10);

    static DensityMatrix fock(int n, int dim);
    static DensityMatrix diagonal(const std::vector<double>& populations, int dim);
    static DensityMatrix from_pure(const PureState& psi);
    static DensityMatrix maximally_mixed(int dim);
    // Hermitizes and renormalizes; PSD is still checked.
    static DensityMatrix normalized(const CMatrix& m, double tol = 1e-9);
    // Hermitizes, clips negative eigenvalues to zero and renormalizes.
    static DensityMatrix nearest_physical(const CMatrix& m);

    const CMatrix& matrix() const { return elements_; }
    int dim() const { return static_cast<int>(elements_.rows()); }
    int n_max() const { return dim() - 1; }
    double purity() const;
    std::vector<double> populations() const;
    DensityMatrix transformed(const CMatrix& u) const;

private:
    struct trusted_tag {};
    DensityMatrix(CMatrix elements, trusted_tag) : elements_(std::move(elements)) {}
    CMatrix elements_;
};

struct QuadraturePoint {
    QuadraturePoint(double theta_rad, double u_value);
    double theta;
    double u;
};

struct WignerGrid {
    std::vector<double> x_axis;
    std::vector<double> p_axis;
    RMatrix values;  // values(i_p, i_x), in units of ħW
    double max_imag_residue = 0.0;

    // Σ W ΔX ΔP / 2, which is 1 for a normalized state.
    double integral() const;
};

struct Negativity {
    double value;
    bool negative;
    double x;
    double p;
};

double hermite(int n, double x);

// ψ_0..ψ_nmax(u): orthonormal in u, ψ_n(u) = (2π)^{-1/4} H_n(u/√2) e^{-u²/4} / √(2ⁿ n!).
RVector hermite_functions(int n_max, double u);

// ⟨n|p̃,θ⟩ in the dimensionless u measure (no 1/√p0 factor).
CVector quadrature_overlaps_u(int n_max, const QuadraturePoint& q);

// ⟨n|p̃,θ⟩ with the 1/√p0 density normalization.
cplx quadrature_overlap(int n, const QuadraturePoint& q, const OscillatorSpec& spec);

double fock_momentum_density_2d(int n_x, double p_x, double p_y, double p0x, double p0y);

CMatrix annihilation(int dim);
CMatrix position_operator(int dim);  // x/x0 = a + a†
CMatrix momentum_operator(int dim);  // p/p0 = i(a† − a)
CMatrix number_phase(int dim, double delta);  // e^{-iδ n̂}

// Poisson tail beyond n_max for a coherent amplitude α.
double displacement_leakage(double alpha, int n_max);
CMatrix displacement_matrix(double x_i, const OscillatorSpec& spec);

double squeeze_parameter(double depth_ratio);
CMatrix squeeze_from_depth_jump(double depth_ratio, const OscillatorSpec& spec);

double trace_distance(const DensityMatrix& a, const DensityMatrix& b);
double fidelity(const DensityMatrix& a, const DensityMatrix& b);

std::vector<double> linspace(double a, double b, int n);

double wigner_at(const DensityMatrix& rho, double x, double p);
WignerGrid wigner(const DensityMatrix& rho, const std::vector<double>& x_axis,
                  const std::vector<double>& p_axis);
Negativity negativity(const WignerGrid& w);
// Grid search over ±extent followed by a local compass refinement.
Negativity wigner_minimum(const DensityMatrix& rho, double extent = 6.0, int points = 121);

}  // namespace toftomo
