#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "toftomo/dynamics.hpp"
#include "toftomo/imaging.hpp"

namespace toftomo {

struct TimeSeries {
    std::vector<double> t;
    std::vector<double> y;
    std::vector<double> y_err;  // empty or one per point

    void validate() const;
    std::size_t size() const { return t.size(); }
};

struct FitResult {
    std::vector<std::string> names;
    std::vector<double> values;
    std::vector<double> errors;
    RMatrix covariance;
    double residual_norm = 0.0;
    bool converged = false;
    std::string message;
    // Quantities computed from the fitted parameters, e.g. magnification or decay time.
    std::vector<std::string> derived_names;
    std::vector<double> derived_values;
    std::vector<double> derived_errors;

    double value(const std::string& name) const;
    double error(const std::string& name) const;
};

struct ParamSpec {
    std::string name;
    double initial = 0.0;
    double scale = 1.0;  // the optimizer works in value/scale
    double lower = -std::numeric_limits<double>::infinity();
    double upper = std::numeric_limits<double>::infinity();
    bool fixed = false;
};

// Residuals for a full parameter vector (fixed entries included).
using ResidualFunction = std::function<void(const std::vector<double>& params, std::vector<double>& residuals)>;

// Bounded trust-region least squares with central-difference Jacobians. Covariance s²(JᵀJ)⁻¹
// over the free parameters, with s² = RSS/(n − p) unless `absolute_errors`.
FitResult least_squares(const std::vector<ParamSpec>& params, int n_residuals, const ResidualFunction& residuals,
                        bool absolute_errors = false);

// A e^{−k t} cos(2π f t + φ) + c with k ≥ 0, seeded from the periodogram peak.
FitResult fit_damped_sinusoid(const TimeSeries& series);

// σ(t) = √(2 E t²/m + σ0²), both parameters ≥ 0.
FitResult fit_ballistic(const TimeSeries& series, double mass = constants::rb87_mass);

// y = y0 + a t²/2; magnification M = a/g is reported as a derived value.
FitResult fit_gravity_drop(const TimeSeries& series, double g = constants::gravity);

struct AnharmonicFitOptions {
    bool fix_lambda = false;
    double lambda = 0.0;         // starting value, or the fixed value
    double lambda_bound = 0.05;  // |λ| ≤ bound
    double omega_guess = 0.0;    // 0 takes spec.omega()
    double x_i_guess = 0.0;      // 0 seeds from the oscillation amplitude
};

// ⟨p⟩(t) of a displaced ground state in H(λ, ω); series values are momenta in units of spec.p0().
FitResult fit_anharmonic_model(const TimeSeries& series, const OscillatorSpec& spec,
                               const AnharmonicFitOptions& options = {});

// 4|λ|⟨X⁴⟩/⟨X²⟩ with X = x/x0, evaluated on the harmonic displaced ground state.
double anharmonic_significance(double lambda, double x_i, const OscillatorSpec& spec);

// Least-squares weights of PSF-blurred n = 0, 1, 2 momentum images with widths fixed by the
// trap frequency. P ≥ 0 and ΣP ≤ 1; the remainder is reported as derived "unmodeled".
FitResult fit_fock_mixture(const ImageFrame& image, const PsfModel& psf, const OscillatorSpec& spec,
                           const ImagingGeometry& geometry);

// Centre-of-mass extractors for a quadrature profile, in u.
double profile_mean(const BinnedQuadrature& q);
double profile_gaussian_center(const BinnedQuadrature& q);

}  // namespace toftomo
