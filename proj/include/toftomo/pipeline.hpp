#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "toftomo/imaging.hpp"
#include "toftomo/mle.hpp"

namespace toftomo {

// Camera side of one tomography measurement: render, blur, noise, background, deconvolve, integrate.
struct MeasurementChain {
    ImagingGeometry geometry;
    ImageGrid grid;  // ny == 1 renders vertically integrated profiles directly
    PsfModel psf;
    NoiseModel noise;
    int n_averaged = 11320;
    double total_counts = 565.0;  // mean counts in one averaged frame
    int rl_iterations = rl_defaults::iterations;
    double rl_filter_floor = rl_defaults::filter_floor;
    bool blur = true;
    bool subtract_background = true;
    bool deconvolve = true;
    bool recenter = false;
    bool shot_noise = false;
    double photons_per_count = 0.0124;

    void validate() const;
};

// Probability density in u for one angle.
using UDensity = std::function<std::vector<double>(const std::vector<double>& u)>;

struct AngleMeasurement {
    ImageFrame clean;      // noiseless, blurred when the chain blurs
    ImageFrame measured;   // noisy, background subtracted
    ImageFrame processed;  // deconvolved
    BinnedQuadrature quadrature;
};

UDensity harmonic_density(const DensityMatrix& rho, double theta, const OscillatorSpec& spec);
// Momentum density of an already evolved state.
UDensity momentum_density(const DensityMatrix& rho_t, const OscillatorSpec& spec);

AngleMeasurement measure_angle(const UDensity& density, double theta, const MeasurementChain& chain,
                               const OscillatorSpec& spec, std::uint64_t seed);

// Pixel-integrated density on the chain's horizontal grid, normalized to sum 1.
std::vector<double> predicted_bins(const UDensity& density, const MeasurementChain& chain,
                                   const OscillatorSpec& spec);

// Angle j uses seed key (seed, j). Frames are kept only when `frames` is non-null.
QuadratureDataset measure_angles(const std::vector<UDensity>& densities, const std::vector<double>& angles,
                                 const MeasurementChain& chain, const OscillatorSpec& spec, std::uint64_t seed,
                                 std::vector<AngleMeasurement>* frames = nullptr);

}  // namespace toftomo
