#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "toftomo/constants.hpp"
#include "toftomo/fock.hpp"

namespace toftomo {

struct ImagingGeometry {
    double magnification = 64.0;
    double flight_time = 0.5e-3;
    double pixel_pitch = 16e-6;  // camera plane
    double exposure = 10e-6;

    void validate() const;
    double atom_plane_pitch() const { return pixel_pitch / magnification; }
    bool operator==(const ImagingGeometry&) const = default;
};

struct PsfModel {
    double sigma_x = 445e-9;
    double sigma_y = 328e-9;

    void validate() const;
    // Adds independent Gaussian blur budgets (initial size, exposure motion) in quadrature.
    PsfModel with_extra_blur(double extra_x, double extra_y) const;
};

struct NoiseModel {
    double cic_rate = 0.0;
    double em_gain_mean = 0.0;
    double readout_sigma = 0.0;
    double offset = 0.0;
    double averaged_noise_amplitude = 0.0;
    double noise_scale_factor = 1.0;
    // Optional per-column A values; empty means uniform averaged_noise_amplitude.
    std::vector<double> column_amplitude;

    static NoiseModel measured();
    static NoiseModel zero() { return NoiseModel{}; }
    void validate() const;
    double column_sigma(int column, int n_averaged) const;
};

namespace noise_presets {
inline constexpr double scale_a = 1.6;
inline constexpr double scale_b = 1.05;
inline constexpr double scale_c = 1.16;
}  // namespace noise_presets

struct ImageGrid {
    int nx = 181;
    int ny = 61;
};

struct ImageFrame {
    RMatrix counts;  // counts(row = y, col = x)
    ImagingGeometry geometry;
    int n_averaged = 1;

    int nx() const { return static_cast<int>(counts.cols()); }
    int ny() const { return static_cast<int>(counts.rows()); }
    void validate() const;
};

struct BinnedQuadrature {
    double theta = 0.0;
    std::vector<double> u;
    std::vector<double> weights;
    double bin_width = 0.0;
    bool clamped = false;  // some negative bins were zeroed
};

double ballistic_sigma(double e_ke, double t, double sigma0, double mass = constants::rb87_mass);

// Camera-plane coordinate of pixel centres along an axis; the centre pixel sits at zero for odd n.
std::vector<double> pixel_centres(int n, double pitch);
// Momentum at each pixel centre for the ballistic map x_img = M·(p/m)·t_f.
std::vector<double> pixel_momenta(int n, const ImagingGeometry& geometry, double mass);

using MomentumDensity2D = std::function<double(double p_x, double p_y)>;
using AxisDensity = std::function<std::vector<double>(const std::vector<double>& p)>;

ImageFrame momentum_to_image(const MomentumDensity2D& density, const ImagingGeometry& geometry,
                             const OscillatorSpec& spec, const ImageGrid& grid, double total_counts,
                             int n_averaged = 1);

// Product density fx(p_x)·fy(p_y); each axis is evaluated at Gauss nodes in batches.
ImageFrame momentum_to_image_separable(const AxisDensity& fx, const AxisDensity& fy, const ImagingGeometry& geometry,
                                       const OscillatorSpec& spec, const ImageGrid& grid, double total_counts,
                                       int n_averaged = 1);

// Pixel-integrated, area-normalized Gaussian kernel; half-width ceil(5σ).
std::vector<double> gaussian_kernel(double sigma_pixels);

ImageFrame convolve_psf(const ImageFrame& frame, const PsfModel& psf);
ImageFrame sample_camera_noise(const ImageFrame& frame, const NoiseModel& noise, std::uint64_t seed);
ImageFrame subtract_background(const ImageFrame& signal, const ImageFrame& background);
ImageFrame richardson_lucy(const ImageFrame& image, const PsfModel& psf, int iterations, double filter_floor);

namespace rl_defaults {
inline constexpr int iterations = 2;
inline constexpr double filter_floor = 0.69;
}  // namespace rl_defaults

BinnedQuadrature image_to_quadrature(const ImageFrame& frame, double theta, const OscillatorSpec& spec,
                                     bool recenter = false);

}  // namespace toftomo
