#include "toftomo/pipeline.hpp"

#include <cmath>

#include "toftomo/dynamics.hpp"
#include "toftomo/errors.hpp"
#include "toftomo/parallel.hpp"
#include "toftomo/rng.hpp"

namespace toftomo {

namespace {

AxisDensity as_momentum(const UDensity& density, double p0) {
    return [density, p0](const std::vector<double>& p) {
        std::vector<double> u(p.size());
        for (std::size_t i = 0; i < p.size(); ++i) u[i] = p[i] / p0;
        auto d = density(u);
        for (double& v : d) v /= p0;
        return d;
    };
}

ImageFrame render(const UDensity& density, const MeasurementChain& chain, const OscillatorSpec& spec,
                  double total) {
    const double p0 = spec.p0();
    AxisDensity fy;
    if (chain.grid.ny == 1) {
        // constant density that integrates to one over the single pixel
        double dp = spec.mass() * chain.geometry.atom_plane_pitch() / chain.geometry.flight_time;
        fy = [dp](const std::vector<double>& p) { return std::vector<double>(p.size(), 1.0 / dp); };
    } else {
        fy = [p0](const std::vector<double>& p) {
            std::vector<double> out(p.size());
            for (std::size_t i = 0; i < p.size(); ++i)
                out[i] = std::exp(-0.5 * p[i] * p[i] / (p0 * p0)) / (std::sqrt(2.0 * constants::pi) * p0);
            return out;
        };
    }
    return momentum_to_image_separable(as_momentum(density, p0), fy, chain.geometry, spec, chain.grid, total,
                                       chain.n_averaged);
}

ImageFrame add_shot_noise(const ImageFrame& f, const MeasurementChain& chain, std::uint64_t k) {
    ImageFrame out = f;
    double scale = chain.photons_per_count * chain.n_averaged;
    for (Eigen::Index i = 0; i < f.counts.size(); ++i) {
        double mean = std::max(f.counts(i), 0.0) * scale;
        out.counts(i) = rng::poisson(k, static_cast<std::uint64_t>(i), mean) / scale;
    }
    return out;
}

}  // namespace

void MeasurementChain::validate() const {
    geometry.validate();
    psf.validate();
    noise.validate();
    if (grid.nx < 2 || grid.ny < 1) throw ArgumentError("imaging.grid must have nx >= 2 and ny >= 1");
    if (n_averaged < 1) throw ArgumentError("imaging.n_averaged must be at least 1");
    if (!(total_counts > 0.0)) throw ArgumentError("imaging.total_counts must be positive");
    if (rl_iterations < 1) throw ArgumentError("deconvolution.iterations must be at least 1");
    if (!(rl_filter_floor >= 0.0)) throw ArgumentError("deconvolution.filter_floor must be nonnegative");
    if (!(photons_per_count > 0.0)) throw ArgumentError("imaging.photons_per_count must be positive");
}

UDensity harmonic_density(const DensityMatrix& rho, double theta, const OscillatorSpec& spec) {
    return [rho, theta, spec](const std::vector<double>& u) { return quadrature_distribution(rho, theta, u, spec); };
}

UDensity momentum_density(const DensityMatrix& rho_t, const OscillatorSpec& spec) {
    return harmonic_density(rho_t, 0.0, spec);
}

AngleMeasurement measure_angle(const UDensity& density, double theta, const MeasurementChain& chain,
                               const OscillatorSpec& spec, std::uint64_t seed) {
    chain.validate();
    AngleMeasurement m;
    m.clean = render(density, chain, spec, chain.total_counts);
    if (chain.blur) m.clean = convolve_psf(m.clean, chain.psf);
    ImageFrame signal = chain.shot_noise ? add_shot_noise(m.clean, chain, rng::key({seed, 2})) : m.clean;
    if (chain.subtract_background) {
        // signal and background each carry half the variance so the difference has the modelled RMS
        NoiseModel half = chain.noise;
        half.noise_scale_factor /= std::sqrt(2.0);
        ImageFrame bg = signal;
        bg.counts.setZero();
        m.measured = subtract_background(sample_camera_noise(signal, half, rng::key({seed, 0})),
                                         sample_camera_noise(bg, half, rng::key({seed, 1})));
    } else {
        NoiseModel bare = chain.noise;
        bare.offset = 0.0;
        m.measured = sample_camera_noise(signal, bare, rng::key({seed, 0}));
    }
    m.processed = chain.deconvolve
                      ? richardson_lucy(m.measured, chain.psf, chain.rl_iterations, chain.rl_filter_floor)
                      : m.measured;
    m.quadrature = image_to_quadrature(m.processed, theta, spec, chain.recenter);
    return m;
}

std::vector<double> predicted_bins(const UDensity& density, const MeasurementChain& chain,
                                   const OscillatorSpec& spec) {
    MeasurementChain c = chain;
    c.grid.ny = 1;
    ImageFrame f = render(density, c, spec, 1.0);
    std::vector<double> out(f.counts.cols());
    double s = f.counts.sum();
    for (Eigen::Index i = 0; i < f.counts.cols(); ++i) out[i] = f.counts(0, i) / s;
    return out;
}

QuadratureDataset measure_angles(const std::vector<UDensity>& densities, const std::vector<double>& angles,
                                 const MeasurementChain& chain, const OscillatorSpec& spec, std::uint64_t seed,
                                 std::vector<AngleMeasurement>* frames) {
    if (densities.size() != angles.size()) throw DimensionError("one density is needed per angle");
    if (angles.empty()) throw ArgumentError("at least one angle is required");
    std::vector<AngleMeasurement> all(angles.size());
    parallel_for(angles.size(), [&](std::size_t j) {
        all[j] = measure_angle(densities[j], angles[j], chain, spec, rng::key({seed, static_cast<std::uint64_t>(j)}));
    });
    std::vector<BinnedQuadrature> binned;
    binned.reserve(all.size());
    for (const auto& a : all) binned.push_back(a.quadrature);
    auto data = QuadratureDataset::from_binned(binned);
    if (frames) *frames = std::move(all);
    return data;
}

}  // namespace toftomo
