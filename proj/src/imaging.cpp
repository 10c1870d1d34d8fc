#include "toftomo/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "toftomo/errors.hpp"
#include "toftomo/log.hpp"
#include "toftomo/rng.hpp"

namespace toftomo {

namespace {

// 3-point Gauss–Legendre on [-1, 1]
constexpr double gl_nodes[3] = {-0.7745966692414834, 0.0, 0.7745966692414834};
constexpr double gl_weights[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};

void require_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ArgumentError(std::string(name) + " must be positive");
}

void require_nonneg(double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ArgumentError(std::string(name) + " must be nonnegative");
}

void check_sampling(const ImagingGeometry& g, const OscillatorSpec& spec, const ImageGrid& grid) {
    if (grid.nx < 1 || grid.ny < 1) throw ArgumentError("image grid must be non-empty");
    double dp = spec.mass() * g.atom_plane_pitch() / g.flight_time;
    if (dp > spec.p0() / 2.0) {
        std::ostringstream os;
        os << "pixel momentum step " << dp / spec.p0() << " p0 undersamples the density (limit 0.5 p0)";
        throw AliasingError(os.str());
    }
    double wt = spec.omega() * g.flight_time;
    if (wt < 10.0) {
        std::ostringstream os;
        os << "flight time is only " << wt << " trap periods/2π; far-field mapping is approximate";
        warn_once("imaging.far_field", os.str());
    }
}

// Gauss nodes in momentum for every pixel, pixel-major.
std::vector<double> gauss_momenta(int n, const ImagingGeometry& g, double mass) {
    auto centres = pixel_momenta(n, g, mass);
    double half = 0.5 * mass * g.atom_plane_pitch() / g.flight_time;
    std::vector<double> out;
    out.reserve(3 * static_cast<std::size_t>(n));
    for (double c : centres) {
        for (double x : gl_nodes) out.push_back(c + half * x);
    }
    return out;
}

std::vector<double> pixel_integrals(const std::vector<double>& values, int n, double half_width) {
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int k = 0; k < 3; ++k) s += gl_weights[k] * values[3 * i + k];
        out[i] = s * half_width;
    }
    return out;
}

void convolve_rows(RMatrix& m, const std::vector<double>& k) {
    const int h = static_cast<int>(k.size() / 2);
    if (h == 0) {
        m *= k[0];
        return;
    }
    const Eigen::Index nx = m.cols();
    RVector row(nx);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index i = 0; i < nx; ++i) {
            double s = 0.0;
            for (int j = -h; j <= h; ++j) {
                Eigen::Index src = i - j;
                if (src >= 0 && src < nx) s += m(r, src) * k[j + h];
            }
            row(i) = s;
        }
        m.row(r) = row.transpose();
    }
}

void convolve_cols(RMatrix& m, const std::vector<double>& k) {
    RMatrix t = m.transpose();
    convolve_rows(t, k);
    m = t.transpose();
}

RMatrix convolve_separable(const RMatrix& m, const std::vector<double>& kx, const std::vector<double>& ky) {
    RMatrix out = m;
    convolve_rows(out, kx);
    // a single-row frame is already integrated vertically
    if (m.rows() > 1) convolve_cols(out, ky);
    return out;
}

}  // namespace

void ImagingGeometry::validate() const {
    require_positive(magnification, "imaging.magnification");
    require_positive(flight_time, "imaging.flight_time");
    require_positive(pixel_pitch, "imaging.pixel_pitch");
    require_positive(exposure, "imaging.exposure");
}

void PsfModel::validate() const {
    require_positive(sigma_x, "psf.sigma_x");
    require_positive(sigma_y, "psf.sigma_y");
}

PsfModel PsfModel::with_extra_blur(double extra_x, double extra_y) const {
    return {std::hypot(sigma_x, extra_x), std::hypot(sigma_y, extra_y)};
}

NoiseModel NoiseModel::measured() {
    NoiseModel n;
    n.cic_rate = 7.0e-2;
    n.em_gain_mean = 73.1;
    n.readout_sigma = 5.4;
    n.offset = 88.4;
    n.averaged_noise_amplitude = 26.5;
    n.noise_scale_factor = 1.0;
    return n;
}

void NoiseModel::validate() const {
    require_nonneg(cic_rate, "noise.cic_rate");
    if (cic_rate > 1.0) throw ArgumentError("noise.cic_rate must not exceed 1");
    require_nonneg(em_gain_mean, "noise.em_gain_mean");
    require_nonneg(readout_sigma, "noise.readout_sigma");
    require_nonneg(offset, "noise.offset");
    require_nonneg(averaged_noise_amplitude, "noise.averaged_noise_amplitude");
    require_nonneg(noise_scale_factor, "noise.noise_scale_factor");
    for (double a : column_amplitude) require_nonneg(a, "noise.column_amplitude");
}

double NoiseModel::column_sigma(int column, int n_averaged) const {
    double a = averaged_noise_amplitude;
    if (!column_amplitude.empty()) {
        if (column < 0 || column >= static_cast<int>(column_amplitude.size())) {
            throw GridMismatchError("per-column noise table does not cover the frame width");
        }
        a = column_amplitude[column];
    }
    return noise_scale_factor * a / std::sqrt(static_cast<double>(n_averaged));
}

void ImageFrame::validate() const {
    geometry.validate();
    if (n_averaged < 1) throw ArgumentError("n_averaged must be at least 1");
    if (counts.size() == 0) throw DataError("image frame is empty");
    if (!counts.allFinite()) throw DataError("image frame has non-finite values");
}

double ballistic_sigma(double e_ke, double t, double sigma0, double mass) {
    require_nonneg(e_ke, "e_ke");
    require_nonneg(sigma0, "sigma0");
    require_positive(mass, "mass");
    return std::sqrt(2.0 * e_ke * t * t / mass + sigma0 * sigma0);
}

std::vector<double> pixel_centres(int n, double pitch) {
    std::vector<double> x(n);
    double mid = 0.5 * (n - 1);
    for (int i = 0; i < n; ++i) x[i] = (i - mid) * pitch;
    return x;
}

std::vector<double> pixel_momenta(int n, const ImagingGeometry& g, double mass) {
    auto x = pixel_centres(n, g.pixel_pitch);
    for (double& v : x) v = mass * v / (g.magnification * g.flight_time);
    return x;
}

ImageFrame momentum_to_image(const MomentumDensity2D& density, const ImagingGeometry& geometry,
                             const OscillatorSpec& spec, const ImageGrid& grid, double total_counts,
                             int n_averaged) {
    geometry.validate();
    check_sampling(geometry, spec, grid);
    require_nonneg(total_counts, "total_counts");
    auto px = gauss_momenta(grid.nx, geometry, spec.mass());
    auto py = gauss_momenta(grid.ny, geometry, spec.mass());
    double half = 0.5 * spec.mass() * geometry.atom_plane_pitch() / geometry.flight_time;
    ImageFrame f{RMatrix::Zero(grid.ny, grid.nx), geometry, n_averaged};
    for (int iy = 0; iy < grid.ny; ++iy) {
        for (int ix = 0; ix < grid.nx; ++ix) {
            double s = 0.0;
            for (int a = 0; a < 3; ++a) {
                for (int b = 0; b < 3; ++b) {
                    s += gl_weights[a] * gl_weights[b] * density(px[3 * ix + b], py[3 * iy + a]);
                }
            }
            f.counts(iy, ix) = total_counts * s * half * half;
        }
    }
    return f;
}

ImageFrame momentum_to_image_separable(const AxisDensity& fx, const AxisDensity& fy, const ImagingGeometry& geometry,
                                       const OscillatorSpec& spec, const ImageGrid& grid, double total_counts,
                                       int n_averaged) {
    geometry.validate();
    check_sampling(geometry, spec, grid);
    require_nonneg(total_counts, "total_counts");
    double half = 0.5 * spec.mass() * geometry.atom_plane_pitch() / geometry.flight_time;
    auto ix = pixel_integrals(fx(gauss_momenta(grid.nx, geometry, spec.mass())), grid.nx, half);
    auto iy = pixel_integrals(fy(gauss_momenta(grid.ny, geometry, spec.mass())), grid.ny, half);
    Eigen::Map<const RVector> vx(ix.data(), grid.nx);
    Eigen::Map<const RVector> vy(iy.data(), grid.ny);
    ImageFrame f{total_counts * vy * vx.transpose(), geometry, n_averaged};
    return f;
}

std::vector<double> gaussian_kernel(double sigma_pixels) {
    if (!(sigma_pixels > 0.0) || !std::isfinite(sigma_pixels)) throw ArgumentError("kernel width must be positive");
    int h = static_cast<int>(std::ceil(5.0 * sigma_pixels));
    if (sigma_pixels < 1e-3) h = 0;
    std::vector<double> k(2 * h + 1);
    double s = 0.0;
    for (int j = -h; j <= h; ++j) {
        double v = 0.5 * (std::erf((j + 0.5) / (std::sqrt(2.0) * sigma_pixels)) -
                          std::erf((j - 0.5) / (std::sqrt(2.0) * sigma_pixels)));
        k[j + h] = v;
        s += v;
    }
    for (double& v : k) v /= s;
    return k;
}

ImageFrame convolve_psf(const ImageFrame& frame, const PsfModel& psf) {
    frame.validate();
    psf.validate();
    double pitch = frame.geometry.atom_plane_pitch();
    auto kx = gaussian_kernel(psf.sigma_x / pitch);
    auto ky = gaussian_kernel(psf.sigma_y / pitch);
    ImageFrame out = frame;
    out.counts = convolve_separable(frame.counts, kx, ky);
    return out;
}

ImageFrame sample_camera_noise(const ImageFrame& frame, const NoiseModel& noise, std::uint64_t seed) {
    frame.validate();
    noise.validate();
    ImageFrame out = frame;
    const int nx = frame.nx();
    const int ny = frame.ny();
    const bool single_shot = frame.n_averaged == 1;
    for (int iy = 0; iy < ny; ++iy) {
        for (int ix = 0; ix < nx; ++ix) {
            std::uint64_t k = rng::key({seed, static_cast<std::uint64_t>(iy), static_cast<std::uint64_t>(ix)});
            double add = noise.offset;
            if (single_shot) {
                if (noise.cic_rate > 0.0 && rng::uniform(k, 0) < noise.cic_rate) {
                    add += rng::exponential(k, 1, noise.em_gain_mean);
                }
                if (noise.readout_sigma > 0.0) add += noise.readout_sigma * rng::normal(k, 1);
            } else {
                double s = noise.column_sigma(ix, frame.n_averaged);
                if (s > 0.0) add += s * rng::normal(k, 2);
            }
            out.counts(iy, ix) += add;
        }
    }
    return out;
}

ImageFrame subtract_background(const ImageFrame& signal, const ImageFrame& background) {
    if (signal.counts.rows() != background.counts.rows() || signal.counts.cols() != background.counts.cols()) {
        throw GridMismatchError("signal and background frames have different shapes");
    }
    if (!(signal.geometry == background.geometry)) {
        throw GridMismatchError("signal and background frames have different geometry");
    }
    ImageFrame out = signal;
    out.counts = signal.counts - background.counts;
    return out;
}

ImageFrame richardson_lucy(const ImageFrame& image, const PsfModel& psf, int iterations, double filter_floor) {
    image.validate();
    psf.validate();
    if (iterations < 1) throw ArgumentError("richardson_lucy needs at least one iteration");
    require_nonneg(filter_floor, "filter_floor");
    RMatrix obs = image.counts.cwiseMax(0.0);
    if (!(obs.maxCoeff() > 0.0)) throw DegenerateInputError("image is all zero after clamping");
    double pitch = image.geometry.atom_plane_pitch();
    auto kx = gaussian_kernel(psf.sigma_x / pitch);
    auto ky = gaussian_kernel(psf.sigma_y / pitch);
    std::vector<double> kx_m(kx.rbegin(), kx.rend());
    std::vector<double> ky_m(ky.rbegin(), ky.rend());
    RMatrix est = RMatrix::Ones(obs.rows(), obs.cols());
    RMatrix ratio(obs.rows(), obs.cols());
    for (int it = 0; it < iterations; ++it) {
        RMatrix blurred = convolve_separable(est, kx, ky);
        for (Eigen::Index i = 0; i < obs.size(); ++i) {
            double c = blurred(i);
            ratio(i) = (c < filter_floor || c <= 0.0) ? 0.0 : obs(i) / c;
        }
        est = est.cwiseProduct(convolve_separable(ratio, kx_m, ky_m));
    }
    ImageFrame out = image;
    out.counts = est.cwiseMax(0.0);
    return out;
}

BinnedQuadrature image_to_quadrature(const ImageFrame& frame, double theta, const OscillatorSpec& spec,
                                     bool recenter) {
    frame.validate();
    const ImagingGeometry& g = frame.geometry;
    const int nx = frame.nx();
    BinnedQuadrature q;
    q.theta = theta;
    q.u = pixel_centres(nx, g.pixel_pitch);
    double scale = spec.mass() / (g.magnification * g.flight_time * spec.p0());
    for (double& u : q.u) u *= scale;
    q.bin_width = g.pixel_pitch * scale;
    RVector cols = frame.counts.colwise().sum().transpose();
    q.weights.resize(nx);
    double total = 0.0;
    for (int i = 0; i < nx; ++i) {
        double w = cols(i);
        if (w < 0.0) {
            w = 0.0;
            q.clamped = true;
        }
        q.weights[i] = w;
    }
    // pairwise from both ends so a mirrored frame normalizes bit-identically
    for (int i = 0, j = nx - 1; i <= j; ++i, --j) total += i == j ? q.weights[i] : q.weights[i] + q.weights[j];
    if (!(total > 0.0)) throw DegenerateInputError("quadrature distribution has no positive weight");
    for (double& w : q.weights) w /= total;
    if (recenter) {
        double c = 0.0;
        for (int i = 0; i < nx; ++i) c += q.weights[i] * q.u[i];
        for (double& u : q.u) u -= c;
    }
    return q;
}

}  // namespace toftomo
