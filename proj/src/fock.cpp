#include "toftomo/fock.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "toftomo/constants.hpp"
#include "toftomo/errors.hpp"

namespace toftomo {

namespace {

constexpr double two_pi = 2.0 * constants::pi;

void require_same_dim(const DensityMatrix& a, const DensityMatrix& b) {
    if (a.dim() != b.dim()) {
        std::ostringstream os;
        os << "density matrix dimensions differ: " << a.dim() << " vs " << b.dim();
        throw DimensionError(os.str());
    }
}

}  // namespace

OscillatorSpec::OscillatorSpec(double mass, double omega, int n_max)
    : mass_(mass), omega_(omega), n_max_(n_max) {
    if (!(mass > 0.0) || !std::isfinite(mass)) throw ArgumentError("mass must be positive");
    if (!(omega > 0.0) || !std::isfinite(omega)) throw ArgumentError("omega must be positive");
    if (n_max < 1) throw ArgumentError("n_max must be at least 1");
    x0_ = std::sqrt(constants::hbar / (2.0 * mass * omega));
    p0_ = std::sqrt(mass * constants::hbar * omega / 2.0);
}

PureState::PureState(CVector amplitudes) : amplitudes_(std::move(amplitudes)) {
    if (amplitudes_.size() == 0) throw ArgumentError("empty state vector");
    if (std::abs(amplitudes_.norm() - 1.0) > 1e-12) throw ArgumentError("state vector is not normalized");
}

PureState PureState::fock(int n, int dim) {
    if (n < 0 || n >= dim) throw ArgumentError("Fock index outside the truncated basis");
    CVector v = CVector::Zero(dim);
    v(n) = 1.0;
    return PureState(v);
}

DensityMatrix::DensityMatrix(const CMatrix& elements, double tol) {
    if (elements.rows() != elements.cols() || elements.rows() == 0) {
        throw DimensionError("density matrix must be square and non-empty");
    }
    if (!elements.allFinite()) throw ArgumentError("density matrix has non-finite elements");
    double herm = (elements - elements.adjoint()).cwiseAbs().maxCoeff();
    if (herm >= tol) throw ArgumentError("density matrix is not Hermitian");
    cplx tr = elements.trace();
    if (std::abs(tr - 1.0) >= tol) throw ArgumentError("density matrix trace differs from 1");
    CMatrix h = hermitize(elements);
    Eigen::SelfAdjointEigenSolver<CMatrix> es(h, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -tol) throw ArgumentError("density matrix is not positive semidefinite");
    elements_ = std::move(h);
}

DensityMatrix DensityMatrix::fock(int n, int dim) {
    return from_pure(PureState::fock(n, dim));
}

DensityMatrix DensityMatrix::diagonal(const std::vector<double>& populations, int dim) {
    if (static_cast<int>(populations.size()) > dim) throw DimensionError("more populations than basis states");
    CMatrix m = CMatrix::Zero(dim, dim);
    for (std::size_t i = 0; i < populations.size(); ++i) m(i, i) = populations[i];
    return DensityMatrix(m);
}

DensityMatrix DensityMatrix::from_pure(const PureState& psi) {
    const CVector& a = psi.amplitudes();
    return DensityMatrix(hermitize(a * a.adjoint()), trusted_tag{});
}

DensityMatrix DensityMatrix::maximally_mixed(int dim) {
    if (dim < 1) throw DimensionError("dimension must be positive");
    return DensityMatrix(CMatrix::Identity(dim, dim) / static_cast<double>(dim), trusted_tag{});
}

DensityMatrix DensityMatrix::normalized(const CMatrix& m, double tol) {
    CMatrix h = hermitize(m);
    double tr = h.trace().real();
    if (!(tr > 0.0) || !std::isfinite(tr)) throw NumericError("matrix has nonpositive trace");
    h /= tr;
    return DensityMatrix(h, tol);
}

DensityMatrix DensityMatrix::nearest_physical(const CMatrix& m) {
    if (m.rows() != m.cols() || m.rows() == 0) throw DimensionError("density matrix must be square and non-empty");
    if (!m.allFinite()) throw NumericError("matrix has non-finite elements");
    CMatrix h = hermitian_function(m, [](double x) { return std::max(x, 0.0); });
    double tr = h.trace().real();
    if (!(tr > 0.0)) throw NumericError("matrix has no positive spectrum");
    return DensityMatrix(hermitize(h / tr), trusted_tag{});
}

double DensityMatrix::purity() const {
    return (elements_ * elements_).trace().real();
}

std::vector<double> DensityMatrix::populations() const {
    std::vector<double> p(dim());
    for (int i = 0; i < dim(); ++i) p[i] = elements_(i, i).real();
    return p;
}

DensityMatrix DensityMatrix::transformed(const CMatrix& u) const {
    if (u.rows() != dim() || u.cols() != dim()) throw DimensionError("operator dimension mismatch");
    return DensityMatrix::normalized(u * elements_ * u.adjoint());
}

QuadraturePoint::QuadraturePoint(double theta_rad, double u_value) : theta(theta_rad), u(u_value) {
    if (!std::isfinite(theta_rad) || !std::isfinite(u_value)) throw ArgumentError("non-finite quadrature point");
    theta = std::fmod(theta_rad, two_pi);
    if (theta < 0.0) theta += two_pi;
    if (theta >= two_pi) theta = 0.0;
}

double WignerGrid::integral() const {
    if (x_axis.size() < 2 || p_axis.size() < 2) return 0.0;
    double dx = (x_axis.back() - x_axis.front()) / static_cast<double>(x_axis.size() - 1);
    double dp = (p_axis.back() - p_axis.front()) / static_cast<double>(p_axis.size() - 1);
    return values.sum() * dx * dp / 2.0;
}

double hermite(int n, double x) {
    if (n < 0) throw ArgumentError("Hermite order must be nonnegative");
    if (n == 0) return 1.0;
    double hm = 1.0;
    double h = 2.0 * x;
    for (int k = 1; k < n; ++k) {
        double hp = 2.0 * x * h - 2.0 * k * hm;
        hm = h;
        h = hp;
    }
    return h;
}

RVector hermite_functions(int n_max, double u) {
    if (n_max < 0) throw ArgumentError("n_max must be nonnegative");
    RVector psi(n_max + 1);
    psi(0) = std::pow(two_pi, -0.25) * std::exp(-u * u / 4.0);
    if (n_max >= 1) psi(1) = u * psi(0);
    for (int k = 1; k < n_max; ++k) {
        psi(k + 1) = (u * psi(k) - std::sqrt(static_cast<double>(k)) * psi(k - 1)) / std::sqrt(k + 1.0);
    }
    return psi;
}

CVector quadrature_overlaps_u(int n_max, const QuadraturePoint& q) {
    RVector psi = hermite_functions(n_max, q.u);
    CVector out(n_max + 1);
    // iⁿ e^{+inθ}: the phase for which θ = ωt reproduces forward harmonic evolution.
    for (int n = 0; n <= n_max; ++n) {
        double phase = n * (q.theta + constants::pi / 2.0);
        out(n) = std::polar(psi(n), phase);
    }
    return out;
}

cplx quadrature_overlap(int n, const QuadraturePoint& q, const OscillatorSpec& spec) {
    if (n < 0 || n > spec.n_max()) throw ArgumentError("Fock index outside the truncated basis");
    return quadrature_overlaps_u(n, q)(n) / std::sqrt(spec.p0());
}

double fock_momentum_density_2d(int n_x, double p_x, double p_y, double p0x, double p0y) {
    if (!(p0x > 0.0) || !(p0y > 0.0)) throw ArgumentError("characteristic momenta must be positive");
    double ux = p_x / p0x;
    double uy = p_y / p0y;
    double g = std::exp(-0.5 * (ux * ux + uy * uy)) / (two_pi * p0x * p0y);
    switch (n_x) {
        case 0: return g;
        case 1: return ux * ux * g;
        case 2: {
            double s = ux * ux - 1.0;
            return 0.5 * s * s * g;
        }
        default: throw UnsupportedStateError("closed-form momentum densities exist only for n_x in {0,1,2}");
    }
}

CMatrix annihilation(int dim) {
    CMatrix a = CMatrix::Zero(dim, dim);
    for (int n = 1; n < dim; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
    return a;
}

CMatrix position_operator(int dim) {
    CMatrix a = annihilation(dim);
    return a + a.adjoint();
}

CMatrix momentum_operator(int dim) {
    CMatrix a = annihilation(dim);
    return cplx(0.0, 1.0) * (a.adjoint() - a);
}

CMatrix number_phase(int dim, double delta) {
    CVector d(dim);
    for (int n = 0; n < dim; ++n) d(n) = std::polar(1.0, -delta * n);
    return d.asDiagonal();
}

double displacement_leakage(double alpha, int n_max) {
    double mean = alpha * alpha;
    if (mean == 0.0) return 0.0;
    double kept = 0.0;
    for (int n = 0; n <= n_max; ++n) {
        kept += std::exp(-mean + n * std::log(mean) - std::lgamma(n + 1.0));
    }
    return std::max(0.0, 1.0 - kept);
}

CMatrix displacement_matrix(double x_i, const OscillatorSpec& spec) {
    double alpha = x_i / (2.0 * spec.x0());
    if (std::abs(alpha) > spec.n_max() / 4.0) {
        double leak = displacement_leakage(alpha, spec.n_max());
        std::ostringstream os;
        os << "displacement |x_i|/(2 x0) = " << std::abs(alpha) << " exceeds n_max/4; estimated leakage "
           << leak;
        throw TruncationError(os.str(), leak);
    }
    int d = spec.dim();
    CMatrix a = annihilation(d);
    // exp(α(a† − a)) = exp(−i K) with K = iα(a† − a) Hermitian.
    CMatrix k = cplx(0.0, alpha) * (a.adjoint() - a);
    return unitary_exp(k, 1.0);
}

double squeeze_parameter(double depth_ratio) {
    if (!(depth_ratio > 0.0) || !std::isfinite(depth_ratio)) throw ArgumentError("depth ratio must be positive");
    return 0.25 * std::log(depth_ratio);
}

CMatrix squeeze_from_depth_jump(double depth_ratio, const OscillatorSpec& spec) {
    double r = squeeze_parameter(depth_ratio);
    int d = spec.dim();
    CMatrix a = annihilation(d);
    CMatrix a2 = a * a;
    CMatrix k = cplx(0.0, r / 2.0) * (a2.adjoint() - a2);
    return unitary_exp(k, 1.0);
}

double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
    require_same_dim(a, b);
    Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitize(a.matrix() - b.matrix()), Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

double fidelity(const DensityMatrix& a, const DensityMatrix& b) {
    require_same_dim(a, b);
    CMatrix s = psd_sqrt(a.matrix());
    Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitize(s * b.matrix() * s), Eigen::EigenvaluesOnly);
    double t = 0.0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) t += std::sqrt(std::max(es.eigenvalues()(i), 0.0));
    return std::clamp(t * t, 0.0, 1.0);
}

std::vector<double> linspace(double a, double b, int n) {
    if (n < 1) throw ArgumentError("linspace needs at least one point");
    std::vector<double> v(n);
    if (n == 1) {
        v[0] = a;
        return v;
    }
    double h = (b - a) / (n - 1);
    for (int i = 0; i < n; ++i) v[i] = a + h * i;
    v[n - 1] = b;
    return v;
}

namespace {

cplx wigner_sum(const CMatrix& rho, double x, double p) {
    const int d = static_cast<int>(rho.rows());
    double r2 = x * x + p * p;
    double r = std::sqrt(r2);
    double phi = std::atan2(p, x);
    double log_r = r > 0.0 ? std::log(r) : -std::numeric_limits<double>::infinity();
    cplx total = 0.0;
    for (int delta = 0; delta < d; ++delta) {
        if (delta > 0 && r == 0.0) break;
        // e^{-r²/2} r^Δ / √Δ!, then × √((k)/(k+Δ)) per step in k
        double c = std::exp(-0.5 * r2 + (delta > 0 ? delta * log_r : 0.0) - 0.5 * std::lgamma(delta + 1.0));
        double lm = 0.0;
        double l = 1.0;
        cplx acc = 0.0;
        for (int k = 0; k + delta < d; ++k) {
            if (k == 1) {
                lm = 1.0;
                l = 1.0 + delta - r2;
            } else if (k > 1) {
                double ln = ((2.0 * (k - 1) + 1.0 + delta - r2) * l - (k - 1.0 + delta) * lm) / k;
                lm = l;
                l = ln;
            }
            if (k > 0) c *= std::sqrt(static_cast<double>(k) / (k + delta));
            double f = ((k % 2) ? -1.0 : 1.0) * c * l;
            if (delta == 0) {
                acc += rho(k, k) * f;
            } else {
                acc += f * (rho(k + delta, k) * std::polar(1.0, -phi * delta) +
                            rho(k, k + delta) * std::polar(1.0, phi * delta));
            }
        }
        total += acc;
    }
    return total / constants::pi;
}

}  // namespace

double wigner_at(const DensityMatrix& rho, double x, double p) {
    return wigner_sum(rho.matrix(), x, p).real();
}

WignerGrid wigner(const DensityMatrix& rho, const std::vector<double>& x_axis, const std::vector<double>& p_axis) {
    auto check_axis = [](const std::vector<double>& ax, const char* name) {
        if (ax.empty()) throw ArgumentError(std::string(name) + " is empty");
        for (std::size_t i = 0; i < ax.size(); ++i) {
            if (!std::isfinite(ax[i])) throw ArgumentError(std::string(name) + " has non-finite entries");
            if (i > 0 && !(ax[i] > ax[i - 1])) throw ArgumentError(std::string(name) + " is not increasing");
        }
    };
    check_axis(x_axis, "x_axis");
    check_axis(p_axis, "p_axis");
    WignerGrid g;
    g.x_axis = x_axis;
    g.p_axis = p_axis;
    g.values.resize(static_cast<Eigen::Index>(p_axis.size()), static_cast<Eigen::Index>(x_axis.size()));
    double imag = 0.0;
    for (std::size_t ip = 0; ip < p_axis.size(); ++ip) {
        for (std::size_t ix = 0; ix < x_axis.size(); ++ix) {
            cplx w = wigner_sum(rho.matrix(), x_axis[ix], p_axis[ip]);
            g.values(ip, ix) = w.real();
            imag = std::max(imag, std::abs(w.imag()));
        }
    }
    g.max_imag_residue = imag;
    return g;
}

Negativity negativity(const WignerGrid& w) {
    Eigen::Index ip = 0;
    Eigen::Index ix = 0;
    double v = w.values.minCoeff(&ip, &ix);
    return {v, v < 0.0, w.x_axis[ix], w.p_axis[ip]};
}

Negativity wigner_minimum(const DensityMatrix& rho, double extent, int points) {
    auto axis = linspace(-extent, extent, points);
    Negativity best = negativity(wigner(rho, axis, axis));
    double step = points > 1 ? 2.0 * extent / (points - 1) : extent;
    double x = best.x;
    double p = best.p;
    double v = best.value;
    const double dirs[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
    while (step > 1e-7) {
        bool moved = false;
        for (const auto& d : dirs) {
            double xn = x + step * d[0];
            double pn = p + step * d[1];
            double vn = wigner_at(rho, xn, pn);
            if (vn < v) {
                x = xn;
                p = pn;
                v = vn;
                moved = true;
                break;
            }
        }
        if (!moved) step /= 2.0;
    }
    return {v, v < 0.0, x, p};
}

}  // namespace toftomo
