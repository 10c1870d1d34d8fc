#include "toftomo/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <numeric>
#include <sstream>

#include <ceres/ceres.h>

#include "toftomo/errors.hpp"
#include "toftomo/stats.hpp"

namespace toftomo {

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

struct CostFunctor {
    const std::vector<ParamSpec>* specs;
    const ResidualFunction* fn;
    int n;

    bool operator()(double const* const* z, double* r) const {
        std::vector<double> v(specs->size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = z[i][0] * (*specs)[i].scale;
        std::vector<double> res(static_cast<std::size_t>(n), 0.0);
        (*fn)(v, res);
        for (int i = 0; i < n; ++i) {
            if (!std::isfinite(res[i])) return false;
            r[i] = res[i];
        }
        return true;
    }
};

std::vector<double> eval(const ResidualFunction& fn, const std::vector<double>& v, int n) {
    std::vector<double> r(static_cast<std::size_t>(n), 0.0);
    fn(v, r);
    return r;
}

double sum_sq(const std::vector<double>& r) {
    double s = 0.0;
    for (double x : r) s += x * x;
    return s;
}

// Symmetric pseudo-inverse; eigenvalues below rel·max are dropped.
RMatrix pinv_sym(const RMatrix& a, bool& singular, double rel = 1e-12) {
    Eigen::SelfAdjointEigenSolver<RMatrix> es(0.5 * (a + a.transpose()));
    RVector ev = es.eigenvalues();
    double top = ev.cwiseAbs().maxCoeff();
    singular = false;
    RVector inv(ev.size());
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (ev(i) > rel * top && top > 0.0) {
            inv(i) = 1.0 / ev(i);
        } else {
            inv(i) = 0.0;
            singular = true;
        }
    }
    return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

double periodogram_peak(const TimeSeries& s, const std::vector<double>& yc) {
    double span = s.t.back() - s.t.front();
    std::vector<double> dt;
    for (std::size_t i = 1; i < s.t.size(); ++i) dt.push_back(s.t[i] - s.t[i - 1]);
    std::sort(dt.begin(), dt.end());
    double f_hi = 0.5 / dt[dt.size() / 2];
    double f_lo = 0.5 / span;
    auto power = [&](double f) {
        std::complex<double> acc = 0.0;
        for (std::size_t i = 0; i < yc.size(); ++i) acc += yc[i] * std::polar(1.0, -2.0 * constants::pi * f * s.t[i]);
        return std::norm(acc);
    };
    double step = 1.0 / (8.0 * span);
    double best_f = f_lo, best_p = -1.0;
    for (double f = f_lo; f <= f_hi; f += step) {
        double p = power(f);
        if (p > best_p) {
            best_p = p;
            best_f = f;
        }
    }
    double fine = step / 50.0;
    double centre = best_f;
    for (double f = centre - step; f <= centre + step; f += fine) {
        if (f <= 0.0) continue;
        double p = power(f);
        if (p > best_p) {
            best_p = p;
            best_f = f;
        }
    }
    return best_f;
}

}  // namespace

void TimeSeries::validate() const {
    if (t.size() != y.size()) throw DataError("time series columns differ in length");
    if (!y_err.empty() && y_err.size() != t.size()) throw DataError("time series error column has the wrong length");
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!std::isfinite(t[i]) || !std::isfinite(y[i])) throw DataError("time series has non-finite values");
        if (i > 0 && !(t[i] > t[i - 1])) throw DataError("time series times must be strictly increasing");
        if (!y_err.empty() && !(y_err[i] > 0.0)) throw DataError("time series errors must be positive");
    }
}

double FitResult::value(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return values[i];
    for (std::size_t i = 0; i < derived_names.size(); ++i)
        if (derived_names[i] == name) return derived_values[i];
    throw ArgumentError("fit has no parameter '" + name + "'");
}

double FitResult::error(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return errors[i];
    for (std::size_t i = 0; i < derived_names.size(); ++i)
        if (derived_names[i] == name) return derived_errors[i];
    throw ArgumentError("fit has no parameter '" + name + "'");
}

FitResult least_squares(const std::vector<ParamSpec>& params, int n_residuals, const ResidualFunction& residuals,
                        bool absolute_errors) {
    const int np = static_cast<int>(params.size());
    if (np == 0) throw ArgumentError("no parameters to fit");
    for (const auto& p : params) {
        if (!(p.scale > 0.0)) throw ArgumentError("parameter scale must be positive for " + p.name);
        if (p.lower > p.upper) throw ArgumentError("empty bounds for " + p.name);
    }
    std::vector<double> z(np);
    for (int i = 0; i < np; ++i) z[i] = std::clamp(params[i].initial, params[i].lower, params[i].upper) / params[i].scale;

    ceres::Problem problem;
    auto* cost = new ceres::DynamicNumericDiffCostFunction<CostFunctor, ceres::CENTRAL>(
        new CostFunctor{&params, &residuals, n_residuals});
    std::vector<double*> blocks;
    for (int i = 0; i < np; ++i) {
        cost->AddParameterBlock(1);
        blocks.push_back(&z[i]);
    }
    cost->SetNumResiduals(n_residuals);
    problem.AddResidualBlock(cost, nullptr, blocks);
    int free = 0;
    for (int i = 0; i < np; ++i) {
        if (params[i].fixed) {
            problem.SetParameterBlockConstant(blocks[i]);
            continue;
        }
        ++free;
        if (std::isfinite(params[i].lower)) problem.SetParameterLowerBound(blocks[i], 0, params[i].lower / params[i].scale);
        if (std::isfinite(params[i].upper)) problem.SetParameterUpperBound(blocks[i], 0, params[i].upper / params[i].scale);
    }
    if (n_residuals < free) throw DataError("fewer data points than free parameters");

    ceres::Solver::Options opt;
    opt.linear_solver_type = ceres::DENSE_QR;
    opt.trust_region_strategy_type = ceres::LEVENBERG_MARQUARDT;
    opt.max_num_iterations = 500;
    opt.function_tolerance = 1e-15;
    opt.gradient_tolerance = 1e-16;
    opt.parameter_tolerance = 1e-14;
    opt.num_threads = 1;
    opt.logging_type = ceres::SILENT;
    opt.minimizer_progress_to_stdout = false;
    ceres::Solver::Summary summary;
    if (free > 0) ceres::Solve(opt, &problem, &summary);

    FitResult out;
    std::vector<double> v(np);
    for (int i = 0; i < np; ++i) {
        v[i] = z[i] * params[i].scale;
        out.names.push_back(params[i].name);
    }
    out.values = v;
    auto r0 = eval(residuals, v, n_residuals);
    double rss = sum_sq(r0);
    out.residual_norm = std::sqrt(rss);
    out.converged = free == 0 || summary.termination_type == ceres::CONVERGENCE;
    out.message = free == 0 ? "all parameters fixed" : summary.message;

    // central-difference Jacobian in scaled coordinates
    std::vector<int> idx;
    for (int i = 0; i < np; ++i)
        if (!params[i].fixed) idx.push_back(i);
    RMatrix jac(n_residuals, static_cast<Eigen::Index>(idx.size()));
    for (std::size_t c = 0; c < idx.size(); ++c) {
        int i = idx[c];
        double h = 1e-6 * std::max(1.0, std::abs(z[i]));
        auto vp = v, vm = v;
        vp[i] = (z[i] + h) * params[i].scale;
        vm[i] = (z[i] - h) * params[i].scale;
        auto rp = eval(residuals, vp, n_residuals);
        auto rm = eval(residuals, vm, n_residuals);
        for (int k = 0; k < n_residuals; ++k) jac(k, static_cast<Eigen::Index>(c)) = (rp[k] - rm[k]) / (2.0 * h);
    }
    out.covariance = RMatrix::Zero(np, np);
    out.errors.assign(np, 0.0);
    if (!idx.empty()) {
        bool singular = false;
        RMatrix cz = pinv_sym(jac.transpose() * jac, singular);
        int dof = n_residuals - static_cast<int>(idx.size());
        double s2 = absolute_errors ? 1.0 : (dof > 0 ? rss / dof : nan);
        cz *= s2;
        for (std::size_t a = 0; a < idx.size(); ++a)
            for (std::size_t b = 0; b < idx.size(); ++b)
                out.covariance(idx[a], idx[b]) =
                    cz(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) * params[idx[a]].scale * params[idx[b]].scale;
        for (int i : idx) out.errors[i] = std::sqrt(std::max(0.0, out.covariance(i, i)));
        if (singular) {
            out.message += "; covariance is rank deficient";
            for (int i : idx) out.errors[i] = nan;
        }
    }
    return out;
}

FitResult fit_damped_sinusoid(const TimeSeries& series) {
    series.validate();
    const int n = static_cast<int>(series.size());
    if (n < 6) throw DataError("damped sinusoid fit needs at least 6 points");
    double c0 = stats::mean(series.y);
    std::vector<double> yc(series.y.size());
    for (std::size_t i = 0; i < yc.size(); ++i) yc[i] = series.y[i] - c0;
    double spread = stats::stddev(series.y);
    const double span = series.t.back() - series.t.front();

    std::vector<std::string> names{"amplitude", "frequency_hz", "phase_rad", "decay_rate_per_s", "offset"};
    if (!(spread > 1e-12 * std::max(1.0, std::abs(c0)))) {
        FitResult r;
        r.names = names;
        r.values = {0.0, nan, nan, nan, c0};
        r.errors = {nan, nan, nan, nan, 0.0};
        r.covariance = RMatrix::Constant(5, 5, nan);
        r.converged = false;
        r.message = "series has no oscillating component; frequency is unidentifiable";
        r.derived_names = {"decay_time_s", "omega_rad_per_s"};
        r.derived_values = {nan, nan};
        r.derived_errors = {nan, nan};
        return r;
    }

    double f0 = periodogram_peak(series, yc);
    const auto& y_err = series.y_err;
    auto weight = [&](std::size_t i) { return y_err.empty() ? 1.0 : 1.0 / y_err[i]; };

    // linear solve for (a, b, c) at fixed (f, k) picks the decay seed
    double best_rss = std::numeric_limits<double>::infinity();
    double a0 = 0, b0 = 0, k0 = 0, cc = c0;
    for (double k : {0.0, 0.25 / span, 0.5 / span, 1.0 / span, 2.0 / span, 4.0 / span, 8.0 / span}) {
        RMatrix m(n, 3);
        RVector rhs(n);
        for (int i = 0; i < n; ++i) {
            double e = std::exp(-k * series.t[i]);
            double ph = 2.0 * constants::pi * f0 * series.t[i];
            double w = weight(i);
            m(i, 0) = w * e * std::cos(ph);
            m(i, 1) = w * e * std::sin(ph);
            m(i, 2) = w;
            rhs(i) = w * series.y[i];
        }
        RVector sol = m.colPivHouseholderQr().solve(rhs);
        double rss = (m * sol - rhs).squaredNorm();
        if (rss < best_rss) {
            best_rss = rss;
            a0 = sol(0);
            b0 = sol(1);
            cc = sol(2);
            k0 = k;
        }
    }
    double amp0 = std::hypot(a0, b0);
    double phi0 = std::atan2(-b0, a0);

    std::vector<ParamSpec> ps{
        {names[0], amp0, std::max(amp0, spread), 0.0},
        {names[1], f0, f0, 1e-6 * f0},
        {names[2], phi0, 1.0},
        {names[3], k0, 1.0 / span, 0.0},
        {names[4], cc, std::max(spread, std::abs(cc))},
    };
    ResidualFunction fn = [&](const std::vector<double>& p, std::vector<double>& r) {
        for (int i = 0; i < n; ++i) {
            double t = series.t[i];
            double model = p[0] * std::exp(-p[3] * t) * std::cos(2.0 * constants::pi * p[1] * t + p[2]) + p[4];
            r[i] = (model - series.y[i]) * weight(i);
        }
    };
    FitResult res = least_squares(ps, n, fn, !y_err.empty());
    // fold the phase into (−π, π]
    res.values[2] = std::remainder(res.values[2], 2.0 * constants::pi);
    double k = res.values[3];
    double sk = res.errors[3];
    res.derived_names = {"decay_time_s", "omega_rad_per_s"};
    res.derived_values = {k > 0.0 ? 1.0 / k : std::numeric_limits<double>::infinity(),
                          2.0 * constants::pi * res.values[1]};
    res.derived_errors = {k > 0.0 ? sk / (k * k) : nan, 2.0 * constants::pi * res.errors[1]};
    if (res.values[0] <= 1e-9 * spread) {
        res.converged = false;
        res.message += "; amplitude collapsed to zero";
    }
    return res;
}

FitResult fit_ballistic(const TimeSeries& series, double mass) {
    series.validate();
    const int n = static_cast<int>(series.size());
    if (n < 3) throw DataError("ballistic fit needs at least 3 points");
    std::vector<double> t2(n), s2(n);
    for (int i = 0; i < n; ++i) {
        t2[i] = series.t[i] * series.t[i];
        s2[i] = series.y[i] * series.y[i];
    }
    auto line = stats::linear_regression(t2, s2);
    double e0 = std::max(0.0, line.slope * mass / 2.0);
    double sig0 = std::sqrt(std::max(0.0, line.intercept));
    double ymax = *std::max_element(series.y.begin(), series.y.end());
    double e_scale = constants::k_boltzmann * 1e-6;
    std::vector<ParamSpec> ps{{"e_ke_j", e0, e_scale, 0.0}, {"sigma0_m", sig0, std::max(ymax, 1e-12), 0.0}};
    const auto& y_err = series.y_err;
    ResidualFunction fn = [&](const std::vector<double>& p, std::vector<double>& r) {
        for (int i = 0; i < n; ++i) {
            double w = y_err.empty() ? 1.0 : 1.0 / y_err[i];
            r[i] = (ballistic_sigma(std::max(p[0], 0.0), series.t[i], std::max(p[1], 0.0), mass) - series.y[i]) * w;
        }
    };
    FitResult res = least_squares(ps, n, fn, !y_err.empty());
    res.derived_names = {"e_ke_microkelvin"};
    res.derived_values = {2.0 * res.values[0] / constants::k_boltzmann * 1e6};
    res.derived_errors = {2.0 * res.errors[0] / constants::k_boltzmann * 1e6};
    return res;
}

FitResult fit_gravity_drop(const TimeSeries& series, double g) {
    series.validate();
    const int n = static_cast<int>(series.size());
    if (n < 3) throw DataError("gravity fit needs at least 3 points");
    if (!(g > 0.0)) throw ArgumentError("gravity must be positive");
    std::vector<double> h(n);
    for (int i = 0; i < n; ++i) h[i] = 0.5 * series.t[i] * series.t[i];
    auto line = stats::linear_regression(h, series.y);
    double yscale = std::max(1e-12, *std::max_element(series.y.begin(), series.y.end(),
                                                       [](double a, double b) { return std::abs(a) < std::abs(b); }));
    std::vector<ParamSpec> ps{{"y0_m", line.intercept, std::abs(yscale)},
                              {"acceleration_m_per_s2", line.slope, std::max(std::abs(line.slope), g)}};
    const auto& y_err = series.y_err;
    ResidualFunction fn = [&](const std::vector<double>& p, std::vector<double>& r) {
        for (int i = 0; i < n; ++i) {
            double w = y_err.empty() ? 1.0 : 1.0 / y_err[i];
            r[i] = (p[0] + p[1] * h[i] - series.y[i]) * w;
        }
    };
    FitResult res = least_squares(ps, n, fn, !y_err.empty());
    res.derived_names = {"magnification"};
    res.derived_values = {res.values[1] / g};
    res.derived_errors = {res.errors[1] / g};
    return res;
}

FitResult fit_anharmonic_model(const TimeSeries& series, const OscillatorSpec& spec,
                               const AnharmonicFitOptions& options) {
    series.validate();
    const int n = static_cast<int>(series.size());
    if (n < 20) throw DataError("anharmonic fit needs at least 20 points");
    if (!(options.lambda_bound > 0.0 && options.lambda_bound < 0.1))
        throw ArgumentError("lambda bound must lie in (0, 0.1)");
    const double p_ref = spec.p0();
    double omega0 = options.omega_guess > 0.0 ? options.omega_guess : spec.omega();
    if (options.omega_guess <= 0.0) {
        std::vector<double> yc(series.y);
        double m = stats::mean(yc);
        for (double& v : yc) v -= m;
        double f = periodogram_peak(series, yc);
        if (f > 0.0 && std::abs(2.0 * constants::pi * f / spec.omega() - 1.0) < 0.5) omega0 = 2.0 * constants::pi * f;
    }
    double x_i0 = options.x_i_guess;
    if (x_i0 == 0.0) {
        double period = 2.0 * constants::pi / omega0;
        double amp = 0.0;
        for (int i = 0; i < n && series.t[i] - series.t[0] <= period; ++i) amp = std::max(amp, std::abs(series.y[i]));
        x_i0 = amp * p_ref / (spec.mass() * omega0);
        // ⟨p⟩ = −mωx_i sin ωt, so a positive first excursion means a negative displacement
        for (int i = 0; i < n; ++i) {
            if (std::abs(series.y[i]) > 0.2 * amp) {
                if (series.y[i] > 0.0) x_i0 = -x_i0;
                break;
            }
        }
    }
    std::vector<ParamSpec> ps{
        {"lambda", options.lambda, 0.01, -options.lambda_bound, options.lambda_bound, true},
        {"omega_rad_per_s", omega0, spec.omega(), 0.2 * spec.omega(), 5.0 * spec.omega()},
        {"x_i_m", x_i0, spec.x0()},
    };
    const auto& y_err = series.y_err;
    ResidualFunction fn = [&](const std::vector<double>& p, std::vector<double>& r) {
        TrapModel model(spec.with_omega(p[1]), p[0]);
        DensityMatrix rho0 = prepare_state(MixtureSpec(1.0, 0.0, 0.0), model, p[2], 1.0);
        auto trace = momentum_expectation_trace(rho0, model, series.t);
        for (int i = 0; i < n; ++i) {
            double w = y_err.empty() ? 1.0 : 1.0 / y_err[i];
            r[i] = (trace[i] / p_ref - series.y[i]) * w;
        }
    };
    // harmonic-shape stage pins ω and x_i before λ is released
    FitResult res = least_squares(ps, n, fn, !y_err.empty());
    if (!options.fix_lambda) {
        ps[0].fixed = false;
        ps[1].initial = res.values[1];
        ps[2].initial = res.values[2];
        res = least_squares(ps, n, fn, !y_err.empty());
    }
    double omega = res.values[1];
    res.derived_names = {"frequency_hz", "significance_ratio"};
    res.derived_values = {omega / (2.0 * constants::pi),
                          anharmonic_significance(res.values[0], res.values[2], spec.with_omega(omega))};
    res.derived_errors = {res.errors[1] / (2.0 * constants::pi), nan};
    return res;
}

double anharmonic_significance(double lambda, double x_i, const OscillatorSpec& spec) {
    DensityMatrix rho = prepare_state(MixtureSpec(1.0, 0.0, 0.0), TrapModel(spec), x_i, 1.0);
    const int d = rho.dim();
    // pad so that X⁴ is exact on the state's support
    CMatrix x = position_operator(d + 4).topLeftCorner(d + 4, d + 4);
    CMatrix x2 = x * x;
    CMatrix x4 = x2 * x2;
    double m2 = (rho.matrix() * x2.topLeftCorner(d, d)).trace().real();
    double m4 = (rho.matrix() * x4.topLeftCorner(d, d)).trace().real();
    return 4.0 * std::abs(lambda) * m4 / m2;
}

FitResult fit_fock_mixture(const ImageFrame& image, const PsfModel& psf, const OscillatorSpec& spec,
                           const ImagingGeometry& geometry) {
    image.validate();
    psf.validate();
    geometry.validate();
    const double total = image.counts.sum();
    if (!(total > 0.0)) throw DegenerateInputError("image has no positive total signal");
    const double p0 = spec.p0();
    ImageGrid grid{image.nx(), image.ny()};
    auto axis = [p0](int n) {
        return [n, p0](const std::vector<double>& p) {
            std::vector<double> out(p.size());
            for (std::size_t i = 0; i < p.size(); ++i) {
                double h = hermite_functions(n, p[i] / p0)(n);
                out[i] = h * h / p0;
            }
            return out;
        };
    };
    const Eigen::Index m = image.counts.size();
    RMatrix basis(m, 3);
    for (int n = 0; n < 3; ++n) {
        AxisDensity fy = axis(0);
        if (grid.ny == 1) {
            // profile frames are already integrated vertically
            double dp = spec.mass() * geometry.atom_plane_pitch() / geometry.flight_time;
            fy = [dp](const std::vector<double>& p) { return std::vector<double>(p.size(), 1.0 / dp); };
        }
        ImageFrame f = momentum_to_image_separable(axis(n), fy, geometry, spec, grid, 1.0);
        f = convolve_psf(f, psf);
        basis.col(n) = Eigen::Map<const RVector>(f.counts.data(), m);
    }
    RVector b = Eigen::Map<const RVector>(image.counts.data(), m) / total;

    // exact convex QP over the faces of {P ≥ 0, ΣP ≤ 1}
    double best = std::numeric_limits<double>::infinity();
    RVector best_p = RVector::Zero(3);
    std::vector<int> best_free;
    bool best_sum = false;
    for (int mask = 0; mask < 8; ++mask) {
        std::vector<int> fr;
        for (int i = 0; i < 3; ++i)
            if (mask & (1 << i)) fr.push_back(i);
        for (int sum_active = 0; sum_active < 2; ++sum_active) {
            if (fr.empty() && sum_active) continue;
            const int k = static_cast<int>(fr.size());
            RVector p = RVector::Zero(3);
            if (k > 0) {
                RMatrix a(m, k);
                for (int c = 0; c < k; ++c) a.col(c) = basis.col(fr[c]);
                RMatrix h = a.transpose() * a;
                RVector g = a.transpose() * b;
                RVector sol;
                if (sum_active) {
                    RMatrix kkt = RMatrix::Zero(k + 1, k + 1);
                    kkt.topLeftCorner(k, k) = h;
                    kkt.block(0, k, k, 1).setOnes();
                    kkt.block(k, 0, 1, k).setOnes();
                    RVector rhs(k + 1);
                    rhs.head(k) = g;
                    rhs(k) = 1.0;
                    sol = kkt.fullPivLu().solve(rhs).head(k);
                } else {
                    sol = h.fullPivLu().solve(g);
                }
                for (int c = 0; c < k; ++c) p(fr[c]) = sol(c);
            }
            if (p.minCoeff() < -1e-12 || p.sum() > 1.0 + 1e-12 || !p.allFinite()) continue;
            double rss = (basis * p - b).squaredNorm();
            if (rss < best) {
                best = rss;
                best_p = p.cwiseMax(0.0);
                best_free = fr;
                best_sum = sum_active;
            }
        }
    }
    FitResult res;
    res.names = {"p0", "p1", "p2"};
    res.values = {best_p(0), best_p(1), best_p(2)};
    res.errors.assign(3, 0.0);
    res.covariance = RMatrix::Zero(3, 3);
    res.residual_norm = std::sqrt(best) * total;
    res.converged = true;
    res.message = "active-set least squares";
    const int k = static_cast<int>(best_free.size());
    const int dof = static_cast<int>(m) - k + (best_sum ? 1 : 0);
    if (k > 0 && dof > 0) {
        RMatrix a(m, k);
        for (int c = 0; c < k; ++c) a.col(c) = basis.col(best_free[c]);
        RMatrix h = a.transpose() * a;
        RMatrix z = RMatrix::Identity(k, k);
        if (best_sum) {
            // directions that keep ΣP fixed
            Eigen::FullPivLU<RMatrix> lu(RMatrix::Ones(1, k));
            z = lu.kernel();
        }
        bool singular = false;
        RMatrix cz = z * pinv_sym(z.transpose() * h * z, singular) * z.transpose();
        cz *= best / dof;
        for (int a1 = 0; a1 < k; ++a1)
            for (int b1 = 0; b1 < k; ++b1) res.covariance(best_free[a1], best_free[b1]) = cz(a1, b1);
        for (int i = 0; i < 3; ++i) res.errors[i] = std::sqrt(std::max(0.0, res.covariance(i, i)));
    }
    res.derived_names = {"unmodeled"};
    res.derived_values = {std::max(0.0, 1.0 - best_p.sum())};
    res.derived_errors = {std::sqrt(std::max(0.0, res.covariance.sum()))};
    return res;
}

double profile_mean(const BinnedQuadrature& q) {
    double s = 0.0, m = 0.0;
    for (std::size_t i = 0; i < q.u.size(); ++i) {
        s += q.weights[i];
        m += q.weights[i] * q.u[i];
    }
    if (!(s > 0.0)) throw DegenerateInputError("profile has no weight");
    return m / s;
}

double profile_gaussian_center(const BinnedQuadrature& q) {
    const int n = static_cast<int>(q.u.size());
    double c = profile_mean(q);
    double v = 0.0, peak = 0.0;
    for (int i = 0; i < n; ++i) {
        v += q.weights[i] * (q.u[i] - c) * (q.u[i] - c);
        peak = std::max(peak, q.weights[i]);
    }
    double s = std::sqrt(std::max(v, 1e-6));
    std::vector<ParamSpec> ps{{"height", peak, std::max(peak, 1e-12), 0.0}, {"center", c, 1.0}, {"width", s, 1.0, 1e-6}};
    ResidualFunction fn = [&](const std::vector<double>& p, std::vector<double>& r) {
        for (int i = 0; i < n; ++i) {
            double d = (q.u[i] - p[1]) / p[2];
            r[i] = p[0] * std::exp(-0.5 * d * d) - q.weights[i];
        }
    };
    return least_squares(ps, n, fn).values[1];
}

}  // namespace toftomo
