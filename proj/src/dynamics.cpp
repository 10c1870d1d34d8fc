#include "toftomo/dynamics.hpp"

#include <cmath>
#include <cstring>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <sstream>
#include <tuple>

#include "toftomo/constants.hpp"
#include "toftomo/errors.hpp"
#include "toftomo/log.hpp"

namespace toftomo {

TrapModel::TrapModel(OscillatorSpec spec, double lambda) : TrapModel(spec, lambda, lambda < 0.0) {}

TrapModel::TrapModel(OscillatorSpec spec, double lambda, bool include_sextic)
    : spec_(spec), lambda_(lambda), include_sextic_(include_sextic) {
    if (!std::isfinite(lambda) || std::abs(lambda) >= 0.1) {
        throw ArgumentError("trap.lambda must satisfy |lambda| < 0.1");
    }
    if (lambda < 0.0 && !include_sextic) throw ArgumentError("negative lambda requires the sextic stabilizer");
}

MixtureSpec::MixtureSpec(double p0, double p1, double p2) : p_{p0, p1, p2} {
    for (double p : p_) {
        if (!std::isfinite(p) || p < 0.0) throw ArgumentError("mixture populations must be nonnegative");
    }
    if (std::abs(p0 + p1 + p2 - 1.0) > 1e-10) throw ArgumentError("mixture populations must sum to 1");
}

CMatrix build_hamiltonian(const TrapModel& model) {
    const int d = model.spec().dim();
    const int big = d + 4;
    CMatrix x = position_operator(big);
    CMatrix x2 = x * x;
    CMatrix x4 = x2 * x2;
    CMatrix h = CMatrix::Zero(d, d);
    for (int n = 0; n < d; ++n) h(n, n) = n + 0.5;
    double lam = model.lambda();
    if (lam != 0.0) h += lam * x4.topLeftCorner(d, d);
    if (model.include_sextic()) {
        CMatrix x6 = x4 * x2;
        h += (2.0 * lam * lam / 3.0) * x6.topLeftCorner(d, d);
    }
    return hermitize(h);
}

namespace {

struct CacheKey {
    std::uint64_t lambda_bits;
    bool sextic;
    int dim;
    bool operator<(const CacheKey& o) const {
        return std::tie(lambda_bits, sextic, dim) < std::tie(o.lambda_bits, o.sextic, o.dim);
    }
};

class EigenCache {
public:
    std::shared_ptr<const Eigensystem> get(const TrapModel& model) {
        CacheKey key{};
        double lam = model.lambda();
        std::memcpy(&key.lambda_bits, &lam, sizeof lam);
        key.sextic = model.include_sextic();
        key.dim = model.spec().dim();
        {
            std::shared_lock lock(mutex_);
            auto it = map_.find(key);
            if (it != map_.end()) return it->second;
        }
        auto es = compute(model);
        std::unique_lock lock(mutex_);
        if (map_.size() >= max_entries) map_.clear();
        return map_.emplace(key, es).first->second;
    }

private:
    static constexpr std::size_t max_entries = 4096;

    static std::shared_ptr<const Eigensystem> compute(const TrapModel& model) {
        Eigen::SelfAdjointEigenSolver<CMatrix> solver(build_hamiltonian(model));
        auto es = std::make_shared<Eigensystem>();
        es->energies = solver.eigenvalues();
        es->vectors = solver.eigenvectors();
        const int d = static_cast<int>(es->energies.size());
        es->fock_label.resize(d);
        for (int n = 0; n < d; ++n) {
            Eigen::Index j = 0;
            es->vectors.row(n).cwiseAbs2().maxCoeff(&j);
            es->fock_label[n] = static_cast<int>(j);
        }
        return es;
    }

    std::shared_mutex mutex_;
    std::map<CacheKey, std::shared_ptr<const Eigensystem>> map_;
};

EigenCache& cache() {
    static EigenCache c;
    return c;
}

}  // namespace

std::shared_ptr<const Eigensystem> eigensystem(const TrapModel& model) {
    return cache().get(model);
}

double buffer_population(const DensityMatrix& rho) {
    const int d = rho.dim();
    const int start = d - static_cast<int>(std::ceil(0.2 * d));
    double s = 0.0;
    for (int n = start; n < d; ++n) s += rho.matrix()(n, n).real();
    return s;
}

namespace {

CMatrix propagator(const Eigensystem& es, double phase_time) {
    CVector ph(es.energies.size());
    for (Eigen::Index j = 0; j < ph.size(); ++j) ph(j) = std::polar(1.0, -es.energies(j) * phase_time);
    return es.vectors * ph.asDiagonal() * es.vectors.adjoint();
}

}  // namespace

EvolutionResult evolve(const DensityMatrix& rho, const TrapModel& model, double t_e) {
    if (rho.dim() != model.spec().dim()) throw DimensionError("state and trap model use different truncations");
    if (!std::isfinite(t_e)) throw ArgumentError("evolution time must be finite");
    auto es = eigensystem(model);
    double wt = model.spec().omega() * t_e;
    CMatrix u = propagator(*es, wt);
    DensityMatrix out(hermitize(u * rho.matrix() * u.adjoint()), 1e-9);
    double buf = buffer_population(out);
    if (buf > 1e-4) {
        std::ostringstream os;
        os << "evolved state has " << buf << " population in the truncation buffer";
        warn(os.str());
    }
    double theta = std::fmod(wt, 2.0 * constants::pi);
    if (theta < 0.0) theta += 2.0 * constants::pi;
    return {std::move(out), t_e, theta, buf};
}

std::vector<double> quadrature_distribution(const DensityMatrix& rho, double theta, const std::vector<double>& u_grid,
                                            const OscillatorSpec& spec) {
    if (rho.dim() != spec.dim()) throw DimensionError("state and oscillator spec use different truncations");
    const int n_max = rho.n_max();
    std::vector<double> out(u_grid.size());
    for (std::size_t i = 0; i < u_grid.size(); ++i) {
        CVector o = quadrature_overlaps_u(n_max, QuadraturePoint(theta, u_grid[i]));
        double p = o.dot(rho.matrix() * o).real();
        out[i] = std::max(p, 0.0);
    }
    return out;
}

std::vector<double> momentum_expectation_trace(const DensityMatrix& rho0, const TrapModel& model,
                                               const std::vector<double>& times) {
    if (rho0.dim() != model.spec().dim()) throw DimensionError("state and trap model use different truncations");
    auto es = eigensystem(model);
    const CMatrix& v = es->vectors;
    CMatrix rt = v.adjoint() * rho0.matrix() * v;
    CMatrix pt = v.adjoint() * momentum_operator(rho0.dim()) * v;
    // ⟨p⟩(t) = p0 Σ_jk ρ̃_jk e^{-i(E_j − E_k)ωt} P̃_kj
    CMatrix w = rt.cwiseProduct(pt.transpose());
    const Eigen::Index d = v.rows();
    std::vector<double> out(times.size());
    CVector ph(d);
    for (std::size_t i = 0; i < times.size(); ++i) {
        double wt = model.spec().omega() * times[i];
        for (Eigen::Index j = 0; j < d; ++j) ph(j) = std::polar(1.0, -es->energies(j) * wt);
        cplx s = ph.transpose() * w * ph.conjugate();
        out[i] = model.spec().p0() * s.real();
    }
    return out;
}

TrapModel rescale_depth(const TrapModel& model, double depth_ratio) {
    if (!(depth_ratio > 0.0) || !std::isfinite(depth_ratio)) throw ArgumentError("depth ratio must be positive");
    double s = std::sqrt(depth_ratio);
    return TrapModel(model.spec().with_omega(model.spec().omega() * s), model.lambda() / s);
}

DensityMatrix eigen_mixture(const MixtureSpec& mix, const TrapModel& model) {
    const int d = model.spec().dim();
    if (d < 3) throw DimensionError("mixtures need at least three basis states");
    const auto& p = mix.populations();
    if (model.lambda() == 0.0) return DensityMatrix::diagonal({p[0], p[1], p[2]}, d);
    auto es = eigensystem(model);
    CMatrix rho = CMatrix::Zero(d, d);
    for (int n = 0; n < 3; ++n) {
        CVector v = es->vectors.col(es->fock_label[n]);
        rho += p[n] * (v * v.adjoint());
    }
    return DensityMatrix::normalized(rho);
}

DensityMatrix prepare_state(const MixtureSpec& mix, const TrapModel& model, double x_i, double depth_jump_ratio) {
    if (!(depth_jump_ratio > 0.0)) throw ArgumentError("depth_jump_ratio must be positive");
    TrapModel before = depth_jump_ratio == 1.0 ? model : rescale_depth(model, 1.0 / depth_jump_ratio);
    DensityMatrix rho = eigen_mixture(mix, before);
    if (depth_jump_ratio != 1.0) rho = rho.transformed(squeeze_from_depth_jump(depth_jump_ratio, model.spec()));
    if (x_i != 0.0) rho = rho.transformed(displacement_matrix(x_i, model.spec()));
    return rho;
}

}  // namespace toftomo
