#include "toftomo/mle.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <tuple>

#include "toftomo/errors.hpp"
#include "toftomo/imaging.hpp"
#include "toftomo/log.hpp"

namespace toftomo {

bool QuadratureRecord::operator<(const QuadratureRecord& o) const {
    return std::tie(theta, u, weight) < std::tie(o.theta, o.u, o.weight);
}

QuadratureDataset::QuadratureDataset(std::vector<QuadratureRecord> records, double bin_width)
    : records_(std::move(records)), bin_width_(bin_width) {
    if (records_.empty()) throw DataError("quadrature dataset is empty");
    if (!(bin_width_ > 0.0) || !std::isfinite(bin_width_)) throw DataError("bin width must be positive");
    double total = 0.0;
    for (const auto& r : records_) {
        if (!std::isfinite(r.theta) || !std::isfinite(r.u)) throw DataError("non-finite quadrature coordinate");
        if (!std::isfinite(r.weight) || r.weight < 0.0) throw DataError("quadrature weights must be finite and >= 0");
        total += r.weight;
    }
    if (!(total > 0.0)) throw DegenerateInputError("quadrature weights sum to zero");
    if (bin_width_ > 0.1 + 1e-12) {
        std::ostringstream os;
        os << "bin width " << bin_width_ << " exceeds 0.1 u; grid-centre projectors lose accuracy";
        warn_once("mle.bin_width", os.str());
    }
}

QuadratureDataset QuadratureDataset::from_binned(const std::vector<BinnedQuadrature>& per_angle) {
    if (per_angle.empty()) throw DataError("no quadrature distributions supplied");
    std::vector<QuadratureRecord> recs;
    double width = per_angle.front().bin_width;
    bool clamped = false;
    for (const auto& q : per_angle) {
        if (q.u.size() != q.weights.size()) throw DataError("quadrature u and weight lengths differ");
        for (std::size_t i = 0; i < q.u.size(); ++i) recs.push_back({q.theta, q.u[i], q.weights[i]});
        clamped = clamped || q.clamped;
    }
    QuadratureDataset d(std::move(recs), width);
    d.set_clamped(clamped);
    return d;
}

int QuadratureDataset::distinct_angles() const {
    std::set<double> s;
    for (const auto& r : records_) s.insert(r.theta);
    return static_cast<int>(s.size());
}

void MleConfig::validate() const {
    if (n_max < 1) throw ArgumentError("mle.n_max must be at least 1");
    if (!(tolerance > 0.0)) throw ArgumentError("mle.tolerance must be positive");
    if (max_iterations < 1) throw ArgumentError("mle.max_iterations must be at least 1");
}

CMatrix projector(const QuadraturePoint& q, int n_max, const OscillatorSpec& spec) {
    if (n_max > spec.n_max()) throw DimensionError("projector truncation exceeds the oscillator spec");
    CVector o = quadrature_overlaps_u(n_max, q) / std::sqrt(spec.p0());
    return o * o.adjoint();
}

double predicted_probability(const DensityMatrix& rho, const QuadraturePoint& q) {
    CVector o = quadrature_overlaps_u(rho.n_max(), q);
    return o.dot(rho.matrix() * o).real();
}

namespace {

// Records with positive weight in canonical order, grouped by angle. Each overlap vector is
// diag(phase_θ)·h(u) with h real, so every quadratic form reduces to real products.
struct AngleBlock {
    CVector phase;
    RMatrix h;  // d × (n_θ·nodes)
    RVector f;  // normalized weights
};

struct Design {
    std::vector<AngleBlock> blocks;
    Eigen::Index n = 0;
    // each record is the mean density over its bin, from 3-point Gauss-Legendre nodes, or the centre value
    std::vector<double> node_offsets{0.0};
    RVector node_weights = RVector::Ones(1);
};

Design make_design(const QuadratureDataset& data, int n_max, bool bin_average = false) {
    std::vector<QuadratureRecord> recs;
    recs.reserve(data.size());
    for (const auto& r : data.records()) {
        if (r.weight > 0.0) recs.push_back(r);
    }
    std::sort(recs.begin(), recs.end());
    double total = 0.0;
    for (const auto& r : recs) total += r.weight;
    Design d;
    d.n = static_cast<Eigen::Index>(recs.size());
    if (bin_average && data.bin_width() > 0.0) {
        double half = 0.5 * data.bin_width() * std::sqrt(0.6);
        d.node_offsets = {-half, 0.0, half};
        d.node_weights = RVector(3);
        d.node_weights << 5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0;
    }
    const auto nodes = static_cast<Eigen::Index>(d.node_offsets.size());
    std::size_t i = 0;
    while (i < recs.size()) {
        std::size_t j = i;
        // records are compared through their wrapped angle
        double th = QuadraturePoint(recs[i].theta, 0.0).theta;
        while (j < recs.size() && QuadraturePoint(recs[j].theta, 0.0).theta == th) ++j;
        AngleBlock b;
        b.phase.resize(n_max + 1);
        for (int n = 0; n <= n_max; ++n) b.phase(n) = std::polar(1.0, n * (th + constants::pi / 2.0));
        b.h.resize(n_max + 1, static_cast<Eigen::Index>(j - i) * nodes);
        b.f.resize(static_cast<Eigen::Index>(j - i));
        for (std::size_t k = i; k < j; ++k) {
            auto c = static_cast<Eigen::Index>(k - i);
            for (Eigen::Index g = 0; g < nodes; ++g)
                b.h.col(c * nodes + g) = hermite_functions(n_max, recs[k].u + d.node_offsets[g]);
            b.f(c) = recs[k].weight / total;
        }
        d.blocks.push_back(std::move(b));
        i = j;
    }
    return d;
}

RVector probabilities(const Design& d, const CMatrix& rho) {
    RVector p(d.n);
    Eigen::Index off = 0;
    for (const auto& b : d.blocks) {
        RMatrix a = (b.phase.conjugate().asDiagonal() * rho * b.phase.asDiagonal()).real();
        RMatrix ah = a * b.h;
        RVector q = b.h.cwiseProduct(ah).colwise().sum().transpose();
        const Eigen::Index nodes = d.node_weights.size();
        for (Eigen::Index j = 0; j < b.f.size(); ++j) p(off + j) = q.segment(j * nodes, nodes).dot(d.node_weights);
        off += b.f.size();
    }
    return p;
}

double loglik(const Design& d, const RVector& p) {
    double s = 0.0;
    Eigen::Index off = 0;
    for (const auto& b : d.blocks) {
        for (Eigen::Index j = 0; j < b.f.size(); ++j) s += b.f(j) * std::log(std::max(p(off + j), probability_floor));
        off += b.f.size();
    }
    return s;
}

CMatrix r_matrix(const Design& d, const RVector& p) {
    bool any = false;
    const Eigen::Index dim = d.blocks.front().h.rows();
    CMatrix r = CMatrix::Zero(dim, dim);
    Eigen::Index off = 0;
    for (const auto& b : d.blocks) {
        const Eigen::Index nodes = d.node_weights.size();
        RVector w(b.h.cols());
        for (Eigen::Index j = 0; j < b.f.size(); ++j) {
            double pj = p(off + j);
            if (pj >= probability_floor) any = true;
            w.segment(j * nodes, nodes) = d.node_weights * (b.f(j) / std::max(pj, probability_floor));
        }
        RMatrix hw = b.h * w.asDiagonal();
        RMatrix bm = hw * b.h.transpose();
        r += b.phase.asDiagonal() * bm.cast<cplx>() * b.phase.conjugate().asDiagonal();
        off += b.f.size();
    }
    if (!any) throw DegenerateInputError("all predicted probabilities fall below the division floor");
    return hermitize(r);
}

CMatrix normalized_sandwich(const CMatrix& m, const CMatrix& rho) {
    CMatrix out = hermitize(m * rho * m.adjoint());
    out /= out.trace().real();
    Eigen::SelfAdjointEigenSolver<CMatrix> es(out, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < 0.0) return DensityMatrix::nearest_physical(out).matrix();
    return out;
}

double step_distance(const CMatrix& a, const CMatrix& b) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitize(a - b), Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

}  // namespace

CMatrix r_operator(const DensityMatrix& rho, const QuadratureDataset& data, const OscillatorSpec& spec) {
    if (rho.dim() != spec.dim()) throw DimensionError("state and oscillator spec use different truncations");
    Design d = make_design(data, rho.n_max());
    return r_matrix(d, probabilities(d, rho.matrix()));
}

double log_likelihood(const DensityMatrix& rho, const QuadratureDataset& data) {
    Design d = make_design(data, rho.n_max());
    return loglik(d, probabilities(d, rho.matrix()));
}

std::vector<double> uniform_angles(int m) {
    if (m < 1) throw ArgumentError("need at least one angle");
    std::vector<double> a(m);
    for (int j = 0; j < m; ++j) a[j] = 2.0 * 3.14159265358979323846 * j / m;
    return a;
}

QuadratureDataset synthesize_dataset(const DensityMatrix& rho, const std::vector<double>& angles,
                                     const std::vector<double>& u_grid) {
    if (u_grid.size() < 2) throw ArgumentError("u grid needs at least two points");
    double du = (u_grid.back() - u_grid.front()) / static_cast<double>(u_grid.size() - 1);
    std::vector<QuadratureRecord> recs;
    recs.reserve(angles.size() * u_grid.size());
    for (double th : angles) {
        for (double u : u_grid) {
            double p = predicted_probability(rho, QuadraturePoint(th, u));
            recs.push_back({th, u, std::max(p, 0.0) * du});
        }
    }
    return QuadratureDataset(std::move(recs), du);
}

MleResult reconstruct(const QuadratureDataset& data, const MleConfig& cfg, const OscillatorSpec& spec) {
    cfg.validate();
    if (cfg.n_max != spec.n_max()) throw DimensionError("mle.n_max differs from the oscillator truncation");
    const int dim = cfg.n_max + 1;
    Design d = make_design(data, cfg.n_max, cfg.bin_average);
    CMatrix rho = cfg.initial == InitialState::all_ones ? CMatrix(CMatrix::Ones(dim, dim) / static_cast<double>(dim))
                                                        : CMatrix(CMatrix::Identity(dim, dim) / static_cast<double>(dim));
    RVector p = probabilities(d, rho);
    double l = loglik(d, p);
    std::vector<double> trace{l};
    const CMatrix eye = CMatrix::Identity(dim, dim);
    int iterations = 0;
    int diluted = 0;
    double step = 0.0;
    bool converged = false;
    while (iterations < cfg.max_iterations) {
        CMatrix r = r_matrix(d, p);
        CMatrix next = normalized_sandwich(r, rho);
        RVector pn = probabilities(d, next);
        double ln = loglik(d, pn);
        if (cfg.monotone_safeguard && ln < l) {
            double eps = 1.0;
            bool ok = false;
            for (int k = 0; k < 40 && !ok; ++k) {
                eps *= 0.5;
                CMatrix m = eye + eps * r;
                next = normalized_sandwich(m, rho);
                pn = probabilities(d, next);
                ln = loglik(d, pn);
                ok = ln >= l;
            }
            ++diluted;
            if (!ok) {
                next = rho;
                pn = p;
                ln = l;
            }
        }
        ++iterations;
        step = step_distance(rho, next);
        rho = std::move(next);
        p = std::move(pn);
        l = ln;
        trace.push_back(l);
        if (step < cfg.tolerance) {
            converged = true;
            break;
        }
    }
    return {DensityMatrix::nearest_physical(rho), iterations, step, std::move(trace), converged, data.clamped(), diluted};
}

}  // namespace toftomo
