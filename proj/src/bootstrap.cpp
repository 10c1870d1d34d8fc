#include "toftomo/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

#include "toftomo/errors.hpp"
#include "toftomo/parallel.hpp"
#include "toftomo/rng.hpp"

namespace toftomo {

namespace {

struct ReplicaOutcome {
    std::optional<MleResult> result;
    std::string error;
};

ReplicaOutcome run_one(const DensityMatrix& rho, const std::vector<double>& angles, const BootstrapConfig& cfg,
                       int index, const MleConfig& mle_cfg, const OscillatorSpec& spec) {
    try {
        auto data = synthesize_replica(rho, angles, cfg, index, spec);
        return {reconstruct(data, mle_cfg, spec), {}};
    } catch (const DataError& e) {
        return {std::nullopt, e.what()};
    }
}

void percentile_band(const std::vector<double>& v, double& lo, double& hi) {
    lo = stats::quantile(v, 0.025);
    hi = stats::quantile(v, 0.975);
}

}  // namespace

void BootstrapConfig::validate() const {
    if (n_replicas < 2) throw ArgumentError("bootstrap.replicas must be at least 2");
    if (rl_iterations < 1) throw ArgumentError("bootstrap.rl_iterations must be at least 1");
    if (!(rl_filter_floor >= 0.0)) throw ArgumentError("bootstrap.rl_filter_floor must be nonnegative");
    if (!(max_failure_fraction >= 0.0 && max_failure_fraction < 1.0))
        throw ArgumentError("bootstrap.max_failure_fraction must lie in [0, 1)");
    if (wigner_points < 3 || !(wigner_extent > 0.0)) throw ArgumentError("bootstrap wigner grid is invalid");
    chain().validate();
}

MeasurementChain BootstrapConfig::chain() const {
    MeasurementChain c;
    c.geometry = pipeline_geometry;
    c.grid = {grid_nx, 1};
    c.psf = psf;
    c.noise = noise;
    c.n_averaged = n_averaged;
    c.total_counts = total_counts;
    c.rl_iterations = rl_iterations;
    c.rl_filter_floor = rl_filter_floor;
    c.blur = blur;
    c.subtract_background = false;
    c.deconvolve = deconvolve;
    c.shot_noise = shot_noise;
    return c;
}

QuadratureDataset synthesize_replica(const DensityMatrix& rho_mle, const std::vector<double>& angles,
                                     const BootstrapConfig& cfg, int replica_index, const OscillatorSpec& spec,
                                     std::vector<AngleMeasurement>* frames) {
    if (replica_index < 0) throw ArgumentError("replica index must be nonnegative");
    std::vector<UDensity> densities;
    densities.reserve(angles.size());
    for (double a : angles) densities.push_back(harmonic_density(rho_mle, a, spec));
    std::uint64_t seed = rng::key({cfg.seed, static_cast<std::uint64_t>(replica_index)});
    return measure_angles(densities, angles, cfg.chain(), spec, seed, frames);
}

BootstrapReport run_bootstrap(const DensityMatrix& rho_mle, const std::vector<double>& angles,
                              const BootstrapConfig& cfg, const MleConfig& mle_cfg, const OscillatorSpec& spec) {
    cfg.validate();
    mle_cfg.validate();
    const int target = cfg.n_replicas;
    const int max_failures = static_cast<int>(std::floor(cfg.max_failure_fraction * target));
    BootstrapReport rep;
    std::vector<MleResult> accepted;
    int next = 0;
    while (static_cast<int>(accepted.size()) < target) {
        int batch = target - static_cast<int>(accepted.size());
        std::vector<ReplicaOutcome> out(batch);
        parallel_for(static_cast<std::size_t>(batch), [&](std::size_t i) {
            out[i] = run_one(rho_mle, angles, cfg, next + static_cast<int>(i), mle_cfg, spec);
        });
        for (int i = 0; i < batch; ++i) {
            if (out[i].result) {
                rep.replica_indices.push_back(next + i);
                accepted.push_back(std::move(*out[i].result));
            } else {
                rep.failures.push_back({next + i, out[i].error});
                if (static_cast<int>(rep.failures.size()) > max_failures) {
                    std::ostringstream os;
                    os << "bootstrap aborted: " << rep.failures.size() << " of " << next + i + 1
                       << " replicas failed (limit " << max_failures << "); last error: " << out[i].error;
                    throw BootstrapAbortedError(os.str());
                }
            }
        }
        next += batch;
    }

    const int dim = rho_mle.dim();
    std::vector<Negativity> neg(accepted.size(), Negativity{0, false, 0, 0});
    parallel_for(accepted.size(), [&](std::size_t i) {
        neg[i] = wigner_minimum(accepted[i].rho, cfg.wigner_extent, cfg.wigner_points);
    });
    for (std::size_t i = 0; i < accepted.size(); ++i) {
        rep.replica_rhos.push_back(accepted[i].rho);
        rep.negativities.push_back(neg[i].value);
        rep.fidelities.push_back(fidelity(accepted[i].rho, rho_mle));
        rep.converged.push_back(accepted[i].converged);
    }
    rep.negativity_mean = stats::mean(rep.negativities);
    rep.negativity_std = stats::stddev(rep.negativities);
    percentile_band(rep.negativities, rep.negativity_p025, rep.negativity_p975);

    rep.real_mean.resize(dim, dim);
    rep.real_std.resize(dim, dim);
    rep.imag_mean.resize(dim, dim);
    rep.imag_std.resize(dim, dim);
    rep.real_p025.resize(dim, dim);
    rep.real_p975.resize(dim, dim);
    std::vector<double> re(accepted.size()), im(accepted.size());
    for (int m = 0; m < dim; ++m) {
        for (int n = 0; n < dim; ++n) {
            for (std::size_t i = 0; i < accepted.size(); ++i) {
                re[i] = rep.replica_rhos[i].matrix()(m, n).real();
                im[i] = rep.replica_rhos[i].matrix()(m, n).imag();
            }
            rep.real_mean(m, n) = stats::mean(re);
            rep.real_std(m, n) = stats::stddev(re);
            rep.imag_mean(m, n) = stats::mean(im);
            rep.imag_std(m, n) = stats::stddev(im);
            percentile_band(re, rep.real_p025(m, n), rep.real_p975(m, n));
        }
        rep.population_mean.push_back(rep.real_mean(m, m));
        rep.population_std.push_back(rep.real_std(m, m));
        rep.population_p025.push_back(rep.real_p025(m, m));
        rep.population_p975.push_back(rep.real_p975(m, m));
    }
    return rep;
}

NoiseBiasTable noise_bias_sweep(const DensityMatrix& base_rho, const std::vector<double>& noise_levels,
                                const BootstrapConfig& cfg, const std::vector<double>& angles,
                                const MleConfig& mle_cfg, const OscillatorSpec& spec, int simulations,
                                int high_n_threshold) {
    cfg.validate();
    mle_cfg.validate();
    if (noise_levels.size() < 2) throw ArgumentError("noise sweep needs at least two levels");
    if (std::find(noise_levels.begin(), noise_levels.end(), 0.0) == noise_levels.end())
        throw ArgumentError("noise sweep must include level 0");
    for (double s : noise_levels)
        if (!(s >= 0.0)) throw ArgumentError("noise levels must be nonnegative");
    if (simulations < 1) throw ArgumentError("noise sweep needs at least one simulation per level");
    if (cfg.n_averaged < 2) throw ArgumentError("noise sweep models averaged frames (n_averaged >= 2)");

    NoiseBiasTable table;
    table.base_populations = base_rho.populations();
    table.high_n_threshold = high_n_threshold;
    Negativity truth = wigner_minimum(base_rho, cfg.wigner_extent, cfg.wigner_points);
    table.x_m = truth.x;
    table.p_m = truth.p;
    table.true_wigner_min = truth.value;

    const std::size_t levels = noise_levels.size();
    const auto sims = static_cast<std::size_t>(simulations);
    std::vector<ReplicaOutcome> out(levels * sims);
    parallel_for(levels * sims, [&](std::size_t job) {
        std::size_t l = job / sims;
        std::size_t s = job % sims;
        // a noiseless level is deterministic, so one run stands for all of them
        if (noise_levels[l] == 0.0 && s > 0) return;
        BootstrapConfig c = cfg;
        c.noise = NoiseModel::zero();
        c.noise.averaged_noise_amplitude = noise_levels[l] * std::sqrt(static_cast<double>(cfg.n_averaged));
        c.seed = rng::key({cfg.seed, static_cast<std::uint64_t>(l)});
        out[job] = run_one(base_rho, angles, c, static_cast<int>(s), mle_cfg, spec);
    });

    std::vector<double> pooled_level, pooled_high, pooled_w;
    for (std::size_t l = 0; l < levels; ++l) {
        NoiseBiasLevel lv;
        lv.sigma = noise_levels[l];
        for (std::size_t s = 0; s < sims; ++s) {
            const ReplicaOutcome& o = (noise_levels[l] == 0.0) ? out[l * sims] : out[l * sims + s];
            if (!o.result) {
                ++lv.failures;
                continue;
            }
            auto pops = o.result->rho.populations();
            double high = 0.0;
            for (std::size_t n = static_cast<std::size_t>(high_n_threshold); n < pops.size(); ++n) high += pops[n];
            double w = wigner_at(o.result->rho, table.x_m, table.p_m);
            lv.populations.push_back(pops);
            lv.high_n.push_back(high);
            lv.wigner_at_min.push_back(w);
            pooled_level.push_back(lv.sigma);
            pooled_high.push_back(high);
            pooled_w.push_back(w);
        }
        if (!lv.populations.empty()) {
            const std::size_t dim = lv.populations.front().size();
            std::vector<double> col(lv.populations.size());
            for (std::size_t n = 0; n < dim; ++n) {
                for (std::size_t i = 0; i < col.size(); ++i) col[i] = lv.populations[i][n];
                lv.population_mean.push_back(stats::mean(col));
                double lo, hi;
                percentile_band(col, lo, hi);
                lv.population_p025.push_back(lo);
                lv.population_p975.push_back(hi);
            }
            lv.high_n_mean = stats::mean(lv.high_n);
            percentile_band(lv.high_n, lv.high_n_p025, lv.high_n_p975);
            lv.wigner_mean = stats::mean(lv.wigner_at_min);
            percentile_band(lv.wigner_at_min, lv.wigner_p025, lv.wigner_p975);
        }
        table.levels.push_back(std::move(lv));
    }
    if (pooled_level.size() >= 3) {
        table.high_n_trend = stats::spearman(pooled_level, pooled_high);
        table.wigner_trend = stats::spearman(pooled_level, pooled_w);
    }
    return table;
}

}  // namespace toftomo
