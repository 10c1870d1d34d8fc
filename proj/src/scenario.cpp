#include "toftomo/scenario.hpp"

#include <cmath>
#include <sstream>

#include "toftomo/errors.hpp"
#include "toftomo/parallel.hpp"
#include "toftomo/rng.hpp"

namespace toftomo {

namespace {

template <class F>
auto stage(const char* name, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const ConfigError& e) {
        throw ConfigError(std::string(name) + ": " + e.what());
    } catch (const DataError& e) {
        throw DataError(std::string(name) + ": " + e.what());
    } catch (const NumericError& e) {
        throw NumericError(std::string(name) + ": " + e.what());
    }
}

constexpr std::uint64_t bootstrap_stream = 0xb007;

}  // namespace

void ScenarioConfig::validate() const {
    chain.validate();
    mle.validate();
    if (angles.empty()) throw ArgumentError("angles must not be empty");
    if (!(depth_jump_ratio > 0.0)) throw ArgumentError("state.depth_jump_ratio must be positive");
    if (!std::isfinite(displacement)) throw ArgumentError("state.displacement_m must be finite");
    if (mle.n_max != trap.spec().n_max()) throw DimensionError("mle.n_max must equal trap.n_max");
    if (bootstrap_replicas == 1 || bootstrap_replicas < 0)
        throw ArgumentError("bootstrap.replicas must be 0 (off) or at least 2");
    if (wigner_points < 3 || !(wigner_extent > 0.0)) throw ArgumentError("wigner grid is invalid");
}

SimulatedMeasurement simulate_scenario(const ScenarioConfig& cfg) {
    cfg.validate();
    const OscillatorSpec& spec = cfg.trap.spec();
    DensityMatrix truth = stage("prepare", [&] {
        return prepare_state(cfg.mixture, cfg.trap, cfg.displacement, cfg.depth_jump_ratio);
    });
    std::vector<UDensity> densities(cfg.angles.size());
    stage("evolve", [&] {
        parallel_for(cfg.angles.size(), [&](std::size_t j) {
            auto ev = evolve(truth, cfg.trap, cfg.angles[j] / spec.omega());
            densities[j] = momentum_density(ev.rho_t, spec);
        });
        return 0;
    });
    std::vector<AngleMeasurement> frames;
    QuadratureDataset data = stage("measure", [&] {
        return measure_angles(densities, cfg.angles, cfg.chain, spec, cfg.seed, cfg.keep_frames ? &frames : nullptr);
    });
    return {std::move(truth), std::move(data), std::move(frames)};
}

ScenarioResult run_tomography_scenario(const ScenarioConfig& cfg) {
    const OscillatorSpec& spec = cfg.trap.spec();
    SimulatedMeasurement sim = simulate_scenario(cfg);
    DensityMatrix truth = std::move(sim.truth);
    QuadratureDataset data = std::move(sim.data);
    std::vector<AngleMeasurement> frames = std::move(sim.frames);
    MleResult mle = stage("reconstruct", [&] { return reconstruct(data, cfg.mle, spec); });
    ScenarioResult r{truth, std::move(data), mle, {}, {}, {}, 0.0, std::nullopt, std::move(frames)};
    auto axis = linspace(-cfg.wigner_extent, cfg.wigner_extent, cfg.wigner_points);
    r.wigner = wigner(mle.rho, axis, axis);
    r.negativity = wigner_minimum(mle.rho, cfg.wigner_extent, 61);
    r.truth_negativity = wigner_minimum(truth, cfg.wigner_extent, 61);
    r.fidelity = fidelity(truth, mle.rho);
    if (cfg.bootstrap_replicas >= 2) {
        BootstrapConfig b;
        b.n_replicas = cfg.bootstrap_replicas;
        b.noise = cfg.chain.noise;
        b.rl_iterations = cfg.chain.rl_iterations;
        b.rl_filter_floor = cfg.chain.rl_filter_floor;
        b.seed = rng::key({cfg.seed, bootstrap_stream});
        b.pipeline_geometry = cfg.chain.geometry;
        b.psf = cfg.chain.psf;
        b.grid_nx = cfg.chain.grid.nx;
        b.n_averaged = cfg.chain.n_averaged;
        b.total_counts = cfg.chain.total_counts;
        b.blur = cfg.chain.blur;
        b.deconvolve = cfg.chain.deconvolve;
        b.shot_noise = cfg.chain.shot_noise;
        r.bootstrap = stage("bootstrap", [&] { return run_bootstrap(mle.rho, cfg.angles, b, cfg.mle, spec); });
    }
    return r;
}

QuadratureDataset anharmonic_dataset(const DensityMatrix& rho0, const TrapModel& trap,
                                     const std::vector<double>& angles, const std::vector<double>& u_grid) {
    if (u_grid.size() < 2) throw ArgumentError("u grid needs at least two points");
    const OscillatorSpec& spec = trap.spec();
    double du = (u_grid.back() - u_grid.front()) / static_cast<double>(u_grid.size() - 1);
    std::vector<QuadratureRecord> recs;
    recs.reserve(angles.size() * u_grid.size());
    for (double th : angles) {
        auto ev = evolve(rho0, trap, th / spec.omega());
        auto d = quadrature_distribution(ev.rho_t, 0.0, u_grid, spec);
        for (std::size_t i = 0; i < u_grid.size(); ++i) recs.push_back({th, u_grid[i], d[i] * du});
    }
    return QuadratureDataset(std::move(recs), du);
}

RescaledTrap rescale_fitted_trap(const TrapModel& fitted, double fitted_displacement, double depth_ratio,
                                 double displacement_ratio) {
    if (!(displacement_ratio > 0.0)) throw ArgumentError("displacement ratio must be positive");
    return {rescale_depth(fitted, depth_ratio), fitted_displacement * displacement_ratio};
}

std::vector<std::array<double, 3>> simplex_grid(double spacing) {
    if (!(spacing > 0.0 && spacing <= 1.0)) throw ArgumentError("grid spacing must lie in (0, 1]");
    int steps = static_cast<int>(std::lround(1.0 / spacing));
    if (std::abs(steps * spacing - 1.0) > 1e-9) throw ArgumentError("grid spacing must divide 1");
    std::vector<std::array<double, 3>> g;
    for (int i = 0; i <= steps; ++i) {
        for (int j = 0; i + j <= steps; ++j) {
            int k = steps - i - j;
            g.push_back({static_cast<double>(i) / steps, static_cast<double>(j) / steps, static_cast<double>(k) / steps});
        }
    }
    return g;
}

RobustnessPoint robustness_point(const std::array<double, 3>& populations, const RobustnessConfig& cfg) {
    const OscillatorSpec& spec = cfg.trap.spec();
    MixtureSpec mix(populations[0], populations[1], populations[2]);
    DensityMatrix rho0 = prepare_state(mix, cfg.trap, cfg.displacement, cfg.depth_jump_ratio);
    auto data = anharmonic_dataset(rho0, cfg.trap, cfg.angles, cfg.u_grid);
    MleConfig m = cfg.mle;
    auto res = reconstruct(data, m, spec);
    RobustnessPoint p;
    p.populations = populations;
    p.fidelity = fidelity(rho0, res.rho);
    p.gamma = wigner_minimum(rho0, cfg.wigner_extent, cfg.wigner_points).value;
    p.gamma_mle = wigner_minimum(res.rho, cfg.wigner_extent, cfg.wigner_points).value;
    p.delta_gamma = p.gamma - p.gamma_mle;
    p.iterations = res.iterations_used;
    p.converged = res.converged;
    return p;
}

RobustnessMap run_anharmonic_robustness(const std::vector<std::array<double, 3>>& grid, const RobustnessConfig& cfg,
                                        double spacing) {
    cfg.mle.validate();
    for (const auto& p : grid) MixtureSpec(p[0], p[1], p[2]);  // validates each point
    RobustnessMap map;
    map.spacing = spacing;
    map.lambda = cfg.trap.lambda();
    map.omega = cfg.trap.spec().omega();
    map.displacement = cfg.displacement;
    map.points.resize(grid.size());
    parallel_for(grid.size(), [&](std::size_t i) { map.points[i] = robustness_point(grid[i], cfg); });
    return map;
}

DensityMatrix noise_bias_base_state(const std::string& name, const NoiseBiasStudyConfig& cfg) {
    TrapModel harmonic(cfg.spec);
    if (name == "displaced-n0") return prepare_state(MixtureSpec(0.93, 0.07, 0.0), harmonic, cfg.displacement_n0, 1.0);
    if (name == "squeezed-n1") return prepare_state(MixtureSpec(0.260, 0.651, 0.089), harmonic, 0.0, 2.0);
    if (name == "displaced-squeezed-n1")
        return prepare_state(MixtureSpec(0.260, 0.651, 0.089), harmonic, cfg.displacement_n1, 2.0);
    throw ArgumentError("unknown noise-bias study '" + name + "'");
}

std::vector<NoiseBiasStudy> run_noise_bias_study(const NoiseBiasStudyConfig& cfg) {
    std::vector<NoiseBiasStudy> out;
    for (std::size_t i = 0; i < cfg.studies.size(); ++i) {
        const std::string& name = cfg.studies[i];
        DensityMatrix base = noise_bias_base_state(name, cfg);
        auto angles = uniform_angles(name == "displaced-n0" ? cfg.angles_n0 : cfg.angles_n1);
        BootstrapConfig b = cfg.bootstrap;
        b.seed = rng::key({cfg.bootstrap.seed, static_cast<std::uint64_t>(i)});
        out.push_back({name, noise_bias_sweep(base, cfg.levels, b, angles, cfg.mle, cfg.spec, cfg.simulations)});
    }
    return out;
}

}  // namespace toftomo
