// One PASS/FAIL line per acceptance criterion. Exit status is the number of failures.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "toftomo/config.hpp"
#include "toftomo/constants.hpp"
#include "toftomo/dynamics.hpp"
#include "toftomo/fitting.hpp"
#include "toftomo/fock.hpp"
#include "toftomo/imaging.hpp"
#include "toftomo/log.hpp"
#include "toftomo/mle.hpp"
#include "toftomo/parallel.hpp"
#include "toftomo/pipeline.hpp"
#include "toftomo/scenario.hpp"

using namespace toftomo;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

OscillatorSpec rb(double khz, int n_max) { return {constants::rb87_mass, 2 * constants::pi * khz * 1e3, n_max}; }

Outcome wigner_anchor() {
    auto rho = DensityMatrix::fock(1, 26);
    auto axis = linspace(-6.0, 6.0, 241);
    auto w = wigner(rho, axis, axis);
    double lo = w.values.minCoeff();
    double err = std::abs(lo + 1.0 / constants::pi);
    return {err <= 1e-6, fmt("min W = %.9f, |min + 1/pi| = %.2e (tol 1e-6)", lo, err)};
}

Outcome mle_round_trip() {
    auto spec = rb(9.05, 25);
    auto truth = prepare_state(MixtureSpec(0.26, 0.651, 0.089), TrapModel(spec), 129e-9, 2.0);
    auto data = synthesize_dataset(truth, uniform_angles(64), linspace(-8.0, 8.0, 201));
    MleConfig cfg;
    cfg.n_max = 25;
    cfg.tolerance = 1e-4;
    cfg.max_iterations = 500;
    auto r = reconstruct(data, cfg, spec);
    double f = fidelity(truth, r.rho);
    return {f >= 0.99 && r.iterations_used <= 500,
            fmt("F = %.5f after %d iterations (need F >= 0.99, <= 500 iterations)", f, r.iterations_used)};
}

Outcome robustness(bool full_map) {
    auto setup = config::robustness(config::defaults());
    auto p = robustness_point({0.28, 0.57, 0.15}, setup.config);
    bool ok = p.fidelity >= 0.95 && std::abs(p.delta_gamma) <= 0.01 && p.gamma_mle < 0;
    auto s = fmt("P = (0.28, 0.57, 0.15), lambda = %.6f: F = %.4f (need >= 0.95), gamma = %.4f, gamma_mle = %.4f, "
                 "|dgamma| = %.4f (need <= 0.01, gamma_mle < 0)",
                 setup.config.trap.lambda(), p.fidelity, p.gamma, p.gamma_mle, std::abs(p.delta_gamma));
    if (full_map) {
        auto map = run_anharmonic_robustness(simplex_grid(setup.grid_spacing), setup.config, setup.grid_spacing);
        double f_min = 1.0, dg_max = 0.0;
        for (const auto& q : map.points) {
            f_min = std::min(f_min, q.fidelity);
            dg_max = std::max(dg_max, std::abs(q.delta_gamma));
        }
        s += fmt("; map of %zu points: min F = %.4f, max |dgamma| = %.4f", map.points.size(), f_min, dg_max);
    }
    return {ok, s};
}

Outcome noise_bias() {
    auto cfg = config::noise_bias(config::defaults());
    bool ok = cfg.simulations >= 50 && cfg.levels.size() >= 6 && cfg.levels.front() == 0.0;
    std::string s = fmt("%d simulations x %zu levels;", cfg.simulations, cfg.levels.size());
    for (const auto& st : run_noise_bias_study(cfg)) {
        const auto& t = st.table;
        bool high = t.high_n_trend.p_increasing < 0.05;
        // the Wigner trend is only meaningful where the true state is negative
        bool negative = t.true_wigner_min < 0;
        bool wig = !negative || t.wigner_trend.p_increasing < 0.05;
        ok = ok && high && wig;
        s += fmt(" %s: high-n rho = %.3f p = %.1e", st.name.c_str(), t.high_n_trend.rho, t.high_n_trend.p_increasing);
        if (negative)
            s += fmt(", W(min) rho = %.3f p = %.1e;", t.wigner_trend.rho, t.wigner_trend.p_increasing);
        else
            s += ";";
    }
    s += " (need p < 0.05)";
    return {ok, s};
}

Outcome anharmonic_fit() {
    auto spec = rb(8.50, 40);
    TrapModel model(spec, -0.0037);
    auto rho0 = prepare_state(MixtureSpec(1, 0, 0), model, 166e-9, 1.0);
    TimeSeries series;
    for (int i = 0; i < 60; ++i) series.t.push_back(i * 8e-6);
    for (double v : momentum_expectation_trace(rho0, model, series.t)) series.y.push_back(v / spec.p0());
    AnharmonicFitOptions opt;
    opt.omega_guess = 2 * constants::pi * 8.2e3;
    auto r = fit_anharmonic_model(series, spec, opt);
    double e_l = std::abs(r.value("lambda") / -0.0037 - 1);
    double e_w = std::abs(r.value("omega_rad_per_s") / spec.omega() - 1);
    double e_x = std::abs(r.value("x_i_m") / 166e-9 - 1);
    double sig = anharmonic_significance(-0.0037, 166e-9, spec);
    bool ok = e_l < 0.05 && e_w < 0.05 && e_x < 0.05 && std::abs(sig - 0.13) <= 0.02;
    return {ok, fmt("relative errors lambda %.2e, omega %.2e, x_i %.2e (need < 5%%); significance %.4f (need 0.13 +- "
                    "0.02)",
                    e_l, e_w, e_x, sig)};
}

Outcome ballistic() {
    double e = constants::k_boltzmann * 0.256e-6 / 2;
    double s = ballistic_sigma(e, 0.5e-3, 0.0);
    return {s >= 2.3e-6 && s <= 2.5e-6, fmt("sigma = %.4f um (need [2.3, 2.5])", s * 1e6)};
}

DensityMatrix random_state(int dim, unsigned seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    std::uniform_int_distribution<int> rank_d(1, 4), support_d(2, 7);
    int rank = rank_d(gen), support = support_d(gen);
    CMatrix g = CMatrix::Zero(dim, rank);
    for (int i = 0; i < support; ++i)
        for (int j = 0; j < rank; ++j) g(i, j) = {n(gen), n(gen)};
    return DensityMatrix::normalized(g * g.adjoint());
}

Outcome monotone() {
    auto spec = rb(9.05, 12);
    int worst_k = -1;
    double worst = 0.0;
    std::size_t steps = 0;
    for (int k = 0; k < 20; ++k) {
        auto truth = random_state(13, 1000 + k);
        std::mt19937_64 gen(k);
        std::uniform_real_distribution<double> jitter(0.3, 1.7);
        auto base = synthesize_dataset(truth, uniform_angles(4 + k % 9), linspace(-8.0, 8.0, 61 + 10 * (k % 4)));
        auto recs = base.records();
        // multiplicative jitter keeps the dataset valid but no longer consistent with any state
        for (auto& r : recs) r.weight *= jitter(gen);
        MleConfig cfg;
        cfg.n_max = 12;
        cfg.tolerance = 1e-7;
        cfg.max_iterations = 300;
        auto res = reconstruct(QuadratureDataset(recs, base.bin_width()), cfg, spec);
        const auto& ll = res.log_likelihood_trace;
        for (std::size_t i = 1; i < ll.size(); ++i) {
            ++steps;
            double drop = ll[i - 1] - ll[i];
            if (drop > worst) {
                worst = drop;
                worst_k = k;
            }
        }
    }
    return {worst <= 1e-9, fmt("20 datasets, %zu steps, largest decrease %.2e (dataset %d, slack 1e-9)", steps, worst,
                               worst_k)};
}

Outcome rl_property() {
    // the |1> fringe profile the pipeline deconvolves: vertically integrated, 565 counts over 181 pixels
    auto spec = rb(9.05, 25);
    MeasurementChain chain;
    chain.grid.ny = 1;
    chain.noise = NoiseModel::zero();
    chain.blur = false;
    chain.subtract_background = false;
    chain.deconvolve = false;
    auto truth = measure_angle(harmonic_density(DensityMatrix::fock(1, 26), 0.0, spec), 0.0, chain, spec, 0).clean;
    auto blurred = convolve_psf(truth, chain.psf);
    double d_blur = (blurred.counts - truth.counts).norm();
    bool ok = true;
    std::string s = fmt("%d px, %.0f counts, L2(blurred) = %.3f;", static_cast<int>(truth.counts.cols()),
                        truth.counts.sum(), d_blur);
    for (int it : {2, 10})
        for (double floor : {0.0, 0.69}) {
            double d = (richardson_lucy(blurred, chain.psf, it, floor).counts - truth.counts).norm();
            ok = ok && d < d_blur;
            s += fmt(" %d it/floor %.2f: %.3f", it, floor, d);
        }
    return {ok, s + " (need all < blurred)"};
}

Outcome determinism() {
    int saved = thread_count();
    ScenarioConfig sc;
    sc.angles = uniform_angles(12);
    sc.seed = 11;
    sc.wigner_points = 41;
    sc.bootstrap_replicas = 3;
    NoiseBiasStudyConfig nb;
    nb.levels = {0.0, 2.0, 8.0};
    nb.simulations = 4;
    nb.studies = {"squeezed-n1"};
    nb.mle.tolerance = 1e-3;

    set_thread_count(1);
    auto a = run_tomography_scenario(sc);
    auto na = run_noise_bias_study(nb);
    set_thread_count(3);
    auto b = run_tomography_scenario(sc);
    auto nb3 = run_noise_bias_study(nb);
    set_thread_count(saved);

    bool same = a.mle.rho.matrix() == b.mle.rho.matrix() && a.mle.iterations_used == b.mle.iterations_used &&
                a.negativity.value == b.negativity.value && a.data.records().size() == b.data.records().size();
    for (std::size_t i = 0; same && i < a.data.records().size(); ++i)
        same = a.data.records()[i].weight == b.data.records()[i].weight;
    same = same && a.bootstrap && b.bootstrap &&
           a.bootstrap->fidelities == b.bootstrap->fidelities && a.bootstrap->negativities == b.bootstrap->negativities;
    bool same_nb = true;
    for (std::size_t l = 0; l < na[0].table.levels.size(); ++l)
        same_nb = same_nb && na[0].table.levels[l].populations == nb3[0].table.levels[l].populations &&
                  na[0].table.levels[l].wigner_at_min == nb3[0].table.levels[l].wigner_at_min;
    return {same && same_nb, fmt("scenario with bootstrap %s, noise-bias sweep %s at 1 vs 3 threads",
                                 same ? "bit-identical" : "DIFFERS", same_nb ? "bit-identical" : "DIFFERS")};
}

}  // namespace

int main(int argc, char** argv) {
    bool full_map = false;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--full-map") == 0) {
            full_map = true;
        } else {
            std::fprintf(stderr, "usage: %s [--full-map]\n", argv[0]);
            return 2;
        }
    }
    set_warning_sink(nullptr);

    struct Criterion {
        int id;
        const char* name;
        double budget_s;
        std::function<Outcome()> run;
    };
    std::vector<Criterion> all = {
        {1, "wigner analytic anchor", 5, wigner_anchor},
        {2, "MLE round trip", 120, mle_round_trip},
        {3, "anharmonic robustness star point", full_map ? 7200.0 : 600.0, [&] { return robustness(full_map); }},
        {4, "noise-bias trends", 3600, noise_bias},
        {5, "anharmonic fit self-consistency", 600, anharmonic_fit},
        {6, "ballistic expansion anchor", 1, ballistic},
        {7, "MLE log-likelihood monotone", 300, monotone},
        {8, "Richardson-Lucy reduces L2", 30, rl_property},
        {9, "determinism across thread counts", 600, determinism},
    };
    int failures = 0;
    for (const auto& c : all) {
        auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        bool in_time = dt <= c.budget_s;
        bool pass = o.pass && in_time;
        failures += !pass;
        std::printf("criterion %d %s: %s  %s; %.2f s (budget %.0f s%s)\n", c.id, c.name, pass ? "PASS" : "FAIL",
                    o.detail.c_str(), dt, c.budget_s, in_time ? "" : ", EXCEEDED");
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(all.size()) - failures, all.size());
    return failures;
}
