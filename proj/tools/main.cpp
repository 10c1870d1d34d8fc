#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "commands.hpp"
#include "toftomo/errors.hpp"
#include "toftomo/version.hpp"

using namespace toftomo;
using namespace toftomo::cli;

namespace {

enum ExitCode { ok = 0, config_error = 2, data_error = 3, numeric_error = 4 };

void add_common(CLI::App* app, CommonOptions& c, bool needs_out = true) {
    app->add_option("-c,--config", c.config_path, "Scenario config JSON")->check(CLI::ExistingFile);
    app->add_option("--set", c.sets, "Override a config value, e.g. --set mle.tolerance=1e-6")
        ->allow_extra_args(false);
    app->add_option("--seed", c.seed, "RNG seed (overrides TOMO_SEED and the config)");
    app->add_option("--threads", c.threads, "Worker threads, 0 for all cores");
    auto* out = app->add_option("-o,--out", c.out, "Output directory");
    if (needs_out) out->required();
    app->add_flag("-v,--verbose", c.verbose, "Progress messages on stderr");
    app->add_flag("-q,--quiet", c.quiet, "Suppress warnings");
}

void add_mle_flags(CLI::App* app, FlagOverrides& f) {
    app->add_option("--nmax", f.n_max, "Fock truncation n_max (default 25)");
    app->add_option("--tol", f.tol, "MLE trace-distance tolerance (default 1e-4)");
    app->add_option("--max-iter", f.max_iter, "MLE iteration cap (default 500)");
    app->add_option("--initial", f.initial, "MLE starting state: mixed (I/d, default) or ones")
        ->check(CLI::IsMember({"mixed", "ones"}));
}

void add_rl_flags(CLI::App* app, FlagOverrides& f) {
    app->add_option("--rl-iterations", f.rl_iterations, "Richardson-Lucy iterations (default 2)");
    app->add_option("--rl-filter", f.rl_filter, "Richardson-Lucy filter floor (default 0.69)");
}

void add_wigner_flags(CLI::App* app, FlagOverrides& f) {
    app->add_option("--extent", f.extent, "Wigner grid half-width in x/x0 units (default 6)");
    app->add_option("--points", f.points, "Wigner grid points per axis (default 121)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Time-of-flight quantum state tomography of a single trapped atom"};
    app.set_version_flag("--version", version());
    app.require_subcommand(1);

    CommonOptions common;
    FlagOverrides flags;

    auto* sim = app.add_subcommand("simulate", "Forward-model a scenario into quadrature CSVs");
    add_common(sim, common);
    add_rl_flags(sim, flags);
    SimulateOptions sim_o;
    sim->add_flag("--frames", sim_o.frames, "Also write the background-subtracted camera frames");

    auto* dec = app.add_subcommand("deconvolve", "Richardson-Lucy deconvolution and integration of frames");
    add_common(dec, common);
    add_rl_flags(dec, flags);
    DeconvolveOptions dec_o;
    dec->add_option("input", dec_o.input, "Frame CSV, or a directory with angles.csv")->required();
    dec->add_option("--theta", dec_o.theta, "Quadrature angle for a single frame, radians");

    auto* rec = app.add_subcommand("reconstruct", "Maximum-likelihood density matrix from quadrature data");
    add_common(rec, common);
    add_mle_flags(rec, flags);
    add_rl_flags(rec, flags);
    add_wigner_flags(rec, flags);
    ReconstructOptions rec_o;
    rec->add_option("input", rec_o.input, "Quadrature CSV, or a directory with quadrature.csv")->required();
    rec->add_option("--truth", rec_o.truth, "Density-matrix JSON to compare against");

    auto* wig = app.add_subcommand("wigner", "Wigner grid and Hinton table of a density matrix");
    add_common(wig, common);
    add_wigner_flags(wig, flags);
    WignerOptions wig_o;
    wig->add_option("input", wig_o.input, "Density-matrix JSON, or a directory with rho.json")->required();

    auto* boot = app.add_subcommand("bootstrap", "Parametric bootstrap around a reconstructed state");
    add_common(boot, common);
    add_mle_flags(boot, flags);
    add_rl_flags(boot, flags);
    BootstrapOptions boot_o;
    boot->add_option("input", boot_o.input, "Density-matrix JSON, or a directory with rho.json")->required();
    boot->add_option("--replicas", flags.replicas, "Replica count, at least 2 (default 50)");
    boot->add_option("--angles-from", boot_o.angles_from, "Take the angle schedule from a quadrature CSV");
    boot->add_flag("--archive", boot_o.archive, "Write every replica density matrix under replicas/");

    auto* fit = app.add_subcommand("fit", "Least-squares fits");
    fit->require_subcommand(1);
    FitOptions fit_o;
    for (const char* model : {"damped-sinusoid", "ballistic", "gravity", "anharmonic", "fock-mixture"}) {
        auto* m = fit->add_subcommand(model);
        add_common(m, common);
        m->callback([&fit_o, model] { fit_o.model = model; });
        if (std::string(model) == "anharmonic") {
            m->add_option("input", fit_o.input, "TimeSeries CSV t_s,value[,error] with values in p0 units");
            m->add_option("--quadrature", fit_o.quadrature, "Build the series from quadrature profile centres");
            m->add_option("--centre", fit_o.centre, "Centre extractor for --quadrature: mean or gaussian")
                ->check(CLI::IsMember({"mean", "gaussian"}));
            m->add_option("--omega-guess-hz", fit_o.omega_guess_hz, "Starting trap frequency, Hz");
            m->add_option("--lambda", fit_o.lambda, "Starting (or fixed) quartic coefficient");
            m->add_flag("--fix-lambda", fit_o.fix_lambda, "Hold lambda at --lambda");
        } else if (std::string(model) == "fock-mixture") {
            m->add_option("input", fit_o.input, "Image CSV with its .meta sidecar")->required();
        } else {
            m->add_option("input", fit_o.input, "TimeSeries CSV t_s,value[,error]")->required();
        }
    }

    auto* appx = app.add_subcommand("appendix", "Systematic studies");
    appx->require_subcommand(1);
    auto* rob = appx->add_subcommand("robustness", "Anharmonic-evolution fidelity map over populations");
    add_common(rob, common);
    add_mle_flags(rob, flags);
    RobustnessOptions rob_o;
    rob->add_option("--grid", flags.grid, "Simplex grid spacing (default 0.05)");
    rob->add_option("--point", rob_o.points, "Evaluate P0,P1,P2 only (repeatable)")->allow_extra_args(false);
    auto* nb = appx->add_subcommand("noise-bias", "MLE bias versus Gaussian profile noise");
    add_common(nb, common);
    add_mle_flags(nb, flags);
    NoiseBiasOptions nb_o;
    nb->add_option("--levels", nb_o.levels, "RMS noise levels in counts per bin, including 0")->delimiter(',');
    nb->add_option("--study", nb_o.studies, "displaced-n0, squeezed-n1 or displaced-squeezed-n1 (repeatable)")
        ->allow_extra_args(false);
    nb->add_option("--simulations", nb_o.simulations, "Simulations per level (default 50)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return config_error;
    }

    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        auto run_with = [&](const std::string& name, auto&& body) {
            Run run(name, args, common, flags);
            body(run);
            run.finish();
        };
        if (sim->parsed()) {
            run_with("simulate", [&](Run& r) { cmd_simulate(r, sim_o); });
        } else if (dec->parsed()) {
            run_with("deconvolve", [&](Run& r) { cmd_deconvolve(r, dec_o); });
        } else if (rec->parsed()) {
            run_with("reconstruct", [&](Run& r) { cmd_reconstruct(r, rec_o); });
        } else if (wig->parsed()) {
            run_with("wigner", [&](Run& r) { cmd_wigner(r, wig_o); });
        } else if (boot->parsed()) {
            run_with("bootstrap", [&](Run& r) { cmd_bootstrap(r, boot_o); });
        } else if (fit->parsed()) {
            run_with("fit " + fit_o.model, [&](Run& r) { cmd_fit(r, fit_o); });
        } else if (rob->parsed()) {
            run_with("appendix robustness", [&](Run& r) { cmd_robustness(r, rob_o); });
        } else if (nb->parsed()) {
            run_with("appendix noise-bias", [&](Run& r) { cmd_noise_bias(r, nb_o); });
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return config_error;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return data_error;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return data_error;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return numeric_error;
    } catch (const std::exception& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return numeric_error;
    }
    return ok;
}
