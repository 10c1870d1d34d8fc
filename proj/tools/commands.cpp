#include "commands.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <sstream>

#include "toftomo/errors.hpp"
#include "toftomo/fitting.hpp"
#include "toftomo/log.hpp"
#include "toftomo/parallel.hpp"
#include "toftomo/scenario.hpp"
#include "toftomo/version.hpp"

namespace toftomo::cli {

namespace {

std::uint64_t parse_seed(const std::string& text, const std::string& what) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc() || ptr != text.data() + text.size())
        throw ConfigError(what + ": expected a nonnegative integer, got '" + text + "'");
    return v;
}

std::string angle_name(std::size_t j) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "angle_%03zu.csv", j);
    return buf;
}

// Accepts a file, or a directory holding `default_name`.
fs::path input_file(const std::string& given, const char* default_name) {
    fs::path p(given);
    if (fs::is_directory(p)) p /= default_name;
    if (!fs::exists(p)) throw DataError(p.string() + ": no such file");
    return p;
}

json negativity_json(const Negativity& n) {
    return {{"value", n.value}, {"negative", n.negative}, {"x", n.x}, {"p", n.p}};
}

OscillatorSpec spec_with_dim(json& doc, int n_max) {
    doc["trap"]["n_max"] = n_max;
    return config::spec(doc);
}

std::vector<double> parse_triple(const std::string& text) {
    std::vector<double> v;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        char* end = nullptr;
        double x = std::strtod(item.c_str(), &end);
        if (item.empty() || *end != '\0') throw ConfigError("--point: cannot parse '" + text + "'");
        v.push_back(x);
    }
    if (v.size() != 3) throw ConfigError("--point: expected P0,P1,P2, got '" + text + "'");
    return v;
}

}  // namespace

std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw NumericError("sha256 digest failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

Run::Run(std::string command, std::vector<std::string> arguments, const CommonOptions& opts,
         const FlagOverrides& flags)
    : command_(std::move(command)), arguments_(std::move(arguments)), out_(opts.out), verbose_(opts.verbose) {
    if (opts.quiet) {
        set_warning_sink({});
    } else {
        set_warning_sink([](const std::string& m) { std::cerr << "warning: " << m << "\n"; });
    }
    if (opts.threads < 0) throw ConfigError("--threads: must be nonnegative");
    set_thread_count(opts.threads);

    if (opts.config_path.empty()) {
        config_ = config::defaults();
    } else {
        input(opts.config_path);
        config_ = config::resolve_file(opts.config_path);
    }
    for (const auto& s : opts.sets) config::apply_override(config_, s);
    auto set = [&](const char* path, const json& v) { config::apply_override(config_, std::string(path) + "=" + v.dump()); };
    if (flags.n_max) set("trap.n_max", *flags.n_max);
    if (flags.tol) set("mle.tolerance", *flags.tol);
    if (flags.max_iter) set("mle.max_iterations", *flags.max_iter);
    if (flags.initial) set("mle.initial", *flags.initial == "ones" ? "all_ones" : "maximally_mixed");
    if (flags.rl_iterations) set("processing.rl_iterations", *flags.rl_iterations);
    if (flags.rl_filter) set("processing.rl_filter_floor", *flags.rl_filter);
    if (flags.replicas) set("bootstrap.replicas", *flags.replicas);
    if (flags.grid) set("robustness.grid_spacing", *flags.grid);
    if (flags.extent) set("wigner.extent", *flags.extent);
    if (flags.points) set("wigner.points", *flags.points);

    if (!opts.seed.empty()) {
        seed_ = parse_seed(opts.seed, "--seed");
        seed_source_ = "--seed";
    } else if (const char* env = std::getenv("TOMO_SEED"); env && *env) {
        seed_ = parse_seed(env, "TOMO_SEED");
        seed_source_ = "TOMO_SEED";
    } else {
        seed_ = config::seed(config_);
        seed_source_ = opts.config_path.empty() ? "default" : "config";
    }
    config_["seed"] = seed_;
    if (out_.empty()) throw ConfigError("--out: an output directory is required");
}

void Run::input(const fs::path& p) {
    std::string bytes = io::read_text(p);
    inputs_.emplace_back(p.string(), sha256_hex(bytes));
}

void Run::write(const fs::path& relative, const std::string& content) {
    io::write_atomic(out_ / relative, content);
    outputs_.emplace_back(relative.generic_string(), sha256_hex(content));
}

void Run::write_image(const fs::path& relative, const ImageFrame& frame) {
    fs::path target = out_ / relative;
    io::write_image(target, frame);
    outputs_.emplace_back(relative.generic_string(), sha256_hex(io::read_text(target)));
    fs::path meta = relative;
    meta += ".meta";
    outputs_.emplace_back(meta.generic_string(), sha256_hex(io::read_text(out_ / meta)));
}

void Run::log(const std::string& msg) const {
    if (verbose_) std::cerr << msg << "\n";
}

void Run::finish() {
    json m;
    m["tool"] = "toftomo";
    m["version"] = version();
    m["command"] = command_;
    m["arguments"] = arguments_;
    m["seed"] = seed_;
    m["seed_source"] = seed_source_;
    json v = json::object();
    for (const auto& [k, val] : build_versions()) v[k] = val;
    m["versions"] = v;
    json cfg = config_;
    cfg.erase("notes");
    m["config"] = cfg;
    json in = json::array();
    for (const auto& [p, d] : inputs_) in.push_back({{"path", p}, {"sha256", d}});
    m["inputs"] = in;
    json out = json::array();
    for (const auto& [p, d] : outputs_) out.push_back({{"path", p}, {"sha256", d}});
    m["outputs"] = out;
    m["results"] = results_;
    io::write_atomic(out_ / "manifest.json", io::dump(m));
}

void cmd_simulate(Run& run, const SimulateOptions& o) {
    ScenarioConfig cfg = config::scenario(run.config());
    cfg.keep_frames = true;
    run.log("simulating " + std::to_string(cfg.angles.size()) + " angles");
    SimulatedMeasurement sim = simulate_scenario(cfg);

    std::vector<BinnedQuadrature> per_angle;
    std::string angles_csv = "file,theta_rad\n";
    for (std::size_t j = 0; j < sim.frames.size(); ++j) {
        const auto& f = sim.frames[j];
        per_angle.push_back(f.quadrature);
        run.write(fs::path("quadrature") / angle_name(j), io::quadrature_csv({f.quadrature}));
        if (o.frames) {
            run.write_image(fs::path("frames") / angle_name(j), f.measured);
            angles_csv += angle_name(j) + "," + io::format_double(f.quadrature.theta) + "\n";
        }
    }
    if (o.frames) run.write(fs::path("frames") / "angles.csv", angles_csv);
    run.write("quadrature.csv", io::quadrature_csv(per_angle));
    run.write("truth.json", io::dump(io::density_json(sim.truth)));

    Negativity n = wigner_minimum(sim.truth, cfg.wigner_extent, 61);
    json& r = run.results();
    r["angles"] = cfg.angles.size();
    r["clamped"] = sim.data.clamped();
    r["truth_populations"] = sim.truth.populations();
    r["truth_negativity"] = negativity_json(n);
    run.write("report.json", io::dump(r));
}

void cmd_deconvolve(Run& run, const DeconvolveOptions& o) {
    json& doc = run.config();
    MeasurementChain chain = config::chain(doc);
    OscillatorSpec spec = config::spec(doc);

    std::vector<std::pair<fs::path, double>> frames;
    fs::path in(o.input);
    if (fs::is_directory(in)) {
        fs::path index = in / "angles.csv";
        run.input(index);
        std::istringstream ss(io::read_text(index));
        std::string line;
        int n = 0;
        while (std::getline(ss, line)) {
            if (++n == 1) {
                if (line.rfind("file,theta_rad", 0) != 0) throw DataError(index.string() + ":1: expected header file,theta_rad");
                continue;
            }
            if (line.empty()) continue;
            auto comma = line.find(',');
            char* end = nullptr;
            double th = comma == std::string::npos ? 0.0 : std::strtod(line.c_str() + comma + 1, &end);
            if (comma == std::string::npos || end == line.c_str() + comma + 1)
                throw DataError(index.string() + ":" + std::to_string(n) + ": expected file,theta_rad");
            frames.emplace_back(in / line.substr(0, comma), th);
        }
    } else {
        frames.emplace_back(in, o.theta);
    }
    if (frames.empty()) throw DataError(o.input + ": no frames listed");

    std::vector<BinnedQuadrature> per_angle;
    for (const auto& [path, theta] : frames) {
        run.input(path);
        run.input(fs::path(path.string() + ".meta"));
        ImageFrame img = io::read_image(path);
        ImageFrame out = chain.rl_iterations > 0
                             ? richardson_lucy(img, chain.psf, chain.rl_iterations, chain.rl_filter_floor)
                             : img;
        run.write_image(fs::path("deconvolved") / path.filename(), out);
        per_angle.push_back(image_to_quadrature(out, theta, spec, chain.recenter));
    }
    run.write("quadrature.csv", io::quadrature_csv(per_angle));
    run.results()["frames"] = frames.size();
    run.results()["rl_iterations"] = chain.rl_iterations;
    run.results()["rl_filter_floor"] = chain.rl_filter_floor;
}

void cmd_reconstruct(Run& run, const ReconstructOptions& o) {
    json& doc = run.config();
    OscillatorSpec spec = config::spec(doc);
    MleConfig mcfg = config::mle(doc);
    fs::path qpath = input_file(o.input, "quadrature.csv");
    run.input(qpath);
    QuadratureDataset data = io::read_quadrature(qpath);
    run.log("reconstructing from " + std::to_string(data.size()) + " records");
    MleResult r = reconstruct(data, mcfg, spec);

    double extent = doc["wigner"]["extent"].get<double>();
    int points = doc["wigner"]["points"].get<int>();
    auto axis = linspace(-extent, extent, points);
    WignerGrid w = wigner(r.rho, axis, axis);
    Negativity neg = wigner_minimum(r.rho, extent, 61);

    run.write("rho.json", io::dump(io::mle_json(r)));
    run.write("wigner.csv", io::wigner_csv(w));
    run.write("hinton.csv", io::hinton_csv(r.rho));

    json& rep = run.results();
    rep["n_max"] = r.rho.n_max();
    rep["iterations_used"] = r.iterations_used;
    rep["converged"] = r.converged;
    rep["weights_clamped"] = r.weights_clamped;
    rep["populations"] = r.rho.populations();
    rep["negativity"] = negativity_json(neg);

    fs::path truth_path;
    if (!o.truth.empty()) {
        truth_path = o.truth;
    } else if (fs::is_directory(o.input) && fs::exists(fs::path(o.input) / "truth.json")) {
        truth_path = fs::path(o.input) / "truth.json";
    }
    if (!truth_path.empty()) {
        run.input(truth_path);
        DensityMatrix truth = io::read_density(truth_path);
        if (truth.dim() != r.rho.dim())
            throw DataError(truth_path.string() + ": dimension " + std::to_string(truth.dim()) +
                            " does not match the reconstruction (" + std::to_string(r.rho.dim()) + ")");
        rep["fidelity"] = fidelity(truth, r.rho);
        rep["trace_distance"] = trace_distance(truth, r.rho);
        rep["truth_negativity"] = negativity_json(wigner_minimum(truth, extent, 61));
    }
    run.write("report.json", io::dump(rep));
}

void cmd_wigner(Run& run, const WignerOptions& o) {
    json& doc = run.config();
    double extent = doc["wigner"]["extent"].get<double>();
    int points = doc["wigner"]["points"].get<int>();
    if (points < 3 || !(extent > 0.0)) throw ConfigError("wigner.points: need at least 3 points and a positive extent");
    fs::path p = input_file(o.input, "rho.json");
    run.input(p);
    DensityMatrix rho = io::read_density(p);
    auto axis = linspace(-extent, extent, points);
    WignerGrid w = wigner(rho, axis, axis);
    run.write("wigner.csv", io::wigner_csv(w));
    run.write("hinton.csv", io::hinton_csv(rho));
    json& rep = run.results();
    rep["grid_minimum"] = negativity_json(negativity(w));
    rep["negativity"] = negativity_json(wigner_minimum(rho, extent, 61));
    rep["integral"] = w.integral();
    rep["max_imag_residue"] = w.max_imag_residue;
    run.write("report.json", io::dump(rep));
}

void cmd_bootstrap(Run& run, const BootstrapOptions& o) {
    json& doc = run.config();
    BootstrapConfig b = config::bootstrap(doc);
    fs::path p = input_file(o.input, "rho.json");
    run.input(p);
    DensityMatrix rho = io::read_density(p);
    OscillatorSpec spec = spec_with_dim(doc, rho.n_max());
    MleConfig mcfg = config::mle(doc);

    std::vector<double> angles;
    if (!o.angles_from.empty()) {
        fs::path q = input_file(o.angles_from, "quadrature.csv");
        run.input(q);
        for (const auto& a : io::read_binned(q)) angles.push_back(a.theta);
    } else {
        angles = config::scenario(doc).angles;
    }
    run.log("bootstrapping " + std::to_string(b.n_replicas) + " replicas over " + std::to_string(angles.size()) +
            " angles");
    BootstrapReport rep = run_bootstrap(rho, angles, b, mcfg, spec);
    bool include = doc["bootstrap"]["include_replicas"].get<bool>();
    run.write("bootstrap.json", io::dump(io::bootstrap_json(rep, include)));
    if (o.archive) {
        for (std::size_t i = 0; i < rep.replica_rhos.size(); ++i) {
            char name[48];
            std::snprintf(name, sizeof name, "replica_%04d.json", rep.replica_indices[i]);
            run.write(fs::path("replicas") / name, io::dump(io::density_json(rep.replica_rhos[i])));
        }
    }
    json& r = run.results();
    r["replicas"] = rep.replica_rhos.size();
    r["failures"] = rep.failures.size();
    r["negativity_mean"] = rep.negativity_mean;
    r["negativity_std"] = rep.negativity_std;
    r["negativity_interval"] = {rep.negativity_p025, rep.negativity_p975};
}

void cmd_fit(Run& run, const FitOptions& o) {
    json& doc = run.config();
    FitResult r;
    if (o.model == "fock-mixture") {
        run.input(o.input);
        run.input(fs::path(o.input + ".meta"));
        ImageFrame img = io::read_image(o.input);
        r = fit_fock_mixture(img, config::chain(doc).psf, config::spec(doc), img.geometry);
    } else if (o.model == "anharmonic") {
        OscillatorSpec spec = config::spec(doc);
        TimeSeries s;
        if (!o.quadrature.empty()) {
            if (o.centre != "mean" && o.centre != "gaussian")
                throw ConfigError("--centre: expected 'mean' or 'gaussian'");
            fs::path q = input_file(o.quadrature, "quadrature.csv");
            run.input(q);
            for (const auto& a : io::read_binned(q)) {
                s.t.push_back(a.theta / spec.omega());
                s.y.push_back(o.centre == "mean" ? profile_mean(a) : profile_gaussian_center(a));
            }
            run.write("series.csv", [&] {
                std::string t = "t_s,value\n";
                for (std::size_t i = 0; i < s.size(); ++i)
                    t += io::format_double(s.t[i]) + "," + io::format_double(s.y[i]) + "\n";
                return t;
            }());
        } else {
            if (o.input.empty()) throw ConfigError("fit anharmonic: give a series file or --quadrature");
            run.input(o.input);
            s = io::read_time_series(o.input);
        }
        AnharmonicFitOptions a;
        a.fix_lambda = o.fix_lambda;
        a.lambda = o.lambda;
        a.lambda_bound = doc["fitting"]["lambda_bound"].get<double>();
        a.omega_guess = o.omega_guess_hz > 0.0 ? 2.0 * constants::pi * o.omega_guess_hz : 0.0;
        r = fit_anharmonic_model(s, spec, a);
    } else {
        run.input(o.input);
        TimeSeries s = io::read_time_series(o.input);
        if (o.model == "damped-sinusoid") {
            r = fit_damped_sinusoid(s);
        } else if (o.model == "ballistic") {
            r = fit_ballistic(s, config::spec(doc).mass());
        } else if (o.model == "gravity") {
            r = fit_gravity_drop(s, doc["fitting"]["gravity_m_per_s2"].get<double>());
        } else {
            throw ConfigError("fit: unknown model '" + o.model + "'");
        }
    }
    json j = io::fit_json(r);
    run.write("fit.json", io::dump(j));
    run.results()["model"] = o.model;
    run.results()["converged"] = r.converged;
    if (!r.message.empty()) run.results()["message"] = r.message;
    if (!r.converged) warn("fit " + o.model + " did not converge: " + r.message);
}

void cmd_robustness(Run& run, const RobustnessOptions& o) {
    config::RobustnessSetup s = config::robustness(run.config());
    std::vector<std::array<double, 3>> grid;
    if (o.points.empty()) {
        grid = simplex_grid(s.grid_spacing);
    } else {
        for (const auto& p : o.points) {
            auto v = parse_triple(p);
            grid.push_back({v[0], v[1], v[2]});
        }
    }
    run.log("robustness map over " + std::to_string(grid.size()) + " points");
    RobustnessMap map = run_anharmonic_robustness(grid, s.config, s.grid_spacing);
    run.write("robustness.csv", io::robustness_csv(map));

    json& r = run.results();
    r["grid_spacing"] = s.grid_spacing;
    r["grid"] = o.points.empty() ? "barycentric simplex grid over (P0, P1, P2)" : "explicit points";
    r["points"] = map.points.size();
    r["lambda"] = map.lambda;
    r["frequency_hz"] = map.omega / (2.0 * constants::pi);
    r["displacement_m"] = map.displacement;
    r["fitted_lambda"] = s.fitted.lambda();
    r["depth_ratio"] = s.depth_ratio;
    r["displacement_ratio"] = s.displacement_ratio;
    double fmin = 1.0, dmax = 0.0;
    for (const auto& p : map.points) {
        fmin = std::min(fmin, p.fidelity);
        dmax = std::max(dmax, std::abs(p.delta_gamma));
    }
    r["min_fidelity"] = fmin;
    r["max_abs_delta_gamma"] = dmax;
    run.write("report.json", io::dump(r));
}

void cmd_noise_bias(Run& run, const NoiseBiasOptions& o) {
    json& doc = run.config();
    if (!o.levels.empty()) doc["noise_bias"]["levels"] = o.levels;
    if (!o.studies.empty()) doc["noise_bias"]["studies"] = o.studies;
    if (o.simulations > 0) doc["noise_bias"]["simulations"] = o.simulations;
    NoiseBiasStudyConfig cfg = config::noise_bias(doc);
    run.log("noise-bias study: " + std::to_string(cfg.studies.size()) + " studies");
    auto studies = run_noise_bias_study(cfg);
    json& r = run.results();
    for (const auto& st : studies) {
        run.write("noise_bias_" + st.name + ".json", io::dump(io::noise_bias_json(st.table)));
        run.write("noise_bias_" + st.name + ".csv", io::noise_bias_csv(st.table));
        r[st.name] = {{"high_n_spearman_rho", st.table.high_n_trend.rho},
                      {"high_n_p_increasing", st.table.high_n_trend.p_increasing},
                      {"wigner_spearman_rho", st.table.wigner_trend.rho},
                      {"wigner_p_increasing", st.table.wigner_trend.p_increasing}};
    }
}

}  // namespace toftomo::cli
