#include "toftomo/config.hpp"

#include <cmath>
#include <sstream>

#include "toftomo/constants.hpp"
#include "toftomo/errors.hpp"

namespace toftomo::config {

namespace {

const char* type_name(const json& j) {
    if (j.is_boolean()) return "a boolean";
    if (j.is_number()) return "a number";
    if (j.is_string()) return "a string";
    if (j.is_array()) return "an array";
    if (j.is_object()) return "an object";
    return "null";
}

bool same_kind(const json& a, const json& b) {
    if (a.is_number()) return b.is_number();
    if (a.is_boolean()) return b.is_boolean();
    if (a.is_string()) return b.is_string();
    if (a.is_array()) return b.is_array();
    if (a.is_object()) return b.is_object();
    return false;
}

void overlay(json& base, const json& user, const std::string& prefix) {
    for (auto it = user.begin(); it != user.end(); ++it) {
        const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
        if (prefix.empty() && it.key() == "notes") {
            if (!it.value().is_object()) throw ConfigError("notes: expected an object");
            base["notes"] = it.value();
            continue;
        }
        if (!base.contains(it.key())) throw ConfigError(path + ": unknown key");
        json& slot = base[it.key()];
        if (!same_kind(slot, it.value()))
            throw ConfigError(path + ": expected " + std::string(type_name(slot)) + ", got " + type_name(it.value()));
        if (slot.is_object()) {
            overlay(slot, it.value(), path);
        } else {
            slot = it.value();
        }
    }
}

const json& at(const json& doc, const std::string& path) {
    const json* cur = &doc;
    std::size_t start = 0;
    while (start <= path.size()) {
        std::size_t dot = path.find('.', start);
        std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (!cur->is_object() || !cur->contains(key)) throw ConfigError(path + ": missing");
        cur = &(*cur)[key];
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    return *cur;
}

double num(const json& doc, const std::string& path) {
    const json& j = at(doc, path);
    if (!j.is_number()) throw ConfigError(path + ": expected a number");
    double v = j.get<double>();
    if (!std::isfinite(v)) throw ConfigError(path + ": must be finite");
    return v;
}

double positive(const json& doc, const std::string& path) {
    double v = num(doc, path);
    if (!(v > 0.0)) throw ConfigError(path + ": must be positive");
    return v;
}

int integer(const json& doc, const std::string& path) {
    double v = num(doc, path);
    if (v != std::floor(v) || std::abs(v) > 1e9) throw ConfigError(path + ": expected an integer");
    return static_cast<int>(v);
}

bool boolean(const json& doc, const std::string& path) {
    const json& j = at(doc, path);
    if (!j.is_boolean()) throw ConfigError(path + ": expected a boolean");
    return j.get<bool>();
}

std::string str(const json& doc, const std::string& path) {
    const json& j = at(doc, path);
    if (!j.is_string()) throw ConfigError(path + ": expected a string");
    return j.get<std::string>();
}

std::vector<double> numbers(const json& doc, const std::string& path) {
    const json& j = at(doc, path);
    if (!j.is_array()) throw ConfigError(path + ": expected an array");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw ConfigError(path + "[" + std::to_string(i) + "]: expected a number");
        out.push_back(j[i].get<double>());
    }
    return out;
}

// Runs a component constructor or validator and prefixes its message with the config path.
template <class F>
auto checked(const std::string& path, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const ConfigError& e) {
        std::string msg = e.what();
        if (msg.rfind(path, 0) == 0) throw;
        throw ConfigError(path + ": " + msg);
    }
}

ImagingGeometry geometry(const json& doc) {
    ImagingGeometry g;
    g.magnification = num(doc, "imaging.magnification");
    g.flight_time = num(doc, "imaging.flight_time_s");
    g.exposure = num(doc, "imaging.exposure_s");
    g.pixel_pitch = num(doc, "imaging.pixel_pitch_m");
    checked("imaging", [&] { g.validate(); });
    return g;
}

NoiseModel noise(const json& doc) {
    if (!boolean(doc, "noise.enabled")) return NoiseModel::zero();
    NoiseModel n;
    n.cic_rate = num(doc, "noise.cic_rate");
    n.em_gain_mean = num(doc, "noise.em_gain_mean");
    n.readout_sigma = num(doc, "noise.readout_sigma");
    n.offset = num(doc, "noise.offset");
    n.averaged_noise_amplitude = num(doc, "noise.averaged_noise_amplitude");
    n.noise_scale_factor = num(doc, "noise.scale_factor");
    n.column_amplitude = numbers(doc, "noise.column_amplitude");
    checked("noise", [&] { n.validate(); });
    return n;
}

PsfModel psf(const json& doc) {
    PsfModel p{num(doc, "psf.sigma_x_m"), num(doc, "psf.sigma_y_m")};
    checked("psf", [&] { p.validate(); });
    return p;
}

}  // namespace

json defaults() {
    NoiseModel m = NoiseModel::measured();
    json d;
    d["version"] = schema_version;
    d["seed"] = 0;
    d["trap"] = {{"mass_kg", constants::rb87_mass}, {"frequency_hz", 9.05e3}, {"lambda", 0.0}, {"n_max", 25}};
    d["state"] = {{"populations", {0.26, 0.651, 0.089}}, {"displacement_m", 0.0}, {"depth_jump_ratio", 2.0}};
    d["angles"] = {{"count", 64}, {"values_rad", json::array()}};
    d["imaging"] = {{"magnification", 64.0},  {"flight_time_s", 0.5e-3},   {"exposure_s", 10e-6},
                    {"pixel_pitch_m", 16e-6}, {"nx", 181},                 {"ny", 1},
                    {"n_averaged", 11320},    {"total_counts", 565.0},     {"shot_noise", false},
                    {"photons_per_count", 0.0124}};
    d["psf"] = {{"sigma_x_m", 445e-9}, {"sigma_y_m", 328e-9}};
    d["noise"] = {{"enabled", true},
                  {"cic_rate", m.cic_rate},
                  {"em_gain_mean", m.em_gain_mean},
                  {"readout_sigma", m.readout_sigma},
                  {"offset", m.offset},
                  {"averaged_noise_amplitude", m.averaged_noise_amplitude},
                  {"scale_factor", m.noise_scale_factor},
                  {"column_amplitude", json::array()}};
    d["processing"] = {{"blur", true},
                       {"subtract_background", true},
                       {"deconvolve", true},
                       {"rl_iterations", rl_defaults::iterations},
                       {"rl_filter_floor", rl_defaults::filter_floor},
                       {"recenter", false}};
    d["mle"] = {{"tolerance", 1e-4}, {"max_iterations", 500}, {"initial", "maximally_mixed"},
                {"monotone_safeguard", true}, {"bin_average", false}};
    d["wigner"] = {{"extent", 6.0}, {"points", 121}};
    d["bootstrap"] = {{"replicas", 50}, {"max_failure_fraction", 0.2}, {"include_replicas", false}};
    d["robustness"] = {{"fitted_frequency_hz", 8.50e3},
                       {"fitted_lambda", -0.0037},
                       {"fitted_displacement_m", 166e-9},
                       {"depth_ratio", 1.5},
                       {"displacement_ratio", 140.0 / 180.0},
                       {"depth_jump_ratio", 1.0},
                       {"angles", 64},
                       {"u_min", -8.0},
                       {"u_max", 8.0},
                       {"u_points", 201},
                       {"grid_spacing", 0.05},
                       {"wigner_points", 61}};
    d["noise_bias"] = {{"levels", {0.0, 0.5, 1.0, 2.0, 4.0, 8.0}},
                       {"simulations", 50},
                       {"angles_n0", 9},
                       {"angles_n1", 64},
                       {"displacement_n0_m", 166e-9},
                       {"displacement_n1_m", 129e-9},
                       {"studies", {"displaced-n0", "squeezed-n1", "displaced-squeezed-n1"}},
                       {"blur", false},
                       {"deconvolve", false}};
    d["fitting"] = {{"gravity_m_per_s2", constants::gravity}, {"lambda_bound", 0.05}};
    return d;
}

json resolve(const json& user) {
    if (!user.is_object()) throw ConfigError("config: expected a JSON object at the top level");
    json doc = defaults();
    if (user.contains("version")) {
        if (!user["version"].is_number_integer() || user["version"].get<int>() != schema_version)
            throw ConfigError("version: unsupported schema version (expected " + std::to_string(schema_version) + ")");
    }
    overlay(doc, user, "");
    return doc;
}

json resolve_file(const io::fs::path& path) {
    std::string text;
    try {
        text = io::read_text(path);
    } catch (const DataError& e) {
        throw ConfigError(e.what());
    }
    json user;
    try {
        user = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return resolve(user);
}

void apply_override(json& doc, const std::string& assignment) {
    auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "': expected key=value");
    std::string path = assignment.substr(0, eq);
    std::string text = assignment.substr(eq + 1);
    json value;
    try {
        value = json::parse(text);
    } catch (const json::parse_error&) {
        value = text;
    }
    // build a nested patch and overlay it so that the same key and type checks apply
    json patch = value;
    std::vector<std::string> keys;
    std::size_t start = 0;
    while (true) {
        std::size_t dot = path.find('.', start);
        keys.push_back(path.substr(start, dot == std::string::npos ? std::string::npos : dot - start));
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    for (auto it = keys.rbegin(); it != keys.rend(); ++it) {
        json wrap = json::object();
        wrap[*it] = patch;
        patch = wrap;
    }
    overlay(doc, patch, "");
}

OscillatorSpec spec(const json& doc) {
    double mass = positive(doc, "trap.mass_kg");
    double f = positive(doc, "trap.frequency_hz");
    int n_max = integer(doc, "trap.n_max");
    return checked("trap.n_max", [&] { return OscillatorSpec(mass, 2.0 * constants::pi * f, n_max); });
}

TrapModel trap(const json& doc) {
    OscillatorSpec s = spec(doc);
    double lambda = num(doc, "trap.lambda");
    return checked("trap.lambda", [&] { return TrapModel(s, lambda); });
}

MleConfig mle(const json& doc) {
    MleConfig m;
    m.n_max = integer(doc, "trap.n_max");
    m.tolerance = num(doc, "mle.tolerance");
    m.max_iterations = integer(doc, "mle.max_iterations");
    std::string init = str(doc, "mle.initial");
    if (init == "maximally_mixed") {
        m.initial = InitialState::maximally_mixed;
    } else if (init == "all_ones") {
        m.initial = InitialState::all_ones;
    } else {
        throw ConfigError("mle.initial: expected 'maximally_mixed' or 'all_ones'");
    }
    m.monotone_safeguard = boolean(doc, "mle.monotone_safeguard");
    m.bin_average = boolean(doc, "mle.bin_average");
    checked("mle", [&] { m.validate(); });
    return m;
}

MeasurementChain chain(const json& doc) {
    MeasurementChain c;
    c.geometry = geometry(doc);
    c.grid = {integer(doc, "imaging.nx"), integer(doc, "imaging.ny")};
    c.psf = psf(doc);
    c.noise = noise(doc);
    c.n_averaged = integer(doc, "imaging.n_averaged");
    c.total_counts = num(doc, "imaging.total_counts");
    c.shot_noise = boolean(doc, "imaging.shot_noise");
    c.photons_per_count = num(doc, "imaging.photons_per_count");
    c.blur = boolean(doc, "processing.blur");
    c.subtract_background = boolean(doc, "processing.subtract_background");
    c.deconvolve = boolean(doc, "processing.deconvolve");
    c.rl_iterations = integer(doc, "processing.rl_iterations");
    c.rl_filter_floor = num(doc, "processing.rl_filter_floor");
    c.recenter = boolean(doc, "processing.recenter");
    checked("imaging", [&] { c.validate(); });
    return c;
}

ScenarioConfig scenario(const json& doc) {
    ScenarioConfig c;
    c.trap = trap(doc);
    auto pops = numbers(doc, "state.populations");
    if (pops.size() != 3) throw ConfigError("state.populations: expected three values (P0, P1, P2)");
    c.mixture = checked("state.populations", [&] { return MixtureSpec(pops[0], pops[1], pops[2]); });
    c.displacement = num(doc, "state.displacement_m");
    c.depth_jump_ratio = num(doc, "state.depth_jump_ratio");
    auto values = numbers(doc, "angles.values_rad");
    if (!values.empty()) {
        c.angles = values;
    } else {
        int count = integer(doc, "angles.count");
        if (count < 1) throw ConfigError("angles.count: must be at least 1");
        c.angles = uniform_angles(count);
    }
    c.chain = chain(doc);
    c.mle = mle(doc);
    c.seed = seed(doc);
    c.wigner_extent = num(doc, "wigner.extent");
    c.wigner_points = integer(doc, "wigner.points");
    checked("state", [&] { c.validate(); });
    return c;
}

BootstrapConfig bootstrap(const json& doc) {
    MeasurementChain c = chain(doc);
    BootstrapConfig b;
    b.n_replicas = integer(doc, "bootstrap.replicas");
    b.noise = c.noise;
    b.rl_iterations = c.rl_iterations;
    b.rl_filter_floor = c.rl_filter_floor;
    b.seed = seed(doc);
    b.pipeline_geometry = c.geometry;
    b.psf = c.psf;
    b.grid_nx = c.grid.nx;
    b.n_averaged = c.n_averaged;
    b.total_counts = c.total_counts;
    b.blur = c.blur;
    b.deconvolve = c.deconvolve;
    b.shot_noise = c.shot_noise;
    b.max_failure_fraction = num(doc, "bootstrap.max_failure_fraction");
    b.wigner_extent = num(doc, "wigner.extent");
    b.wigner_points = integer(doc, "wigner.points");
    checked("bootstrap", [&] { b.validate(); });
    return b;
}

std::uint64_t seed(const json& doc) {
    const json& j = at(doc, "seed");
    if (j.is_number_unsigned()) return j.get<std::uint64_t>();
    if (j.is_number_integer() && j.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(j.get<std::int64_t>());
    throw ConfigError("seed: expected a nonnegative integer");
}

int bootstrap_replicas(const json& doc) { return integer(doc, "bootstrap.replicas"); }

RobustnessSetup robustness(const json& doc) {
    const double mass = positive(doc, "trap.mass_kg");
    const int n_max = integer(doc, "trap.n_max");
    OscillatorSpec fitted_spec = checked("trap.n_max", [&] {
        return OscillatorSpec(mass, 2.0 * constants::pi * positive(doc, "robustness.fitted_frequency_hz"), n_max);
    });
    double lambda = num(doc, "robustness.fitted_lambda");
    RobustnessSetup s{RobustnessConfig{}, num(doc, "robustness.grid_spacing"),
                      checked("robustness.fitted_lambda", [&] { return TrapModel(fitted_spec, lambda); }),
                      num(doc, "robustness.fitted_displacement_m"), positive(doc, "robustness.depth_ratio"),
                      positive(doc, "robustness.displacement_ratio")};
    auto r = checked("robustness", [&] {
        return rescale_fitted_trap(s.fitted, s.fitted_displacement, s.depth_ratio, s.displacement_ratio);
    });
    s.config.trap = r.trap;
    s.config.displacement = r.displacement;
    s.config.depth_jump_ratio = positive(doc, "robustness.depth_jump_ratio");
    int angles = integer(doc, "robustness.angles");
    if (angles < 1) throw ConfigError("robustness.angles: must be at least 1");
    s.config.angles = uniform_angles(angles);
    int points = integer(doc, "robustness.u_points");
    double lo = num(doc, "robustness.u_min"), hi = num(doc, "robustness.u_max");
    if (points < 2 || !(hi > lo)) throw ConfigError("robustness.u_points: need at least two points with u_max > u_min");
    s.config.u_grid = linspace(lo, hi, points);
    s.config.mle = mle(doc);
    s.config.wigner_extent = num(doc, "wigner.extent");
    s.config.wigner_points = integer(doc, "robustness.wigner_points");
    checked("robustness.grid_spacing", [&] { simplex_grid(s.grid_spacing); });
    return s;
}

NoiseBiasStudyConfig noise_bias(const json& doc) {
    NoiseBiasStudyConfig c;
    c.spec = spec(doc);
    c.displacement_n0 = num(doc, "noise_bias.displacement_n0_m");
    c.displacement_n1 = num(doc, "noise_bias.displacement_n1_m");
    c.levels = numbers(doc, "noise_bias.levels");
    c.simulations = integer(doc, "noise_bias.simulations");
    c.angles_n0 = integer(doc, "noise_bias.angles_n0");
    c.angles_n1 = integer(doc, "noise_bias.angles_n1");
    c.bootstrap = bootstrap(doc);
    c.bootstrap.blur = boolean(doc, "noise_bias.blur");
    c.bootstrap.deconvolve = boolean(doc, "noise_bias.deconvolve");
    c.mle = mle(doc);
    c.studies.clear();
    const json& st = at(doc, "noise_bias.studies");
    for (std::size_t i = 0; i < st.size(); ++i) {
        if (!st[i].is_string()) throw ConfigError("noise_bias.studies[" + std::to_string(i) + "]: expected a string");
        std::string name = st[i].get<std::string>();
        checked("noise_bias.studies", [&] { noise_bias_base_state(name, c); });
        c.studies.push_back(name);
    }
    if (c.simulations < 1) throw ConfigError("noise_bias.simulations: must be at least 1");
    if (c.angles_n0 < 1 || c.angles_n1 < 1) throw ConfigError("noise_bias.angles_n0: angle counts must be positive");
    return c;
}

}  // namespace toftomo::config
