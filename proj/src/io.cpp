#include "toftomo/io.hpp"

#include <atomic>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <unistd.h>

#include "toftomo/errors.hpp"

namespace toftomo::io {

namespace {

std::atomic<unsigned> tmp_counter{0};

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line, char sep = ',') {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, sep)) out.push_back(trim(cell));
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

double parse_double(const std::string& s, const fs::path& path, int line) {
    const char* begin = s.c_str();
    char* end = nullptr;
    errno = 0;
    double v = std::strtod(begin, &end);
    if (s.empty() || end != begin + s.size() || errno == ERANGE || !std::isfinite(v)) {
        std::ostringstream os;
        os << path.string() << ":" << line << ": not a finite number '" << s << "'";
        throw DataError(os.str());
    }
    return v;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
    std::vector<int> line_numbers;
};

// Reads a numeric CSV; when `header` is non-empty the first line must match one of its prefixes.
CsvTable read_csv(const fs::path& path, const std::vector<std::string>& header, std::size_t min_cols) {
    std::istringstream in(read_text(path));
    CsvTable t;
    std::string line;
    int n = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++n;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        auto cells = split(line);
        if (first && !header.empty()) {
            first = false;
            for (std::size_t i = 0; i < cells.size(); ++i) {
                if (i >= header.size() || cells[i] != header[i]) {
                    std::ostringstream os;
                    os << path.string() << ":" << n << ": expected header starting with";
                    for (std::size_t k = 0; k < min_cols; ++k) os << (k ? "," : " ") << header[k];
                    throw DataError(os.str());
                }
            }
            if (cells.size() < min_cols) throw DataError(path.string() + ": header has too few columns");
            t.header = cells;
            continue;
        }
        first = false;
        std::size_t want = header.empty() ? cells.size() : t.header.size();
        if (cells.size() != want) {
            std::ostringstream os;
            os << path.string() << ":" << n << ": expected " << want << " columns, found " << cells.size();
            throw DataError(os.str());
        }
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) row.push_back(parse_double(c, path, n));
        t.rows.push_back(std::move(row));
        t.line_numbers.push_back(n);
    }
    return t;
}

fs::path meta_path(const fs::path& p) { return fs::path(p.string() + ".meta"); }

RMatrix matrix_from_json(const json& j, const char* name) {
    if (!j.is_array() || j.empty()) throw DataError(std::string(name) + " must be a non-empty array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    RMatrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        if (!j[r].is_array() || static_cast<Eigen::Index>(j[r].size()) != cols)
            throw DataError(std::string(name) + " rows must have equal length");
        for (Eigen::Index c = 0; c < cols; ++c) {
            if (!j[r][c].is_number()) throw DataError(std::string(name) + " entries must be numbers");
            m(r, c) = j[r][c].get<double>();
        }
    }
    return m;
}

json matrix_json(const RMatrix& m) {
    json out = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        out.push_back(std::move(row));
    }
    return out;
}

json vec_json(const std::vector<double>& v) { return json(v); }

// JSON has no NaN or infinity; they are written as null.
json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json nums(const std::vector<double>& v) {
    json out = json::array();
    for (double x : v) out.push_back(num(x));
    return out;
}

json matrix_nums(const RMatrix& m) {
    json out = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(num(m(r, c)));
        out.push_back(std::move(row));
    }
    return out;
}

}  // namespace

void write_atomic(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ostringstream name;
    name << path.filename().string() << ".tmp-" << ::getpid() << "-" << tmp_counter++;
    fs::path tmp = path.parent_path() / name.str();
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot open " + tmp.string() + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            std::error_code ec;
            fs::remove(tmp, ec);
            throw DataError("failed writing " + tmp.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw DataError("cannot move " + tmp.string() + " to " + path.string());
    }
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_image(const fs::path& path, const ImageFrame& frame) {
    std::string grid;
    for (Eigen::Index r = 0; r < frame.counts.rows(); ++r) {
        for (Eigen::Index c = 0; c < frame.counts.cols(); ++c) {
            if (c) grid += ',';
            grid += format_double(frame.counts(r, c));
        }
        grid += '\n';
    }
    std::ostringstream meta;
    meta << "magnification=" << format_double(frame.geometry.magnification) << "\n"
         << "flight_time_s=" << format_double(frame.geometry.flight_time) << "\n"
         << "exposure_s=" << format_double(frame.geometry.exposure) << "\n"
         << "pixel_pitch_m=" << format_double(frame.geometry.pixel_pitch) << "\n"
         << "n_averaged=" << frame.n_averaged << "\n";
    write_atomic(path, grid);
    write_atomic(meta_path(path), meta.str());
}

ImageFrame read_image(const fs::path& path) {
    CsvTable t = read_csv(path, {}, 0);
    if (t.rows.empty()) throw DataError(path.string() + ": image has no rows");
    ImageFrame f;
    f.counts.resize(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(t.rows[0].size()));
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        if (t.rows[r].size() != t.rows[0].size())
            throw DataError(path.string() + ":" + std::to_string(t.line_numbers[r]) + ": ragged image row");
        for (std::size_t c = 0; c < t.rows[r].size(); ++c)
            f.counts(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = t.rows[r][c];
    }

    fs::path mp = meta_path(path);
    std::istringstream in(read_text(mp));
    std::map<std::string, std::string> kv;
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        ++n;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw DataError(mp.string() + ":" + std::to_string(n) + ": expected key=value");
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    static const std::set<std::string> keys{"magnification", "flight_time_s", "exposure_s", "pixel_pitch_m",
                                            "n_averaged"};
    for (const auto& [k, v] : kv)
        if (!keys.count(k)) throw DataError(mp.string() + ": unknown key '" + k + "'");
    for (const auto& k : keys)
        if (!kv.count(k)) throw DataError(mp.string() + ": missing key '" + k + "'");
    f.geometry.magnification = parse_double(kv["magnification"], mp, 0);
    f.geometry.flight_time = parse_double(kv["flight_time_s"], mp, 0);
    f.geometry.exposure = parse_double(kv["exposure_s"], mp, 0);
    f.geometry.pixel_pitch = parse_double(kv["pixel_pitch_m"], mp, 0);
    double na = parse_double(kv["n_averaged"], mp, 0);
    if (na < 1 || na != std::floor(na)) throw DataError(mp.string() + ": n_averaged must be a positive integer");
    f.n_averaged = static_cast<int>(na);
    try {
        f.validate();
    } catch (const std::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    return f;
}

std::string quadrature_csv(const std::vector<BinnedQuadrature>& per_angle) {
    std::string s = "theta_rad,u,weight\n";
    for (const auto& q : per_angle)
        for (std::size_t i = 0; i < q.u.size(); ++i)
            s += format_double(q.theta) + "," + format_double(q.u[i]) + "," + format_double(q.weights[i]) + "\n";
    return s;
}

void write_quadrature(const fs::path& path, const std::vector<BinnedQuadrature>& per_angle) {
    write_atomic(path, quadrature_csv(per_angle));
}

void write_quadrature(const fs::path& path, const QuadratureDataset& data) {
    std::string s = "theta_rad,u,weight\n";
    for (const auto& r : data.records())
        s += format_double(r.theta) + "," + format_double(r.u) + "," + format_double(r.weight) + "\n";
    write_atomic(path, s);
}

std::vector<BinnedQuadrature> read_binned(const fs::path& path) {
    CsvTable t = read_csv(path, {"theta_rad", "u", "weight"}, 3);
    if (t.header.size() != 3) throw DataError(path.string() + ": expected exactly theta_rad,u,weight");
    if (t.rows.empty()) throw DataError(path.string() + ": no quadrature records");
    std::vector<BinnedQuadrature> out;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& r = t.rows[i];
        if (r[2] < 0.0)
            throw DataError(path.string() + ":" + std::to_string(t.line_numbers[i]) + ": negative weight");
        if (out.empty() || out.back().theta != r[0]) {
            BinnedQuadrature q;
            q.theta = r[0];
            out.push_back(q);
        }
        out.back().u.push_back(r[1]);
        out.back().weights.push_back(r[2]);
    }
    double width = 0.0;
    for (auto& q : out) {
        std::vector<double> u = q.u;
        std::sort(u.begin(), u.end());
        double w = 0.0;
        for (std::size_t i = 1; i < u.size(); ++i) {
            double d = u[i] - u[i - 1];
            if (d > 0.0 && (w == 0.0 || d < w)) w = d;
        }
        if (w > 0.0 && (width == 0.0 || w < width)) width = w;
    }
    if (!(width > 0.0)) throw DataError(path.string() + ": cannot infer a bin width from a single u value per angle");
    for (auto& q : out) q.bin_width = width;
    return out;
}

QuadratureDataset read_quadrature(const fs::path& path) { return QuadratureDataset::from_binned(read_binned(path)); }

void write_time_series(const fs::path& path, const TimeSeries& s) {
    s.validate();
    std::string out = s.y_err.empty() ? "t_s,value\n" : "t_s,value,error\n";
    for (std::size_t i = 0; i < s.size(); ++i) {
        out += format_double(s.t[i]) + "," + format_double(s.y[i]);
        if (!s.y_err.empty()) out += "," + format_double(s.y_err[i]);
        out += "\n";
    }
    write_atomic(path, out);
}

TimeSeries read_time_series(const fs::path& path) {
    CsvTable t = read_csv(path, {"t_s", "value", "error"}, 2);
    TimeSeries s;
    for (const auto& r : t.rows) {
        s.t.push_back(r[0]);
        s.y.push_back(r[1]);
        if (r.size() == 3) s.y_err.push_back(r[2]);
    }
    try {
        s.validate();
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    return s;
}

json density_json(const DensityMatrix& rho) {
    json j;
    j["n_max"] = rho.n_max();
    j["real"] = matrix_json(rho.matrix().real());
    j["imag"] = matrix_json(rho.matrix().imag());
    return j;
}

DensityMatrix density_from_json(const json& j) {
    if (!j.is_object() || !j.contains("real") || !j.contains("imag"))
        throw DataError("density matrix JSON needs 'real' and 'imag' matrices");
    RMatrix re = matrix_from_json(j["real"], "real");
    RMatrix im = matrix_from_json(j["imag"], "imag");
    if (re.rows() != re.cols() || im.rows() != re.rows() || im.cols() != re.cols())
        throw DataError("density matrix parts must be square and of equal size");
    if (j.contains("n_max") && j["n_max"].get<int>() != re.rows() - 1)
        throw DataError("n_max does not match the matrix size");
    CMatrix m(re.rows(), re.cols());
    m.real() = re;
    m.imag() = im;
    try {
        return DensityMatrix(m, 1e-8);
    } catch (const std::exception& e) {
        throw DataError(std::string("density matrix is not physical: ") + e.what());
    }
}

json mle_json(const MleResult& r) {
    json j = density_json(r.rho);
    j["iterations_used"] = r.iterations_used;
    j["converged"] = r.converged;
    j["final_step"] = r.final_step;
    j["log_likelihood"] = r.log_likelihood_trace.empty() ? json(nullptr) : json(r.log_likelihood_trace.back());
    j["diluted_steps"] = r.diluted_steps;
    j["weights_clamped"] = r.weights_clamped;
    return j;
}

DensityMatrix read_density(const fs::path& path) {
    json j;
    try {
        j = json::parse(read_text(path));
    } catch (const json::parse_error& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    try {
        return density_from_json(j);
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

std::string wigner_csv(const WignerGrid& w) {
    std::string s = "x,p,w\n";
    for (std::size_t ip = 0; ip < w.p_axis.size(); ++ip)
        for (std::size_t ix = 0; ix < w.x_axis.size(); ++ix)
            s += format_double(w.x_axis[ix]) + "," + format_double(w.p_axis[ip]) + "," +
                 format_double(w.values(static_cast<Eigen::Index>(ip), static_cast<Eigen::Index>(ix))) + "\n";
    return s;
}

std::string hinton_csv(const DensityMatrix& rho) {
    std::string s = "m,n,real,imag,magnitude,phase_rad\n";
    const CMatrix& m = rho.matrix();
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            s += std::to_string(r) + "," + std::to_string(c) + "," + format_double(m(r, c).real()) + "," +
                 format_double(m(r, c).imag()) + "," + format_double(std::abs(m(r, c))) + "," +
                 format_double(std::arg(m(r, c))) + "\n";
    return s;
}

json fit_json(const FitResult& r) {
    json j;
    j["names"] = r.names;
    j["values"] = nums(r.values);
    j["errors"] = nums(r.errors);
    j["covariance"] = matrix_nums(r.covariance);
    j["residual_norm"] = num(r.residual_norm);
    j["converged"] = r.converged;
    j["message"] = r.message;
    json d = json::object();
    for (std::size_t i = 0; i < r.derived_names.size(); ++i)
        d[r.derived_names[i]] = {{"value", num(r.derived_values[i])}, {"error", num(r.derived_errors[i])}};
    j["derived"] = d;
    return j;
}

json bootstrap_json(const BootstrapReport& r, bool include_replicas) {
    json j;
    j["n_replicas"] = r.replica_rhos.size();
    j["replica_indices"] = r.replica_indices;
    j["negativity"] = {{"mean", r.negativity_mean},
                       {"std", r.negativity_std},
                       {"p025", r.negativity_p025},
                       {"p975", r.negativity_p975},
                       {"per_replica", r.negativities}};
    j["fidelity_to_input"] = r.fidelities;
    j["converged"] = r.converged;
    json f = json::array();
    for (const auto& x : r.failures) f.push_back({{"index", x.index}, {"message", x.message}});
    j["failures"] = f;
    j["populations"] = {{"mean", vec_json(r.population_mean)},
                        {"std", vec_json(r.population_std)},
                        {"p025", vec_json(r.population_p025)},
                        {"p975", vec_json(r.population_p975)}};
    j["elements"] = {{"real_mean", matrix_json(r.real_mean)}, {"real_std", matrix_json(r.real_std)},
                     {"imag_mean", matrix_json(r.imag_mean)}, {"imag_std", matrix_json(r.imag_std)},
                     {"real_p025", matrix_json(r.real_p025)}, {"real_p975", matrix_json(r.real_p975)}};
    if (include_replicas) {
        json reps = json::array();
        for (const auto& rho : r.replica_rhos) reps.push_back(density_json(rho));
        j["replicas"] = reps;
    }
    return j;
}

json noise_bias_json(const NoiseBiasTable& t) {
    json j;
    j["base_populations"] = t.base_populations;
    j["wigner_minimum"] = {{"x", t.x_m}, {"p", t.p_m}, {"value", t.true_wigner_min}};
    j["high_n_threshold"] = t.high_n_threshold;
    json levels = json::array();
    for (const auto& l : t.levels) {
        levels.push_back({{"sigma_counts", l.sigma},
                          {"simulations", l.populations.size()},
                          {"failures", l.failures},
                          {"population_mean", l.population_mean},
                          {"population_p025", l.population_p025},
                          {"population_p975", l.population_p975},
                          {"high_n_mean", l.high_n_mean},
                          {"high_n_p025", l.high_n_p025},
                          {"high_n_p975", l.high_n_p975},
                          {"wigner_mean", l.wigner_mean},
                          {"wigner_p025", l.wigner_p025},
                          {"wigner_p975", l.wigner_p975}});
    }
    j["levels"] = levels;
    auto trend = [](const stats::Spearman& s) {
        return json{{"rho", s.rho}, {"p_two_sided", s.p_two_sided}, {"p_increasing", s.p_increasing}, {"n", s.n}};
    };
    j["high_n_trend"] = trend(t.high_n_trend);
    j["wigner_trend"] = trend(t.wigner_trend);
    return j;
}

std::string noise_bias_csv(const NoiseBiasTable& t) {
    std::string s = "sigma_counts,simulations,high_n_mean,high_n_p025,high_n_p975,wigner_mean,wigner_p025,wigner_p975";
    const std::size_t dim = t.base_populations.size();
    for (std::size_t n = 0; n < dim; ++n) s += ",p" + std::to_string(n) + "_mean";
    s += "\n";
    for (const auto& l : t.levels) {
        s += format_double(l.sigma) + "," + std::to_string(l.populations.size()) + "," + format_double(l.high_n_mean) +
             "," + format_double(l.high_n_p025) + "," + format_double(l.high_n_p975) + "," +
             format_double(l.wigner_mean) + "," + format_double(l.wigner_p025) + "," + format_double(l.wigner_p975);
        for (std::size_t n = 0; n < dim; ++n)
            s += "," + (n < l.population_mean.size() ? format_double(l.population_mean[n]) : std::string("nan"));
        s += "\n";
    }
    return s;
}

std::string robustness_csv(const RobustnessMap& m) {
    std::string s = "p0,p1,p2,fidelity,gamma,gamma_mle,delta_gamma,iterations,converged\n";
    for (const auto& p : m.points) {
        s += format_double(p.populations[0]) + "," + format_double(p.populations[1]) + "," +
             format_double(p.populations[2]) + "," + format_double(p.fidelity) + "," + format_double(p.gamma) + "," +
             format_double(p.gamma_mle) + "," + format_double(p.delta_gamma) + "," + std::to_string(p.iterations) +
             "," + (p.converged ? "1" : "0") + "\n";
    }
    return s;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace toftomo::io
