#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "toftomo/config.hpp"
#include "toftomo/dynamics.hpp"
#include "toftomo/errors.hpp"
#include "toftomo/fitting.hpp"
#include "toftomo/mle.hpp"
#include "toftomo/parallel.hpp"
#include "toftomo/version.hpp"

namespace py = pybind11;
using namespace toftomo;

namespace {

py::dict fit_dict(const FitResult& r) {
    py::dict d;
    d["names"] = r.names;
    d["values"] = r.values;
    d["errors"] = r.errors;
    d["covariance"] = r.covariance;
    d["converged"] = r.converged;
    d["message"] = r.message;
    py::dict derived;
    for (std::size_t i = 0; i < r.derived_names.size(); ++i)
        derived[py::str(r.derived_names[i])] = py::make_tuple(r.derived_values[i], r.derived_errors[i]);
    d["derived"] = derived;
    return d;
}

TimeSeries series(std::vector<double> t, std::vector<double> y, std::vector<double> err) {
    TimeSeries s{std::move(t), std::move(y), std::move(err)};
    s.validate();
    return s;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Time-of-flight quantum state tomography core";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

    m.def("version", &version);
    m.def("set_thread_count", &set_thread_count, py::arg("n"));
    m.attr("RB87_MASS") = constants::rb87_mass;

    py::class_<OscillatorSpec>(m, "OscillatorSpec")
        .def(py::init<double, double, int>(), py::arg("mass"), py::arg("omega"), py::arg("n_max") = default_n_max)
        .def_property_readonly("mass", &OscillatorSpec::mass)
        .def_property_readonly("omega", &OscillatorSpec::omega)
        .def_property_readonly("n_max", &OscillatorSpec::n_max)
        .def_property_readonly("x0", &OscillatorSpec::x0)
        .def_property_readonly("p0", &OscillatorSpec::p0);

    py::class_<DensityMatrix>(m, "DensityMatrix")
        .def(py::init<const CMatrix&, double>(), py::arg("elements"), py::arg("tol") = 1e-10)
        .def_static("fock", &DensityMatrix::fock, py::arg("n"), py::arg("dim"))
        .def_static("diagonal", &DensityMatrix::diagonal, py::arg("populations"), py::arg("dim"))
        .def_static("nearest_physical", &DensityMatrix::nearest_physical)
        .def_property_readonly("matrix", &DensityMatrix::matrix)
        .def_property_readonly("dim", &DensityMatrix::dim)
        .def_property_readonly("n_max", &DensityMatrix::n_max)
        .def("purity", &DensityMatrix::purity)
        .def("populations", &DensityMatrix::populations);

    m.def("fidelity", &fidelity);
    m.def("trace_distance", &trace_distance);
    m.def("wigner", [](const DensityMatrix& rho, const std::vector<double>& x, const std::vector<double>& p) {
        return wigner(rho, x, p).values;
    }, py::arg("rho"), py::arg("x"), py::arg("p"), "W(x, p) as an array indexed [i_p, i_x]");
    m.def("wigner_minimum", [](const DensityMatrix& rho, double extent, int points) {
        Negativity n = wigner_minimum(rho, extent, points);
        return py::make_tuple(n.value, n.x, n.p);
    }, py::arg("rho"), py::arg("extent") = 6.0, py::arg("points") = 121);

    py::class_<TrapModel>(m, "TrapModel")
        .def(py::init<OscillatorSpec, double>(), py::arg("spec"), py::arg("lambda_") = 0.0)
        .def_property_readonly("spec", &TrapModel::spec)
        .def_property_readonly("lambda_", &TrapModel::lambda);
    m.def("prepare_state", [](std::array<double, 3> pops, const TrapModel& trap, double x_i, double depth_jump_ratio) {
        return prepare_state(MixtureSpec(pops[0], pops[1], pops[2]), trap, x_i, depth_jump_ratio);
    }, py::arg("populations"), py::arg("trap"), py::arg("x_i") = 0.0, py::arg("depth_jump_ratio") = 1.0);
    m.def("evolve", [](const DensityMatrix& rho, const TrapModel& trap, double t) { return evolve(rho, trap, t).rho_t; });
    m.def("quadrature_distribution", &quadrature_distribution, py::arg("rho"), py::arg("theta"), py::arg("u"),
          py::arg("spec"));

    m.def("uniform_angles", &uniform_angles);
    m.def("synthesize_dataset", [](const DensityMatrix& rho, const std::vector<double>& angles,
                                   const std::vector<double>& u) {
        auto d = synthesize_dataset(rho, angles, u);
        std::vector<double> th, uu, w;
        for (const auto& r : d.records()) {
            th.push_back(r.theta);
            uu.push_back(r.u);
            w.push_back(r.weight);
        }
        return py::make_tuple(th, uu, w);
    });
    m.def("reconstruct", [](const std::vector<double>& theta, const std::vector<double>& u,
                            const std::vector<double>& weight, double bin_width, const OscillatorSpec& spec,
                            double tol, int max_iter) {
        if (theta.size() != u.size() || u.size() != weight.size())
            throw ArgumentError("theta, u and weight must have equal lengths");
        std::vector<QuadratureRecord> recs;
        for (std::size_t i = 0; i < theta.size(); ++i) recs.push_back({theta[i], u[i], weight[i]});
        MleConfig cfg;
        cfg.n_max = spec.n_max();
        cfg.tolerance = tol;
        cfg.max_iterations = max_iter;
        MleResult r = reconstruct(QuadratureDataset(std::move(recs), bin_width), cfg, spec);
        py::dict d;
        d["rho"] = r.rho;
        d["iterations_used"] = r.iterations_used;
        d["converged"] = r.converged;
        d["log_likelihood"] = r.log_likelihood_trace;
        return d;
    }, py::arg("theta"), py::arg("u"), py::arg("weight"), py::arg("bin_width"), py::arg("spec"),
       py::arg("tol") = 1e-4, py::arg("max_iter") = 500);

    m.def("ballistic_sigma", &ballistic_sigma, py::arg("e_ke"), py::arg("t"), py::arg("sigma0"),
          py::arg("mass") = constants::rb87_mass);
    m.def("fit_damped_sinusoid", [](std::vector<double> t, std::vector<double> y, std::vector<double> err) {
        return fit_dict(fit_damped_sinusoid(series(std::move(t), std::move(y), std::move(err))));
    }, py::arg("t"), py::arg("y"), py::arg("error") = std::vector<double>{});
    m.def("fit_ballistic", [](std::vector<double> t, std::vector<double> y, std::vector<double> err, double mass) {
        return fit_dict(fit_ballistic(series(std::move(t), std::move(y), std::move(err)), mass));
    }, py::arg("t"), py::arg("sigma"), py::arg("error") = std::vector<double>{}, py::arg("mass") = constants::rb87_mass);
    m.def("fit_gravity_drop", [](std::vector<double> t, std::vector<double> y, std::vector<double> err, double g) {
        return fit_dict(fit_gravity_drop(series(std::move(t), std::move(y), std::move(err)), g));
    }, py::arg("t"), py::arg("y"), py::arg("error") = std::vector<double>{}, py::arg("g") = constants::gravity);
    m.def("anharmonic_significance", &anharmonic_significance);

    m.def("default_config", [] { return config::defaults().dump(); }, "Built-in defaults as a JSON string");
    m.def("resolve_config", [](const std::string& text) {
        return config::resolve(config::json::parse(text)).dump();
    }, "Validate a JSON config string against the schema and return it with defaults filled in");
}
