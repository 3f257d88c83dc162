#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fracldp/cli.hpp"
#include "fracldp/errors.hpp"
#include "fracldp/rate.hpp"
#include "fracldp/skeleton.hpp"
#include "fracldp/stochastic.hpp"

namespace py = pybind11;
using namespace fracldp;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Field to_field(const GridSpec& g, const Array& a) {
    if (static_cast<std::size_t>(a.size()) != g.size())
        throw ShapeError("expected " + std::to_string(g.size()) + " grid values, got " + std::to_string(a.size()));
    return Field(g, std::vector<double>(a.data(), a.data() + a.size()));
}

Array from_field(const Field& f) {
    Array out(static_cast<py::ssize_t>(f.size()));
    std::copy(f.values().begin(), f.values().end(), out.mutable_data());
    return out;
}

Array from_trajectory(const Trajectory& tr) {
    const std::size_t n = tr.size(), m = tr.empty() ? 0 : tr.front().size();
    Array out({static_cast<py::ssize_t>(n), static_cast<py::ssize_t>(m)});
    for (std::size_t i = 0; i < n; ++i) std::copy(tr[i].values().begin(), tr[i].values().end(), out.mutable_data() + i * m);
    return out;
}

Trajectory to_trajectory(const GridSpec& g, const Array& a) {
    if (a.ndim() != 2 || static_cast<std::size_t>(a.shape(1)) != g.size())
        throw ShapeError("path must have shape (n_steps + 1, grid size)");
    Trajectory tr;
    for (py::ssize_t i = 0; i < a.shape(0); ++i)
        tr.emplace_back(g, std::vector<double>(a.data() + i * a.shape(1), a.data() + (i + 1) * a.shape(1)));
    return tr;
}

Control to_control(const TimeGrid& tg, int K, const std::optional<Array>& a) {
    if (!a) return Control(tg, K);
    if (a->ndim() != 2 || a->shape(0) != tg.n_steps || a->shape(1) != K)
        throw ShapeError("control must have shape (n_steps, n_modes) = (" + std::to_string(tg.n_steps) + ", " +
                         std::to_string(K) + ")");
    return Control(tg, K, std::vector<double>(a->data(), a->data() + a->size()));
}

Array from_control(const Control& v) {
    Array out({static_cast<py::ssize_t>(v.timegrid().n_steps), static_cast<py::ssize_t>(v.n_modes())});
    std::copy(v.values().begin(), v.values().end(), out.mutable_data());
    return out;
}

py::dict run_dict(const RunOutcome& r) {
    py::dict d;
    d["exit_code"] = r.exit_code;
    d["message"] = r.message;
    std::vector<std::string> files;
    for (const auto& f : r.files) files.push_back(f.string());
    d["files"] = files;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Fractional stochastic reaction-diffusion: spectral operators, skeleton, SDE and rate minimization";

    // Translators run newest first, so the base class goes in first.
    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<BlowUpError>(m, "BlowUpError", PyExc_ArithmeticError);

    py::class_<GridSpec>(m, "GridSpec")
        .def(py::init([](int dim, double half_length, int points_per_dim, double alpha) {
                 GridSpec g{dim, half_length, points_per_dim, alpha};
                 g.validate();
                 return g;
             }),
             py::arg("dim") = 1, py::arg("half_length") = 16.0, py::arg("points_per_dim") = 128,
             py::arg("alpha") = 0.75)
        .def_readonly("dim", &GridSpec::dim)
        .def_readonly("half_length", &GridSpec::half_length)
        .def_readonly("points_per_dim", &GridSpec::points_per_dim)
        .def_readonly("alpha", &GridSpec::alpha)
        .def_property_readonly("size", &GridSpec::size)
        .def("coordinates", [](const GridSpec& g) {
            Array out(static_cast<py::ssize_t>(g.points_per_dim));
            for (int i = 0; i < g.points_per_dim; ++i) out.mutable_data()[i] = g.coordinate(i);
            return out;
        });

    py::class_<ModelSpec>(m, "Model")
        .def_static("default", [](const GridSpec& g) { return default_model(g); }, py::arg("grid"))
        .def_static(
            "from_config",
            [](const std::string& text) {
                const RunConfig c = parse_config(text);
                return build_model(c.grid, c.model);
            },
            py::arg("config_json"), "Model and grid sections of a run config; the experiment key is required.")
        .def_readonly("grid", &ModelSpec::grid)
        .def_property_readonly("n_modes", [](const ModelSpec& s) { return s.noise.n_modes; })
        .def_property_readonly("p", [](const ModelSpec& s) { return s.drift.p; });

    m.def("frac_laplacian", [](const Array& u, const GridSpec& g) {
        return from_field(frac_laplacian(to_field(g, u), SpectralSymbol(g)));
    }, py::arg("u"), py::arg("grid"));
    m.def("spectral_seminorm", [](const Array& u, const GridSpec& g) {
        return spectral_seminorm(to_field(g, u), SpectralSymbol(g));
    }, py::arg("u"), py::arg("grid"));
    m.def("gagliardo_seminorm", [](const Array& u, const GridSpec& g) { return gagliardo_seminorm(to_field(g, u)); },
          py::arg("u"), py::arg("grid"));
    m.def("bump", [](const GridSpec& g, double r, double a, double c) { return from_field(bump(g, r, a, c)); },
          py::arg("grid"), py::arg("radius"), py::arg("amplitude") = 1.0, py::arg("center") = 0.0);

    m.def(
        "solve_skeleton",
        [](const ModelSpec& model, const Array& u0, double T, int n_steps, const std::optional<Array>& control) {
            const TimeGrid tg{T, n_steps};
            tg.validate();
            const Control v = to_control(tg, model.noise.n_modes, control);
            return from_trajectory(solve_skeleton(model, to_field(model.grid, u0), v, tg).trajectory);
        },
        py::arg("model"), py::arg("u0"), py::arg("T") = 1.0, py::arg("n_steps") = 128, py::arg("control") = py::none(),
        "Trajectory of shape (n_steps + 1, grid size).");

    m.def(
        "simulate",
        [](const ModelSpec& model, const Array& u0, double epsilon, double T, int n_steps, std::uint64_t seed,
           std::uint64_t stream) {
            const SdeConfig cfg{epsilon, Scheme::tamed_imex_em, TimeGrid{T, n_steps}};
            cfg.validate();
            const WienerDriver drv(model.noise.n_modes, seed, stream);
            return from_trajectory(simulate_sde(model, to_field(model.grid, u0), cfg, drv).trajectory);
        },
        py::arg("model"), py::arg("u0"), py::arg("epsilon"), py::arg("T") = 1.0, py::arg("n_steps") = 128,
        py::arg("seed") = 0, py::arg("stream") = 0);

    m.def(
        "action",
        [](const Array& control, double T) {
            if (control.ndim() != 2) throw ShapeError("control must be 2-D (n_steps, n_modes)");
            const TimeGrid tg{T, static_cast<int>(control.shape(0))};
            return action(to_control(tg, static_cast<int>(control.shape(1)), control));
        },
        py::arg("control"), py::arg("T") = 1.0);

    m.def(
        "minimize_rate",
        [](const ModelSpec& model, const Array& u0, const Array& path, double T, double tolerance) {
            const TimeGrid tg{T, static_cast<int>(path.shape(0)) - 1};
            RateQuery q;
            q.u0 = to_field(model.grid, u0);
            q.kind = TargetKind::path;
            q.path = to_trajectory(model.grid, path);
            q.tolerance = tolerance;
            const RateResult r = minimize_rate(model, q, tg);
            py::dict d;
            d["value"] = r.value;
            d["residual"] = r.residual;
            d["converged"] = r.converged;
            d["iterations"] = r.iterations;
            if (r.minimizer)
                d["minimizer"] = from_control(*r.minimizer);
            else
                d["minimizer"] = py::none();
            return d;
        },
        py::arg("model"), py::arg("u0"), py::arg("path"), py::arg("T") = 1.0, py::arg("tolerance") = 1e-3,
        "Smallest control action whose skeleton path stays within `tolerance` of `path`.");

    m.def("parse_config", [](const std::string& text) { return serialize_config(parse_config(text)); },
          py::arg("config_json"), "Canonical config with every default filled in.");
    m.def(
        "run",
        [](const std::string& text) {
            const RunConfig c = parse_config(text);
            py::gil_scoped_release release;
            RunOutcome r = run(c);
            py::gil_scoped_acquire acquire;
            return run_dict(r);
        },
        py::arg("config_json"), "Runs an experiment and writes its outputs and manifest.");
    m.def("version", &artifact_version);
}
