#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "daestab/cct.hpp"
#include "daestab/config.hpp"
#include "daestab/runner.hpp"
#include "daestab/systems.hpp"

namespace py = pybind11;
using namespace daestab;

namespace {

ParamSet make_params(const std::string& system_id, const py::dict& overrides,
                     const std::string& active) {
    ParamSet p = find_system(system_id).defaults;
    for (const auto& item : overrides)
        p.set(py::cast<std::string>(item.first), py::cast<double>(item.second));
    if (!active.empty()) p.set_active(active);
    return p;
}

py::dict trajectory_arrays(const Trajectory& traj) {
    const auto nsamp = static_cast<py::ssize_t>(traj.samples.size());
    if (nsamp == 0) return py::dict();
    const auto n = traj.samples.front().x.size();
    const auto m = traj.samples.front().y.size();
    Vec t(nsamp), da(nsamp), dp(nsamp);
    Mat x(nsamp, n), y(nsamp, m), ypost(nsamp, m);
    ypost.setConstant(std::numeric_limits<double>::quiet_NaN());
    for (py::ssize_t i = 0; i < nsamp; ++i) {
        const auto& s = traj.samples[i];
        t(i) = s.t;
        x.row(i) = s.x.transpose();
        y.row(i) = s.y.transpose();
        if (s.y_post.size() == m) ypost.row(i) = s.y_post.transpose();
        da(i) = s.delta_active;
        dp(i) = s.delta_post;
    }
    py::dict d;
    d["t"] = t;
    d["x"] = x;
    d["y"] = y;
    d["delta_active"] = da;
    if (traj.has_shadow) {
        d["y_post"] = ypost;
        d["delta_post"] = dp;
    }
    d["termination"] = std::string(to_string(traj.termination));
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, mod) {
    mod.doc() = "DAE transient stability toolkit: staged DAE simulation, critical "
                "clearing times, instability mechanisms and CCT sensitivities";

    py::register_exception<Error>(mod, "DaestabError");

    py::class_<Point>(mod, "Point")
        .def(py::init([](const Vec& x, const Vec& y) { return Point{x, y}; }), py::arg("x"),
             py::arg("y"))
        .def_readwrite("x", &Point::x)
        .def_readwrite("y", &Point::y)
        .def("__repr__", [](const Point& p) {
            std::ostringstream os;
            os << "Point(x=" << p.x.transpose() << ", y=" << p.y.transpose() << ")";
            return os.str();
        });

    py::class_<ParamSet>(mod, "ParamSet")
        .def("value", &ParamSet::value)
        .def("active_name", &ParamSet::active_name)
        .def("active_value", &ParamSet::active_value)
        .def("with_value", &ParamSet::with)
        .def("with_active", &ParamSet::with_active)
        .def("values", &ParamSet::values);

    py::class_<StageModel>(mod, "StageModel")
        .def_readonly("n", &StageModel::n)
        .def_readonly("m", &StageModel::m)
        .def("f", [](const StageModel& s, const Vec& x, const Vec& y,
                     const ParamSet& p) { return s.f(x, y, p); })
        .def("g", [](const StageModel& s, const Vec& x, const Vec& y,
                     const ParamSet& p) { return s.g(x, y, p); });

    py::class_<ScenarioModel>(mod, "ScenarioModel")
        .def_readonly("pre", &ScenarioModel::pre)
        .def_readonly("fault", &ScenarioModel::fault)
        .def_readonly("post", &ScenarioModel::post)
        .def_readonly("name", &ScenarioModel::name)
        .def_readonly("sep_guess", &ScenarioModel::sep_guess);

    py::class_<IntegratorConfig>(mod, "IntegratorConfig")
        .def(py::init<>())
        .def_readwrite("dt", &IntegratorConfig::dt)
        .def_readwrite("newton_tol", &IntegratorConfig::newton_tol)
        .def_readwrite("newton_max_iter", &IntegratorConfig::newton_max_iter)
        .def_readwrite("delta_floor", &IntegratorConfig::delta_floor)
        .def_readwrite("t_max", &IntegratorConfig::t_max)
        .def_readwrite("shadow_stride", &IntegratorConfig::shadow_stride);

    py::class_<CctOptions>(mod, "CctOptions")
        .def(py::init<>())
        .def_readwrite("bracket_low", &CctOptions::bracket_low)
        .def_readwrite("bracket_high", &CctOptions::bracket_high)
        .def_readwrite("cct_tol", &CctOptions::cct_tol)
        .def_readwrite("eps_sep", &CctOptions::eps_sep)
        .def_readwrite("sep_dwell", &CctOptions::sep_dwell)
        .def_readwrite("eps_uep", &CctOptions::eps_uep)
        .def_readwrite("eps_kappa", &CctOptions::eps_kappa)
        .def_readwrite("trunc_fraction", &CctOptions::trunc_fraction);

    py::class_<CriticalElement>(mod, "CriticalElement")
        .def_readonly("location", &CriticalElement::location)
        .def_readonly("uep_type", &CriticalElement::uep_type)
        .def_readonly("borderline", &CriticalElement::borderline)
        .def_readonly("unstable_direction", &CriticalElement::unstable_direction)
        .def_property_readonly("eigenvalues",
                               [](const CriticalElement& el) { return el.eigenvalues; })
        .def("label", &CriticalElement::label);

    py::class_<Mechanism>(mod, "Mechanism")
        .def_property_readonly("kind",
                               [](const Mechanism& m) { return std::string(to_string(m.kind)); })
        .def_readonly("point", &Mechanism::point)
        .def_readonly("element", &Mechanism::element)
        .def_readonly("t_end", &Mechanism::t_end);

    py::class_<CctResult>(mod, "CctResult")
        .def_readonly("cct", &CctResult::cct)
        .def_readonly("clearing_state", &CctResult::clearing_state)
        .def_readonly("y_post_cl", &CctResult::y_post_cl)
        .def_readonly("mechanism", &CctResult::mechanism)
        .def_readonly("t_end", &CctResult::t_end)
        .def_readonly("bisection_history", &CctResult::bisection_history);

    py::class_<SensitivityValue>(mod, "SensitivityValue")
        .def_readonly("dcct_dp", &SensitivityValue::dcct_dp)
        .def_readonly("conditioning", &SensitivityValue::conditioning);

    mod.def("system_ids", [] {
        std::vector<std::string> ids;
        for (const auto& e : system_catalog()) ids.push_back(e.id);
        return ids;
    });
    mod.def(
        "build_system",
        [](const std::string& id, const py::dict& overrides, const std::string& active) {
            const ParamSet p = make_params(id, overrides, active);
            return py::make_tuple(find_system(id).build(p), p);
        },
        py::arg("id"), py::arg("overrides") = py::dict(), py::arg("active") = std::string(),
        "Build a catalog scenario; returns (scenario, params).");
    mod.def("default_bracket", [](const std::string& id) {
        const auto& e = find_system(id);
        return py::make_tuple(e.bracket_low, e.bracket_high);
    });

    mod.def("eval_delta", &eval_delta);
    mod.def("eval_kappa", &eval_kappa);
    mod.def("eval_semi_singular_indicator", &eval_semi_singular_indicator);
    mod.def("reduced_jacobian", &reduced_jacobian, py::arg("stage"), py::arg("pt"), py::arg("p"),
            py::arg("delta_floor") = 1e-8);

    mod.def(
        "solve_algebraic",
        [](const StageModel& stage, const Vec& x, const Vec& y_guess, const ParamSet& p,
           const IntegratorConfig& cfg) { return solve_algebraic(stage, x, y_guess, p, cfg); },
        py::arg("stage"), py::arg("x"), py::arg("y_guess"), py::arg("p"),
        py::arg("cfg") = IntegratorConfig{});
    mod.def(
        "simulate",
        [](const StageModel& stage, const Point& start, const ParamSet& p,
           const IntegratorConfig& cfg, const StageModel* shadow) {
            return trajectory_arrays(simulate(stage, start, p, cfg, shadow));
        },
        py::arg("stage"), py::arg("start"), py::arg("p"), py::arg("cfg"),
        py::arg("shadow_stage") = nullptr,
        "Fixed-step DAE simulation; returns a dict of numpy arrays.");

    mod.def("find_equilibrium",
            [](const StageModel& stage, const Point& guess, const ParamSet& p) {
                return find_equilibrium(stage, guess, p);
            });
    mod.def("classify_equilibrium",
            [](const StageModel& stage, const Point& eq, const ParamSet& p) {
                return classify_equilibrium(stage, eq, p);
            });
    mod.def("find_pseudo_ep", [](const StageModel& stage, const Point& guess, const ParamSet& p) {
        return find_pseudo_ep(stage, guess, p);
    });
    mod.def("find_semi_singular",
            [](const StageModel& stage, const Point& guess, const ParamSet& p) {
                return find_semi_singular(stage, guess, p);
            });
    mod.def("classify_pseudo_ep",
            [](const StageModel& stage, const Point& pep, const ParamSet& p) {
                return classify_pseudo_ep(stage, pep, p);
            });
    mod.def("equilibrium_location_sensitivity",
            [](const StageModel& stage, const Point& eq, const ParamSet& p) {
                return equilibrium_location_sensitivity(stage, eq, p);
            });

    mod.def("judge_stability",
            [](const ScenarioModel& sc, double t_cl, const ParamSet& p,
               const IntegratorConfig& icfg, const CctOptions& copts) {
                return std::string(to_string(judge_stability(sc, t_cl, p, icfg, copts)));
            });
    mod.def("compute_cct", &compute_cct);
    mod.def("cct_sensitivity", &cct_sensitivity);
    mod.def("fd_oracle", &fd_oracle, py::arg("scenario"), py::arg("p"), py::arg("delta"),
            py::arg("icfg"), py::arg("copts"), py::arg("oracle_cct_tol") = 1e-7,
            py::arg("base_cct_hint") = std::numeric_limits<double>::quiet_NaN());
}
