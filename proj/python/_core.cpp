#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <filesystem>

#include "ddelyap/errors.hpp"
#include "ddelyap/scenario.hpp"

namespace py = pybind11;
using namespace ddelyap;

namespace {

Scenario resolve(const std::string& arg) {
  if (std::filesystem::is_regular_file(arg)) return load_scenario(arg);
  if (auto s = find_scenario(default_registry(), arg)) return *s;
  if (arg.find('[') != std::string::npos) return parse_scenario(arg, "<string>");
  throw ConfigError(arg + ": no such file or built-in scenario");
}

py::object json_loads(const std::string& text) { return py::module_::import("json").attr("loads")(text); }

py::dict record_dict(const LyapunovRecord& r) {
  py::dict d;
  d["t"] = r.t;
  d["tau"] = r.tau;
  d["sc"] = r.sc && r.sc->is_finite() ? py::cast(r.sc->value()) : py::none();
  d["V"] = r.finite() ? py::cast(r.v_int()) : py::none();
  d["zero_segment"] = r.zero_segment();
  d["unresolved"] = r.sc && !r.sc->is_finite();
  d["in_R"] = r.in_R;
  d["double_zero"] = r.double_zero ? py::cast(*r.double_zero) : py::none();
  return d;
}

py::dict simulate(const std::string& arg) {
  const auto run = execute_scenario(resolve(arg));
  const auto& traj = *run.trajectory;
  py::dict out;
  out["name"] = run.scenario.name;
  out["delta"] = traj.delta();
  std::vector<double> t(traj.knots().begin(), traj.knots().end());
  std::vector<std::vector<double>> x(traj.n_coords() + 1);
  for (std::size_t k = 0; k < t.size(); ++k)
    for (int i = 0; i <= traj.n_coords(); ++i) x[i].push_back(traj.knot_value(k, i));
  out["t"] = t;
  out["x"] = x;
  py::list recs;
  for (const auto& r : run.records) recs.append(record_dict(r));
  out["records"] = recs;
  out["audits"] = json_loads(audits_to_json(run.reports));
  out["exit_code"] = run.exit_code();
  return out;
}

py::dict run(const std::string& arg, const std::string& out_root) {
  const auto res = run_scenario(resolve(arg), out_root);
  py::dict d;
  d["name"] = res.name;
  d["output_dir"] = res.output_dir.string();
  d["exit_code"] = res.exit_code;
  d["message"] = res.message;
  return d;
}

// V of the segment sampled at knots s_0 < ... < s_m = 0 with slopes.
py::dict segment_v(const std::vector<double>& s, const std::vector<double>& values, const std::vector<double>& slopes,
                   const std::vector<double>& discrete, double a, int delta, double zeta) {
  if (s.size() < 2 || s.size() != values.size() || s.size() != slopes.size())
    throw DomainError("segment_v: need at least two knots with matching values and slopes");
  const double r = -s.front();
  SegmentFunction seg(DomainK(r, static_cast<int>(discrete.size())), HermiteSpline::from_knots(s, values, slopes),
                      discrete);
  SignChangeOptions o;
  o.zeta = zeta;
  const auto v = v_value(seg, a, delta, o);
  const auto m = membership(seg, a, delta, zeta);
  py::dict d;
  d["sc"] = sign_changes(seg, a, o).is_finite() ? py::cast(sign_changes(seg, a, o).value()) : py::none();
  d["V"] = v.value.is_finite() ? py::cast(v.value.value()) : py::none();
  d["in_R"] = m.in_R;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Discrete Lyapunov functional for cyclic delay equations";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base);

  m.def(
      "list_registry", [](bool json) { return list_registry(default_registry(), json); }, py::arg("json") = false,
      "Text or JSON listing of built-in scenarios, systems, delay models and audits.");
  m.def(
      "scenario_ini", [](const std::string& arg) { return to_ini(resolve(arg)); }, py::arg("scenario"),
      "Canonical INI text of a scenario file, built-in name or INI string.");
  m.def(
      "validate", [](const std::string& arg) { build_scenario(resolve(arg)); }, py::arg("scenario"),
      "Raises ConfigError when the scenario does not validate.");
  m.def("simulate", &simulate, py::arg("scenario"),
        "Integrates and audits without writing files; returns knots, states, records and audit reports.");
  m.def("run", &run, py::arg("scenario"), py::arg("out_root"),
        "Runs a scenario and writes its output directory under out_root.");
  m.def("segment_v", &segment_v, py::arg("s"), py::arg("values"), py::arg("slopes"), py::arg("discrete"),
        py::arg("a"), py::arg("delta"), py::arg("zeta") = kDefaultZeta,
        "Sign changes, V and R membership of a Hermite segment given by knots on [-r, 0].");
  m.attr("audit_names") = audit_names();
}
