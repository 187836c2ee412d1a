#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pmsim/analysis.hpp"
#include "pmsim/config.hpp"
#include "pmsim/errors.hpp"
#include "pmsim/io.hpp"
#include "pmsim/scenarios.hpp"

namespace py = pybind11;
using namespace pmsim;

namespace {

MeasurementConfig measurement_from_text(const std::string& text) {
  const ParsedConfig p = parse_config_text(text);
  if (!std::holds_alternative<MeasurementConfig>(p.config)) throw ParseError("kind", "expected a measurement config");
  return std::get<MeasurementConfig>(p.config);
}

ColdAtomParams cold_atom_from_text(const std::string& text) {
  if (text.empty()) return ColdAtomParams{};
  const ParsedConfig p = parse_config_text(text);
  if (!std::holds_alternative<ColdAtomParams>(p.config)) throw ParseError("kind", "expected a cold_atom config");
  return std::get<ColdAtomParams>(p.config);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Quantum measurement simulator core";

  auto error = py::register_exception<Error>(m, "Error");
  py::register_exception<ParseError>(m, "ParseError", error);
  py::register_exception<SizingError>(m, "SizingError", error);
  py::register_exception<ConvergenceError>(m, "ConvergenceError", error);
  py::register_exception<IoError>(m, "IoError", error);

  py::class_<ScalingFit>(m, "ScalingFit")
      .def_readonly("slope", &ScalingFit::slope)
      .def_readonly("intercept", &ScalingFit::intercept)
      .def_readonly("r_squared", &ScalingFit::r_squared)
      .def_readonly("window_begin", &ScalingFit::window_begin)
      .def_readonly("window_end", &ScalingFit::window_end);

  m.def("version", &code_version);

  m.def(
      "normalize_config", [](const std::string& text) { return config_to_json(parse_config_text(text).config); },
      py::arg("text"), "Parse a JSON config and return it with every default filled in.");
  m.def(
      "config_defaults", [](const std::string& text) { return parse_config_text(text).defaults; }, py::arg("text"));

  m.def(
      "run",
      [](const std::string& config_json) {
        const MeasurementConfig c = measurement_from_text(config_json);
        py::gil_scoped_release release;
        return run_result_to_json(run(c));
      },
      py::arg("config_json"), "Single run; returns the RunResult as JSON text.");

  m.def(
      "sweep_csv",
      [](const std::string& config_json, const std::vector<double>& t_values, unsigned workers) {
        const MeasurementConfig c = measurement_from_text(config_json);
        py::gil_scoped_release release;
        return sweep_csv(sweep_over_T(c, t_values, workers));
      },
      py::arg("config_json"), py::arg("t_values"), py::arg("workers") = 0);

  m.def(
      "qubit_benchmark_config",
      [](double theta, double gap) { return config_to_json(qubit_benchmark_config(theta, gap)); }, py::arg("theta"),
      py::arg("gap") = 2.0);

  m.def(
      "cold_atom",
      [](const std::string& params_json, const std::string& level) {
        const ColdAtomParams p = cold_atom_from_text(params_json);
        const FidelityLevel l = level_from_string(level);
        py::gil_scoped_release release;
        return cold_atom_result_to_json(cold_atom_run(p, l));
      },
      py::arg("params_json") = "", py::arg("level") = "analytic");

  m.def("fit_power_law", py::overload_cast<const std::vector<double>&, const std::vector<double>&>(&fit_power_law),
        py::arg("x"), py::arg("y"));
  m.def("log_spaced", &log_spaced, py::arg("t_min"), py::arg("t_max"), py::arg("points"));
  m.def("rabi_aligned_times", &rabi_aligned_times, py::arg("t_min"), py::arg("t_max"), py::arg("points"),
        py::arg("gap"));

  m.def(
      "expectation",
      [](const CVector& state, const CMatrix& op) { return expectation(StateVector(state), HermitianOperator(op)); },
      py::arg("state"), py::arg("op"));
  m.def(
      "born_weights",
      [](const CVector& state, const CMatrix& op) {
        std::vector<std::pair<double, double>> out;
        for (const auto& o : born_weights(StateVector(state), HermitianOperator(op)))
          out.emplace_back(o.eigenvalue, o.probability);
        return out;
      },
      py::arg("state"), py::arg("op"));
  m.def(
      "collapse_counts",
      [](const std::vector<std::complex<double>>& amplitudes, std::uint64_t seed, long samples) {
        MeasurementConfig c;
        c.mode = Mode::strong;
        c.system_dim = amplitudes.size();
        c.initial_system = amplitudes;
        const StrongResult sr = run_strong(c);
        return collapse_counts(sr.entangled, build_operator(c.q_system, c.system_dim, nullptr, "q"), seed, samples);
      },
      py::arg("amplitudes"), py::arg("seed"), py::arg("samples"),
      "Born sampling of a strong sigma_z measurement on a qubit; counts ordered by eigenvalue.");
}
