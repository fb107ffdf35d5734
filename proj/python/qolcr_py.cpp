#include <optional>
#include <string>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qolcr/config.hpp"
#include "qolcr/errors.hpp"
#include "qolcr/experiments.hpp"
#include "qolcr/trace_io.hpp"

namespace py = pybind11;
using namespace qolcr;

namespace {

py::array_t<double> to_array(std::span<const double> v) {
  py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

std::vector<double> to_vector(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 1) throw ConfigError("expected a one-dimensional array");
  return std::vector<double>(a.data(), a.data() + a.size());
}

RunConfig config_from(const std::optional<std::string>& text) {
  if (!text) return default_config();
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(*text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(e.what(), 0);
  }
  return config_from_json(doc);
}

py::object to_python(const nlohmann::ordered_json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Quantum low-coherence reflectometry core";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  auto quality = py::register_exception<QualityError>(m, "QualityError", base.ptr());
  py::register_exception<InsufficientPeaksError>(m, "InsufficientPeaksError", quality.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());

  m.def("default_config", [] { return config_to_json(default_config()).dump(); },
        "Default run configuration as a JSON string.");

  m.def(
      "coherence_envelope",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> tau, double lambda0, double bandwidth) {
        const Spectrum spectrum(lambda0, bandwidth);
        py::array_t<std::complex<double>> out(tau.size());
        auto* o = out.mutable_data();
        for (py::ssize_t i = 0; i < tau.size(); ++i) o[i] = coherence_envelope(spectrum, tau.data()[i]);
        return out;
      },
      py::arg("tau"), py::arg("lambda0"), py::arg("bandwidth"));

  py::class_<ScanTrace>(m, "Trace")
      .def_property_readonly("reported_d", [](const ScanTrace& t) { return to_array(t.reported_d); })
      .def_property_readonly("intensity", [](const ScanTrace& t) { return to_array(t.intensity); })
      .def_property_readonly("coincidence", [](const ScanTrace& t) { return to_array(t.coincidence); })
      .def_property_readonly("has_truth", [](const ScanTrace& t) { return t.truth.has_value(); })
      .def_property_readonly("true_d",
                             [](const ScanTrace& t) -> py::object {
                               if (!t.truth) return py::none();
                               return to_array(t.truth->true_d);
                             })
      .def_property_readonly("spacing", &ScanTrace::spacing)
      .def("__len__", &ScanTrace::size)
      .def("write", [](const ScanTrace& t, const std::string& path) { write_trace(path, t); }, py::arg("path"))
      .def_static("read", [](const std::string& path) { return read_trace(path); }, py::arg("path"));

  py::class_<CalibrationResult>(m, "Calibration")
      .def("__call__", [](const CalibrationResult& c, double d) { return c.map(d); })
      .def("__call__",
           [](const CalibrationResult& c, py::array_t<double, py::array::c_style | py::array::forcecast> d) {
             return to_array(c.map(to_vector(d)));
           })
      .def_property_readonly("reported_knots", [](const CalibrationResult& c) { return to_array(c.map.reported_knots()); })
      .def_property_readonly("calibrated_knots",
                             [](const CalibrationResult& c) { return to_array(c.map.calibrated_knots()); })
      .def_property_readonly("record_start", [](const CalibrationResult& c) { return c.record.start; })
      .def_property_readonly("record_step", [](const CalibrationResult& c) { return c.record.step; })
      .def_property_readonly("record_intensity", [](const CalibrationResult& c) { return to_array(c.record.intensity); })
      .def_property_readonly("edge_samples", [](const CalibrationResult& c) { return c.quality.edge_samples; })
      .def_property_readonly("slope", [](const CalibrationResult& c) { return c.quality.slope; })
      .def_property_readonly("low_amplitude_fraction",
                             [](const CalibrationResult& c) { return c.quality.low_amplitude_fraction; })
      .def("write_record", [](const CalibrationResult& c, const std::string& path) { write_record(path, c.record); },
           py::arg("path"));

  m.def(
      "simulate",
      [](const std::optional<std::string>& config) {
        auto c = config_from(config);
        validate(c);
        py::gil_scoped_release release;
        return simulate_scan(c.sample(), c.spectrum(), c.pump(), c.stage, c.noise, c.scan, c.amplitudes,
                             c.pipeline.min_margin_coherence_lengths);
      },
      py::arg("config") = py::none(), "Simulate one scan from a JSON configuration (default when omitted).");

  m.def(
      "calibrate",
      [](const ScanTrace& trace, const std::optional<std::string>& config, std::optional<double> grid_step) {
        auto c = config_from(config);
        if (grid_step) c.pipeline.grid_step = *grid_step;
        py::gil_scoped_release release;
        return calibrate_trace(trace, c.pipeline);
      },
      py::arg("trace"), py::arg("config") = py::none(), py::arg("grid_step") = py::none());

  m.def(
      "measure",
      [](const CalibrationResult& cal, std::size_t expected_peaks, const std::optional<std::string>& config) {
        const auto c = config_from(config);
        auto report = measure_record(cal.record, c.pipeline, expected_peaks);
        report.calibration = cal.quality;
        return to_python(to_json(report));
      },
      py::arg("calibration"), py::arg("expected_peaks"), py::arg("config") = py::none());

  m.def(
      "autocorrelate",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> record, double step) {
        const auto acf = autocorrelate(to_vector(record), step);
        std::vector<double> lags(acf.size());
        for (std::size_t i = 0; i < acf.size(); ++i) lags[i] = acf.lag(i);
        return py::make_tuple(to_array(lags), to_array(acf.values));
      },
      py::arg("record"), py::arg("step"), "Normalized autocorrelation; returns (lags, values).");

  m.def(
      "repeatability",
      [](const std::optional<std::string>& config, std::size_t runs) {
        const auto c = config_from(config);
        validate(c);
        RepeatabilityResult r;
        {
          py::gil_scoped_release release;
          r = repeatability_experiment(c, runs);
        }
        return to_python(to_json(r));
      },
      py::arg("config") = py::none(), py::arg("runs") = 70);

  m.def(
      "linearity",
      [](const std::optional<std::string>& config, double step, std::size_t steps) {
        const auto c = config_from(config);
        validate(c);
        LinearityResult r;
        {
          py::gil_scoped_release release;
          r = linearity_experiment(c, step, steps);
        }
        return to_python(to_json(r));
      },
      py::arg("config") = py::none(), py::arg("step") = 5e-9, py::arg("steps") = 10);
}
