// Python surface: configs travel as JSON text (dicts on the Python side,
// see voi/__init__.py), results come back as dicts and numpy arrays.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "voi/config.hpp"
#include "voi/error.hpp"
#include "voi/implementation.hpp"
#include "voi/runner.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

voi::RunConfig load(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw voi::ConfigError("", std::string("malformed JSON: ") + e.what());
  }
  return voi::config_from_json(doc);
}

py::dict estimate(const voi::EvsiEstimate& plain, const voi::EvsiEstimate& adjusted) {
  py::dict d;
  d["evsi"] = plain.value;
  d["evsi_std_error"] = plain.std_error;
  d["evsi_im"] = adjusted.value;
  d["std_error"] = adjusted.std_error;
  d["seconds"] = adjusted.wall_time;
  return d;
}

}  // namespace

PYBIND11_MODULE(_voi, m) {
  m.doc() = "Expected value of sample information under imperfect implementation";

  auto base = py::register_exception<voi::Error>(m, "VoiError", PyExc_RuntimeError);
  py::register_exception<voi::ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<voi::FitError>(m, "FitError", base.ptr());
  py::register_exception<voi::SamplerError>(m, "SamplerError", base.ptr());
  py::register_exception<voi::DomainError>(m, "DomainError", PyExc_ValueError);

  m.def("default_config", [] { return voi::to_json(voi::case_study_config()).dump(); },
        "Case-study configuration as JSON text.");

  m.def("normalize_config",
        [](const std::string& text) { return voi::to_json(load(text)).dump(); },
        py::arg("config_json"), "Validate a config and return it with defaults filled in.");

  m.def("config_hash", [](const std::string& text) { return voi::config_hash(load(text)); },
        py::arg("config_json"));

  m.def(
      "psa",
      [](const std::string& text) {
        const voi::PsaSample psa = voi::run_psa(load(text));
        py::dict d;
        d["nb"] = psa.nb;
        d["expected_nb"] = voi::expected_nb(psa);
        d["prob_cost_effective"] = voi::prob_cost_effective(psa);
        return d;
      },
      py::arg("config_json"));

  m.def(
      "nmc",
      [](const std::string& text, std::size_t study) {
        const voi::RunConfig config = load(text);
        voi::NmcStudyRun r;
        {
          py::gil_scoped_release release;
          r = voi::run_nmc_study(config, study);
        }
        return estimate(r.evsi, r.evsi_im);
      },
      py::arg("config_json"), py::arg("study"));

  m.def(
      "mm",
      [](const std::string& text, std::size_t study) {
        const voi::RunConfig config = load(text);
        voi::MmResult r;
        {
          py::gil_scoped_release release;
          r = voi::run_mm_study(config, voi::run_psa(config), study);
        }
        py::dict d = estimate(r.evsi, r.evsi_im);
        d["inb"] = r.inb;
        d["p_target"] = r.p_target;
        d["variance_target"] = r.target;
        d["logistic"] = py::dict(py::arg("A") = r.fit.A, py::arg("B") = r.fit.B,
                                 py::arg("v") = r.fit.v);
        return d;
      },
      py::arg("config_json"), py::arg("study"));

  m.def(
      "run",
      [](const std::string& text) {
        const voi::RunConfig config = load(text);
        voi::ResultTable table;
        {
          py::gil_scoped_release release;
          table = voi::run(config);
        }
        py::list rows;
        for (const auto& r : table.rows)
          rows.append(py::dict(py::arg("study") = r.study, py::arg("method") = r.method,
                               py::arg("n") = r.n, py::arg("evsi") = r.evsi,
                               py::arg("evsi_im") = r.evsi_im,
                               py::arg("std_error") = r.std_error,
                               py::arg("seconds") = r.seconds));
        return rows;
      },
      py::arg("config_json"), "Full run; writes output files and returns the result rows.");

  m.def(
      "market_share",
      [](const std::string& text, double p) {
        return voi::market_share(load(text).market, p);
      },
      py::arg("config_json"), py::arg("p"), "Shares implied by the configured uptake curve.");
}
