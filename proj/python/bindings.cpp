#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ergokit/error.hpp"
#include "ergokit/pipeline.hpp"

namespace py = pybind11;
using namespace ergokit;

namespace {

// JSON crosses the boundary as text; the Python side decodes it.
std::string rates_json(const ApplicationRates& r, const std::string& model) {
  return to_json(r, model, nlohmann::ordered_json::object()).dump();
}

RunConfig config_from(const std::string& toml, const std::optional<std::string>& out) {
  RunConfig cfg = parse_config(toml);
  if (out) cfg.out = *out;
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_ergokit, m) {
  m.doc() = "Explicit ergodicity rates and their Monte-Carlo verification";

  static py::exception<Error> base(m, "ErgokitError");
  static py::exception<Error> cfg_err(m, "ConfigError", base.ptr());
  static py::exception<Error> num_err(m, "NumericalError", base.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::Config)
        cfg_err(e.what());
      else if (e.kind() == ErrorKind::Numerical)
        num_err(e.what());
      else
        base(e.what());
    }
  });

  m.def(
      "langevin_rates",
      [](double alpha, double beta, double gap, std::array<double, 4> kato) {
        return rates_json(langevin_rates(alpha, beta, gap, kato), "langevin");
      },
      py::arg("alpha"), py::arg("beta"), py::arg("gap"), py::arg("kato"));
  m.def(
      "fiber_rates",
      [](double sigma, int d, double gap, std::array<double, 2> kato) {
        return rates_json(fiber_rates(sigma, d, gap, kato), "fiber");
      },
      py::arg("sigma"), py::arg("d"), py::arg("gap"), py::arg("kato"));
  m.def(
      "quadratic_gap",
      [](std::vector<double> coefficients, int levels) {
        GapOptions opt;
        opt.levels = levels;
        return to_json(compute_gap(Potential::quadratic(std::move(coefficients)), opt)).dump();
      },
      py::arg("coefficients"), py::arg("levels") = 3, py::call_guard<py::gil_scoped_release>());

  auto command = [&m](const char* name, auto fn) {
    m.def(
        name,
        [fn](const std::string& toml, std::optional<std::string> out) {
          const RunConfig cfg = config_from(toml, out);
          return fn(cfg, out.has_value()).json.dump();
        },
        py::arg("config"), py::arg("out") = py::none(), py::call_guard<py::gil_scoped_release>());
  };
  command("gap", [](const RunConfig& c, bool w) { return cmd_gap(c, w); });
  command("constants", [](const RunConfig& c, bool w) { return cmd_constants(c, w); });
  command("verify", [](const RunConfig& c, bool w) { return cmd_verify(c, w); });
  command("identities", [](const RunConfig& c, bool w) { return cmd_identities(c, w); });
}
