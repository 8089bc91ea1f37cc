#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "chainmetric/errors.hpp"
#include "chainmetric/flows.hpp"
#include "chainmetric/means.hpp"
#include "chainmetric/path_solver.hpp"
#include "chainmetric/transport.hpp"
#include "chainmetric/two_point.hpp"

namespace py = pybind11;
using namespace chainmetric;

namespace {

py::object distance_or_inf(const DistanceValue& d) {
  return py::float_(d.finite ? d.value : std::numeric_limits<double>::infinity());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Transport distance, geodesics and gradient flows on reversible Markov chains";

  static py::exception<Error> error_type(m, "Error", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(error_type)(std::string(kind_name(e.kind())) + ": " + e.what());
      exc.attr("kind") = std::string(kind_name(e.kind()));
      exc.attr("value") = e.value();
      PyErr_SetObject(error_type.ptr(), exc.ptr());
    }
  });

  py::class_<MarkovChain>(m, "MarkovChain")
      .def_property_readonly("kernel", &MarkovChain::kernel)
      .def_property_readonly("pi", &MarkovChain::pi)
      .def_property_readonly("states", &MarkovChain::states)
      .def_property_readonly("size", &MarkovChain::size)
      .def("generator", &MarkovChain::generator)
      .def("stationarity_residual", &MarkovChain::stationarity_residual)
      .def("detailed_balance_residual", &MarkovChain::detailed_balance_residual);

  m.def(
      "build_chain",
      [](const Matrix& kernel, std::vector<std::string> states) { return build_chain(kernel, std::move(states)); },
      py::arg("kernel"), py::arg("states") = std::vector<std::string>{},
      "Validates a reversible irreducible kernel and computes its stationary law.");
  m.def(
      "density", [](const MarkovChain& c, const Vector& v) { return Density(c, v).values(); }, py::arg("chain"),
      py::arg("values"), "Validates a density with respect to pi.");
  m.def(
      "density_from_measure", [](const MarkovChain& c, const Vector& mu) { return Density::from_measure(c, mu).values(); },
      py::arg("chain"), py::arg("mu"));
  m.def("heat_flow", py::overload_cast<const MarkovChain&, const Vector&, double>(&heat_flow), py::arg("chain"),
        py::arg("rho"), py::arg("t"));
  m.def("entropy", &entropy, py::arg("chain"), py::arg("rho"));
  m.def("total_variation", &total_variation, py::arg("chain"), py::arg("rho0"), py::arg("rho1"));

  py::class_<MeanFunction>(m, "MeanFunction")
      .def("__call__", &MeanFunction::operator(), py::arg("s"), py::arg("t"))
      .def("d1", &MeanFunction::d1, py::arg("s"), py::arg("t"))
      .def_property_readonly("name", &MeanFunction::name)
      .def_property_readonly("has_entropy", [](const MeanFunction& f) { return f.entropy_function().has_value(); })
      .def("__repr__", [](const MeanFunction& f) { return "<MeanFunction " + f.name() + ">"; });
  m.def("logarithmic_mean", &logarithmic_mean);
  m.def("geometric_mean", &geometric_mean);
  m.def("power_mean", &power_mean, py::arg("alpha"));
  m.def("parse_mean", &parse_mean, py::arg("spec"));
  m.def(
      "c_theta",
      [](const MeanFunction& mean) {
        const ImproperResult r = c_theta(mean);
        return r.finite ? r.value : std::numeric_limits<double>::infinity();
      },
      py::arg("mean"));

  py::class_<TwoPointChain>(m, "TwoPointChain")
      .def(py::init<double, double>(), py::arg("p"), py::arg("q"))
      .def_property_readonly("scale", &TwoPointChain::scale)
      .def("chain", &TwoPointChain::chain);
  m.def(
      "beta_density", [](const TwoPointChain& c, double beta) { return BetaDensity(beta).values(c); }, py::arg("c"),
      py::arg("beta"));
  m.def(
      "two_point_distance",
      [](const TwoPointChain& c, const MeanFunction& mean, double a, double b) {
        return distance_or_inf(distance(c, mean, a, b));
      },
      py::arg("c"), py::arg("mean"), py::arg("alpha"), py::arg("beta"));
  m.def(
      "convexity_constant", [](const TwoPointChain& c, const MeanFunction& mean) { return convexity_constant(c, mean).kappa; },
      py::arg("c"), py::arg("mean"));

  m.def(
      "support_class_count",
      [](const MarkovChain& c, const MeanFunction& mean, const Vector& rho) {
        return support_partition(c, mean, rho).count();
      },
      py::arg("chain"), py::arg("mean"), py::arg("rho"));
  m.def(
      "is_finite",
      [](const MarkovChain& c, const MeanFunction& mean, const Vector& a, const Vector& b) {
        return finiteness(c, mean, a, b).finite;
      },
      py::arg("chain"), py::arg("mean"), py::arg("rho0"), py::arg("rho1"));
  m.def(
      "recover_potential",
      [](const MarkovChain& c, const MeanFunction& mean, const Vector& rho, const Vector& rho_dot) {
        return recover_potential(c, mean, rho, rho_dot).psi;
      },
      py::arg("chain"), py::arg("mean"), py::arg("rho"), py::arg("rho_dot"));

  py::class_<MinActionResult>(m, "MinActionResult")
      .def_readonly("distance", &MinActionResult::distance)
      .def_readonly("action", &MinActionResult::action)
      .def_readonly("history", &MinActionResult::history)
      .def_readonly("iterations", &MinActionResult::iterations)
      .def_readonly("converged", &MinActionResult::converged)
      .def_readonly("status", &MinActionResult::status)
      .def_property_readonly("times", [](const MinActionResult& r) { return r.path.times; })
      .def_property_readonly("nodes", [](const MinActionResult& r) { return r.path.nodes; });
  m.def(
      "min_action",
      [](const MarkovChain& c, const MeanFunction& mean, const Vector& a, const Vector& b, int intervals,
         const std::string& rule) {
        MinActionOptions o;
        o.intervals = intervals;
        if (rule == "left") o.rule = MidpointRule::left;
        else if (rule == "mean") o.rule = MidpointRule::mean;
        else if (rule == "segment") o.rule = MidpointRule::segment;
        else if (rule != "arithmetic") throw Error(ErrorKind::InvalidArgument, "unknown rule '" + rule + "'");
        py::gil_scoped_release release;
        return min_action(c, mean, a, b, o);
      },
      py::arg("chain"), py::arg("mean"), py::arg("rho0"), py::arg("rho1"), py::arg("intervals") = 64,
      py::arg("rule") = "arithmetic");

  py::class_<ShootResult>(m, "ShootResult")
      .def_readonly("distance", &ShootResult::distance)
      .def_readonly("times", &ShootResult::times)
      .def_readonly("rho", &ShootResult::rho)
      .def_readonly("speed", &ShootResult::speed)
      .def_readonly("endpoint_error", &ShootResult::endpoint_error)
      .def_readonly("speed_deviation", &ShootResult::speed_deviation);
  m.def(
      "geodesic_shoot",
      [](const MarkovChain& c, const MeanFunction& mean, const Vector& a, const Vector& b, int steps) {
        ShootOptions o;
        o.steps = steps;
        py::gil_scoped_release release;
        return geodesic_shoot(c, mean, a, b, o);
      },
      py::arg("chain"), py::arg("mean"), py::arg("rho0"), py::arg("rho1"), py::arg("steps") = 256);

  m.def(
      "gradient_flow_residual",
      [](const MarkovChain& c, const MeanFunction& mean, const Vector& rho0, const std::vector<double>& times) {
        return verify_gradient_flow(c, mean, rho0, times).max_edge_residual;
      },
      py::arg("chain"), py::arg("mean"), py::arg("rho0"), py::arg("times"));
}
