#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "fash/bfadjust.hpp"
#include "fash/cli.hpp"
#include "fash/errors.hpp"
#include "fash/functional.hpp"
#include "fash/ingest.hpp"
#include "fash/lgp.hpp"
#include "fash/likelihood.hpp"
#include "fash/pipeline.hpp"
#include "fash/posterior.hpp"
#include "fash/simulate.hpp"

namespace py = pybind11;
using namespace fash;

namespace {

ObservationUnit make_unit(std::string id, std::vector<double> times, std::vector<double> beta_hat,
                          std::vector<double> se) {
  ObservationUnit u{std::move(id), std::move(times), std::move(beta_hat), std::move(se)};
  u.validate();
  return u;
}

py::dict fit_to_dict(const FitOutput& fit) {
  py::dict d;
  d["order"] = fit.prior.order;
  d["diffuse_variance"] = fit.prior.diffuse_variance;
  d["sigma_grid"] = fit.prior.sigma_grid;
  d["weights_mle"] = fit.prior_mle.weights;
  d["weights"] = fit.prior.weights;
  d["pi0_mle"] = fit.prior_mle.weights.front();
  d["pi0"] = fit.prior.weights.front();
  d["em_iterations"] = fit.em.iterations;
  d["em_converged"] = fit.em.converged;
  d["objective_trace"] = fit.em.objective_trace;
  d["lfdr"] = lfdr_values(fit.lik, fit.prior.weights);
  if (fit.adjustment) {
    d["c_star"] = fit.adjustment->c_star;
    d["bayes_factors"] = fit.adjustment->bayes_factors;
  }
  return d;
}

}  // namespace

PYBIND11_MODULE(_fash, m) {
  m.doc() = "Empirical-Bayes shrinkage of effect functions (C++ core)";
  m.attr("__version__") = library_version();

  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_RuntimeError);
  py::register_exception<NumericFailure>(m, "NumericFailure", PyExc_ArithmeticError);

  py::class_<ObservationUnit>(m, "Unit")
      .def(py::init(&make_unit), py::arg("id"), py::arg("times"), py::arg("beta_hat"), py::arg("se"))
      .def_readonly("id", &ObservationUnit::id)
      .def_readonly("times", &ObservationUnit::times)
      .def_readonly("beta_hat", &ObservationUnit::beta_hat)
      .def_readonly("se", &ObservationUnit::se)
      .def("__len__", &ObservationUnit::size);

  m.def("iwp_covariance", &iwp_covariance, py::arg("order"), py::arg("sigma"), py::arg("s"), py::arg("t"));
  m.def("psd", &psd, py::arg("order"), py::arg("sigma"), py::arg("h"));
  m.def("psd_to_sigma", &psd_to_sigma, py::arg("order"), py::arg("h"), py::arg("target_psd"));
  m.def("default_grid", &default_grid, py::arg("order"), py::arg("count") = 51, py::arg("qmax") = 10.0);

  m.def("marginal_loglik", &marginal_loglik, py::arg("unit"), py::arg("order"), py::arg("sigma"),
        py::arg("diffuse_variance") = 1e6);
  m.def("marginal_loglik_dense", &marginal_loglik_dense, py::arg("unit"), py::arg("order"),
        py::arg("sigma"), py::arg("diffuse_variance") = 1e6);

  m.def("adjust_se", &adjust_se, py::arg("beta_hat"), py::arg("se"), py::arg("nu"));
  m.def("read_long_csv", &read_long_csv, py::arg("path"), py::arg("apply_t_adjust") = true);

  m.def(
      "fit",
      [](const Dataset& data, int order, int grid_size, double qmax, bool bf_adjust, double null_lambda,
         unsigned threads) {
        FitConfig c;
        c.order = order;
        c.grid_size = grid_size;
        c.qmax = qmax;
        c.bf_adjust = bf_adjust;
        c.null_lambda = null_lambda;
        c.threads = threads;
        FitOutput fit;
        {
          py::gil_scoped_release release;
          fit = fit_prior(data, c);
        }
        return fit_to_dict(fit);
      },
      py::arg("data"), py::arg("order") = 1, py::arg("grid_size") = 51, py::arg("qmax") = 10.0,
      py::arg("bf_adjust") = true, py::arg("null_lambda") = 1.0, py::arg("threads") = 1u);

  m.def(
      "smooth",
      [](const ObservationUnit& unit, int order, const std::vector<double>& sigma_grid,
         const std::vector<double>& weights, double diffuse_variance, std::vector<double> query,
         double level) {
        MixturePrior prior{order, sigma_grid, weights, diffuse_variance};
        prior.validate();
        if (query.empty()) query = unit.times;
        const auto post = posterior_mixture(unit, prior);
        const auto r = smooth(unit, post, query, level);
        py::dict d;
        d["t"] = r.t;
        d["mean"] = r.mean;
        d["sd"] = r.sd;
        d["lower"] = r.lower;
        d["upper"] = r.upper;
        d["lfdr"] = post.lfdr();
        return d;
      },
      py::arg("unit"), py::arg("order"), py::arg("sigma_grid"), py::arg("weights"),
      py::arg("diffuse_variance") = 1e6, py::arg("query") = std::vector<double>{}, py::arg("level") = 0.95);

  m.def(
      "simulate",
      [](std::size_t units, double rho, std::uint64_t seed) {
        SimulationConfig c;
        c.units = units;
        c.rho = rho;
        c.seed = seed;
        auto s = generate_dataset(c);
        std::string cats;
        for (auto k : s.truth.category) cats.push_back(category_label(k));
        return py::make_tuple(s.data, cats);
      },
      py::arg("units") = 1000, py::arg("rho") = 0.2, py::arg("seed") = 1);

  m.def(
      "run_cli", [](const std::vector<std::string>& args) { return cli::run(args); }, py::arg("args"),
      "Runs the fash command line in-process and returns its exit code.");
}
