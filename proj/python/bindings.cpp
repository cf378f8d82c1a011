#include <optional>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ucortest/error.hpp"
#include "ucortest/evt.hpp"
#include "ucortest/kendall.hpp"
#include "ucortest/simulation.hpp"

namespace py = pybind11;
using namespace ucortest;

namespace {

py::dict outcome_dict(const TestOutcome& o) {
  py::dict d;
  d["method"] = std::string(to_string(o.method));
  d["alpha"] = o.alpha;
  d["statistic"] = o.statistic;
  d["centered_x"] = o.x_centered;
  d["critical_value"] = o.critical_value;
  d["p_value"] = o.p_value;
  d["reject"] = o.reject;
  d["argmax"] = py::make_tuple(o.argmax.i, o.argmax.j);
  d["entries"] = o.entries.values;
  d["u_x"] = o.u1.entries;
  d["u_y"] = o.u2.entries;
  d["warnings"] = o.warnings;
  if (o.row) d["row"] = *o.row;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Max-type tests for equality of U-statistic correlation matrices";

  static py::exception<Error> error_type(m, "UCorTestError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error_type, e.what());
    }
  });

  m.def("tau_pair", [](const std::vector<double>& x, const std::vector<double>& y) {
    return kendall::tau_pair(x, y);
  }, py::arg("x"), py::arg("y"));

  m.def("concordance_profile", [](const std::vector<double>& x, const std::vector<double>& y) {
    const auto p = kendall::concordance_profile(x, y);
    py::dict d;
    d["concordant"] = p.concordant;
    d["discordant"] = p.discordant;
    d["tied_pairs"] = p.tied_pairs;
    d["tau"] = p.tau();
    return d;
  }, py::arg("x"), py::arg("y"));

  m.def("tau_matrix", [](const Eigen::MatrixXd& data, bool pseudo_asymptotic, unsigned workers) {
    kendall::VarianceSelection select{true, true, true, pseudo_asymptotic};
    const auto f = kendall::tau_matrix_with_variances(DataMatrix(data), select, workers);
    py::dict d;
    d["tau"] = f.tau.entries;
    d["var_jack"] = f.jackknife->values;
    d["var_plug"] = f.plugin->values;
    d["var_ps"] = f.pseudo->values;
    d["tied_pairs"] = f.tied_pairs;
    return d;
  }, py::arg("data"), py::arg("pseudo_asymptotic") = false, py::arg("workers") = 1);

  m.def("pseudo_variance", &kendall::pseudo_variance, py::arg("n"), py::arg("asymptotic") = false);
  m.def("kruskal_variance", &kendall::kruskal_variance, py::arg("pi_c"), py::arg("pi_cc"),
        py::arg("n"));
  m.def("sine_latent_correlation", &kendall::sine_latent_correlation, py::arg("tau"));

  m.def("critical_value_full", &critical_value_full, py::arg("alpha"), py::arg("q"));
  m.def("critical_value_row", &critical_value_row, py::arg("alpha"), py::arg("q"));
  m.def("p_value_full", &p_value_full, py::arg("statistic"), py::arg("q"));
  m.def("p_value_row", &p_value_row, py::arg("statistic"), py::arg("q"));

  m.def("test", [](const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const std::string& method,
                   double alpha, std::optional<std::size_t> row, bool pseudo_asymptotic,
                   const std::string& generic_kernel, unsigned workers) {
    TestConfig config;
    config.alpha = alpha;
    config.method = parse_method(method);
    config.row = row;
    config.pseudo_asymptotic = pseudo_asymptotic;
    config.generic_kernel = parse_generic_kernel(generic_kernel);
    config.workers = workers;
    return outcome_dict(run_full_test(DataMatrix(x), DataMatrix(y), config));
  }, py::arg("x"), py::arg("y"), py::arg("method") = "ps", py::arg("alpha") = 0.05,
     py::arg("row") = py::none(), py::arg("pseudo_asymptotic") = false,
     py::arg("generic_kernel") = "kendall", py::arg("workers") = 1);

  m.def("simulate", [](const std::string& model, const std::string& structure, std::size_t d,
                       std::size_t n1, std::size_t n2, double zeta, const std::string& methods,
                       double alpha, std::size_t reps, std::uint64_t seed, unsigned workers) {
    sim::SimSpec spec;
    spec.model = sim::parse_model(model);
    spec.structure = {sim::parse_structure(structure), d};
    spec.n1 = n1;
    spec.n2 = n2;
    spec.zeta = zeta;
    spec.methods = sim::parse_method_list(methods);
    spec.alpha = alpha;
    spec.reps = reps;
    spec.master_seed = seed;
    const auto result = sim::empirical_rejection_rate(spec, workers);
    py::dict rates;
    for (const auto& r : result.rates) {
      rates[py::str(std::string(to_string(r.method)))] =
          py::dict(py::arg("rate") = r.rate, py::arg("stderr") = r.standard_error,
                   py::arg("rejections") = r.rejections, py::arg("valid_reps") = r.valid_reps);
    }
    py::list decisions;
    for (const auto& rec : result.log) decisions.append(py::cast(rec.reject));
    return py::dict(py::arg("rates") = rates, py::arg("decisions") = decisions,
                    py::arg("warnings") = result.warnings);
  }, py::arg("model") = "1", py::arg("structure") = "block", py::arg("d") = 50,
     py::arg("n1") = 500, py::arg("n2") = 500, py::arg("zeta") = 0.0, py::arg("methods") = "ps",
     py::arg("alpha") = 0.05, py::arg("reps") = 100, py::arg("seed") = 1,
     py::arg("workers") = 1);
}
