#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "cohortsurv/cli.hpp"
#include "cohortsurv/cohort.hpp"
#include "cohortsurv/coxph.hpp"
#include "cohortsurv/error.hpp"
#include "cohortsurv/logit.hpp"
#include "cohortsurv/survfit.hpp"
#include "cohortsurv/synth.hpp"

namespace py = pybind11;
using namespace cohortsurv;

namespace {

using Rows = std::vector<std::vector<double>>;

Matrix to_matrix(const Rows& rows) {
  if (rows.empty()) return Matrix(0, 0);
  for (const auto& r : rows)
    if (r.size() != rows.front().size()) throw DataError("design rows differ in length");
  return Matrix::from_rows(rows);
}

Rows to_rows(const Matrix& m) {
  Rows out(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto r = m.row(i);
    out[i].assign(r.begin(), r.end());
  }
  return out;
}

SurvivalData survival(std::vector<double> entry, std::vector<double> exit, std::vector<std::uint8_t> event) {
  SurvivalData d{std::move(entry), std::move(exit), std::move(event)};
  d.validate();
  return d;
}

TiesMethod parse_ties(const std::string& s) {
  if (s == "efron") return TiesMethod::Efron;
  if (s == "breslow") return TiesMethod::Breslow;
  throw py::value_error("ties must be 'efron' or 'breslow'");
}

EntryMode parse_entry(const std::string& s) {
  if (s == "staggered") return EntryMode::Staggered;
  if (s == "origin") return EntryMode::Origin;
  throw py::value_error("entry_mode must be 'staggered' or 'origin'");
}

py::list table_rows(const ModelTable& t) {
  py::list rows;
  for (const auto& r : t.rows) {
    py::dict d;
    d["term"] = r.term;
    d["coef"] = r.coefficient;
    d["se"] = r.std_error;
    d["ratio"] = r.ratio;
    d["ci_lower"] = r.ci_lower;
    d["ci_upper"] = r.ci_upper;
    d["z"] = r.z;
    d["p"] = r.p_value;
    rows.append(d);
  }
  return rows;
}

py::dict km_dict(const KmCurve& c) {
  py::dict d;
  d["time"] = c.times;
  d["n_risk"] = c.n_risk;
  d["n_event"] = c.n_event;
  d["n_censor"] = c.n_censor;
  d["survival"] = c.survival;
  d["var"] = c.greenwood_var;
  d["ci_lower"] = c.ci_lower;
  d["ci_upper"] = c.ci_upper;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Survival analysis of character cohorts";

  static py::exception<Error> error(m, "Error");
  static py::exception<DataError> data_error(m, "DataError", error.ptr());
  static py::exception<ModelError> model_error(m, "ModelError", error.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const DataError& e) {
      PyErr_SetString(data_error.ptr(), e.what());
    } catch (const ModelError& e) {
      PyErr_SetString(model_error.ptr(), e.what());
    } catch (const Error& e) {
      PyErr_SetString(error.ptr(), e.what());
    }
  });

  py::class_<Cohort>(m, "Cohort")
      .def("__len__", &Cohort::size)
      .def_property_readonly("horizon", &Cohort::horizon)
      .def("to_csv", [](const Cohort& c) { return serialize_cohort(c); })
      .def("ids", [](const Cohort& c) {
        std::vector<std::string> ids;
        for (const auto& s : c.subjects()) ids.push_back(s.id);
        return ids;
      })
      .def("__eq__", [](const Cohort& a, const Cohort& b) { return a == b; });

  m.def("parse_cohort", [](const std::string& text, int horizon) { return parse_cohort(text, horizon); },
        py::arg("text"), py::arg("horizon") = kDefaultHorizon);
  m.def("read_cohort", &read_cohort_file, py::arg("path"), py::arg("horizon") = kDefaultHorizon);
  m.def("generate_calibrated",
        [](std::uint64_t seed) { return generate_calibrated({}, seed).cohort; },
        py::arg("seed") = kDefaultSeed);

  m.def("baseline_table", [](const Cohort& c) {
    const auto t = baseline_table(c);
    py::dict d;
    d["n"] = t.n;
    d["deaths"] = t.deaths;
    d["death_pct"] = t.death_pct;
    d["age_mean"] = t.age_mean;
    d["age_sd"] = t.age_sd;
    py::list strata;
    for (const auto& s : t.strata)
      strata.append(py::dict(py::arg("variable") = std::string(token(s.variable)),
                             py::arg("level") = s.level, py::arg("population") = s.population,
                             py::arg("population_pct") = s.population_pct,
                             py::arg("deaths") = s.deaths, py::arg("death_pct") = s.death_pct));
    d["strata"] = strata;
    return d;
  });

  m.def("km_fit",
        [](std::vector<double> entry, std::vector<double> exit, std::vector<std::uint8_t> event,
           double conf) { return km_dict(km_fit(survival(entry, exit, event), conf)); },
        py::arg("entry"), py::arg("exit"), py::arg("event"), py::arg("conf") = 0.95);

  m.def("log_rank", [](const std::vector<std::tuple<std::vector<double>, std::vector<double>,
                                                    std::vector<std::uint8_t>>>& groups) {
    std::vector<SurvivalData> data;
    for (const auto& [entry, exit, event] : groups) data.push_back(survival(entry, exit, event));
    const auto r = log_rank(data);
    py::dict d;
    d["chi_square"] = r.chi_square;
    d["df"] = r.degrees_of_freedom;
    d["p"] = r.p_value;
    d["observed"] = r.observed;
    d["expected"] = r.expected;
    return d;
  });

  m.def("cox_fit",
        [](const Rows& x, std::vector<std::string> names, std::vector<double> entry,
           std::vector<double> exit, std::vector<std::uint8_t> event, const std::string& ties) {
          CoxOptions opts;
          opts.ties = parse_ties(ties);
          const auto fit = cox_fit(to_matrix(x), std::move(names), survival(entry, exit, event), opts);
          py::dict d;
          d["coefficients"] = fit.coefficients;
          d["covariance"] = to_rows(fit.covariance);
          d["log_likelihood"] = fit.log_likelihood();
          d["converged"] = fit.converged;
          d["iterations"] = fit.iterations;
          d["warnings"] = fit.warnings;
          d["table"] = table_rows(wald_table(fit));
          return d;
        },
        py::arg("x"), py::arg("names"), py::arg("entry"), py::arg("exit"), py::arg("event"),
        py::arg("ties") = "efron");

  m.def("cox_table",
        [](const Cohort& c, const std::string& ties, const std::string& entry_mode) {
          CoxOptions opts;
          opts.ties = parse_ties(ties);
          return table_rows(wald_table(cox_fit(encode_design(c), to_survival_data(c, parse_entry(entry_mode)), opts)));
        },
        py::arg("cohort"), py::arg("ties") = "efron", py::arg("entry_mode") = "staggered");

  m.def("logit_fit",
        [](const Rows& x, std::vector<std::string> names, std::vector<std::uint8_t> outcomes) {
          const auto fit = logit_fit(to_matrix(x), std::move(names), outcomes);
          py::dict d;
          d["names"] = fit.column_names;
          d["coefficients"] = fit.coefficients;
          d["covariance"] = to_rows(fit.covariance);
          d["log_likelihood"] = fit.log_likelihood;
          d["converged"] = fit.converged;
          d["table"] = table_rows(odds_table(fit));
          return d;
        },
        py::arg("x"), py::arg("names"), py::arg("outcomes"));

  m.def("run",
        [](const std::vector<std::string>& args) {
          std::ostringstream out, err;
          const int code = run(args, out, err);
          return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Run the command-line interface; returns (exit_code, stdout, stderr).");
}
