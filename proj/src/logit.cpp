#include "cohortsurv/logit.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "cohortsurv/error.hpp"
#include "newton.hpp"

namespace cohortsurv {

namespace {

// log(1 + exp(v)) without overflow.
double log1p_exp(double v) { return v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); }

struct LogitTerms {
  double value = 0.0;
  std::vector<double> gradient;
  Matrix information;
};

LogitTerms logit_terms(std::span<const double> coef, const Matrix& x,
                       std::span<const std::uint8_t> y) {
  const std::size_t p = coef.size();
  LogitTerms t;
  t.gradient.assign(p, 0.0);
  t.information = Matrix(p, p);
  std::vector<double> row(p);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    row[0] = 1.0;
    const auto xi = x.row(i);
    std::copy(xi.begin(), xi.end(), row.begin() + 1);
    double eta = 0.0;
    for (std::size_t j = 0; j < p; ++j) eta += row[j] * coef[j];
    const double prob = 1.0 / (1.0 + std::exp(-eta));
    const double w = prob * (1.0 - prob);
    t.value += (y[i] ? eta : 0.0) - log1p_exp(eta);
    const double resid = (y[i] ? 1.0 : 0.0) - prob;
    for (std::size_t j = 0; j < p; ++j) {
      t.gradient[j] += resid * row[j];
      for (std::size_t k = 0; k <= j; ++k) t.information(j, k) += w * row[j] * row[k];
    }
  }
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t k = 0; k < j; ++k) t.information(k, j) = t.information(j, k);
  return t;
}

// l(to) - l(from): log(1 + e^eta') - log(1 + e^eta) = log1p(p expm1(delta)).
double logit_gain(std::span<const double> from, std::span<const double> to, const Matrix& x,
                  std::span<const std::uint8_t> y) {
  double out = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto xi = x.row(i);
    double eta = from[0];
    double delta = to[0] - from[0];
    for (std::size_t j = 0; j < xi.size(); ++j) {
      eta += xi[j] * from[j + 1];
      delta += xi[j] * (to[j + 1] - from[j + 1]);
    }
    const double prob = 1.0 / (1.0 + std::exp(-eta));
    const double m = prob * std::expm1(delta);
    const double softplus =
        std::isfinite(m) ? std::log1p(m) : log1p_exp(eta + delta) - log1p_exp(eta);
    out += (y[i] ? delta : 0.0) - softplus;
  }
  return out;
}

void check_inputs(const Matrix& x, std::span<const std::uint8_t> outcomes) {
  if (x.rows() != outcomes.size())
    throw ModelError(ModelErrorKind::DimensionMismatch,
                     fmt::format("design has {} rows but {} outcomes", x.rows(), outcomes.size()));
  if (x.rows() == 0) throw ModelError(ModelErrorKind::EmptyInput, "no observations");
}

}  // namespace

double logit_loglik(std::span<const double> coefficients, const Matrix& x,
                    std::span<const std::uint8_t> outcomes) {
  check_inputs(x, outcomes);
  if (coefficients.size() != x.cols() + 1)
    throw ModelError(ModelErrorKind::DimensionMismatch,
                     "coefficient vector must hold the intercept and one entry per column");
  double ll = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double eta = coefficients[0];
    const auto xi = x.row(i);
    for (std::size_t j = 0; j < xi.size(); ++j) eta += xi[j] * coefficients[j + 1];
    ll += (outcomes[i] ? eta : 0.0) - log1p_exp(eta);
  }
  return ll;
}

LogitFit logit_fit(const Matrix& x, std::vector<std::string> column_names,
                   std::span<const std::uint8_t> outcomes, const LogitOptions& options) {
  check_inputs(x, outcomes);
  if (column_names.size() != x.cols())
    throw ModelError(ModelErrorKind::DimensionMismatch, "column names do not match the design");
  const auto positives = std::count_if(outcomes.begin(), outcomes.end(), [](auto v) { return v != 0; });
  if (positives == 0 || static_cast<std::size_t>(positives) == outcomes.size())
    throw ModelError(ModelErrorKind::DegenerateOutcome,
                     "all outcomes are equal; odds of the outcome are not estimable");
  for (std::size_t j = 0; j < x.cols(); ++j) {
    const auto col = x.column(j);
    if (std::all_of(col.begin(), col.end(), [&](double v) { return v == col.front(); }))
      throw ModelError(ModelErrorKind::ConstantColumn,
                       "column '" + column_names[j] + "' is constant", column_names[j]);
  }

  std::vector<std::string> names{kInterceptTerm};
  names.insert(names.end(), column_names.begin(), column_names.end());

  detail::NewtonSettings settings;
  settings.max_iterations = options.max_iterations;
  settings.max_halvings = options.max_halvings;
  settings.loglik_tolerance = options.loglik_tolerance;
  settings.gradient_tolerance = options.gradient_tolerance;
  settings.step_tolerance = options.step_tolerance;
  settings.divergence_threshold = options.separation_threshold;
  settings.divergence_kind = ModelErrorKind::Separation;
  settings.divergence_message = "complete or quasi-complete separation on column ";

  auto result = detail::newton_maximize(
      [&](std::span<const double> coef) { return logit_terms(coef, x, outcomes); },
      [&](std::span<const double> from, std::span<const double> to) {
        return logit_gain(from, to, x, outcomes);
      },
      names, settings);

  LogitFit fit;
  fit.log_likelihood = logit_loglik(result.beta, x, outcomes);
  fit.column_names = std::move(names);
  fit.coefficients = std::move(result.beta);
  fit.covariance = std::move(result.covariance);
  fit.log_likelihood_trace = std::move(result.trace);
  fit.converged = result.converged;
  fit.iterations = result.iterations;
  return fit;
}

LogitFit logit_fit(const DesignMatrix& design, std::span<const std::uint8_t> outcomes,
                   const LogitOptions& options) {
  return logit_fit(design.values, design.column_names, outcomes, options);
}

ModelTable odds_table(const LogitFit& fit, std::span<const std::string> terms, double level) {
  if (!fit.converged)
    throw ModelError(ModelErrorKind::NotConverged, "logistic fit did not converge");
  if (terms.size() + 1 != fit.coefficients.size())
    throw ModelError(ModelErrorKind::DimensionMismatch, "term labels do not match coefficients");
  ModelTable table;
  table.kind = RatioKind::Odds;
  table.level = level;
  for (std::size_t j = 0; j < terms.size(); ++j)
    table.rows.push_back(wald_row(terms[j], fit.coefficients[j + 1],
                                  std::sqrt(fit.covariance(j + 1, j + 1)), level));
  return table;
}

ModelTable odds_table(const LogitFit& fit, double level) {
  const std::vector<std::string> terms(fit.column_names.begin() + 1, fit.column_names.end());
  return odds_table(fit, terms, level);
}

}  // namespace cohortsurv
