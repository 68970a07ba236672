#include "cohortsurv/coxph.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "cohortsurv/error.hpp"
#include "newton.hpp"

namespace cohortsurv {

std::string_view token(TiesMethod ties) { return ties == TiesMethod::Efron ? "efron" : "breslow"; }

namespace {

void check_dimensions(std::span<const double> beta, const Matrix& x, const SurvivalData& data) {
  data.validate();
  if (x.rows() != data.size())
    throw ModelError(ModelErrorKind::DimensionMismatch,
                     fmt::format("design has {} rows but survival data has {} observations",
                                 x.rows(), data.size()));
  if (beta.size() != x.cols())
    throw ModelError(ModelErrorKind::DimensionMismatch,
                     fmt::format("coefficient vector has {} entries for {} columns", beta.size(),
                                 x.cols()));
}

std::vector<double> distinct_event_times(const SurvivalData& data) {
  std::vector<double> times;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (data.event[i]) times.push_back(data.exit[i]);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  return times;
}

}  // namespace

namespace {

PartialLikelihood evaluate(std::span<const double> beta, const Matrix& x, const SurvivalData& data,
                           TiesMethod ties, bool derivatives) {
  check_dimensions(beta, x, data);
  const std::size_t n = x.rows();
  const std::size_t p = x.cols();

  // Linear predictors are shifted by their maximum; the shift cancels exactly
  // in every risk-set ratio.
  std::vector<double> eta(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = x.row(i);
    for (std::size_t j = 0; j < p; ++j) eta[i] += row[j] * beta[j];
  }
  const double shift = n == 0 ? 0.0 : *std::max_element(eta.begin(), eta.end());
  std::vector<double> weight(n);
  for (std::size_t i = 0; i < n; ++i) weight[i] = std::exp(eta[i] - shift);

  PartialLikelihood out;
  if (!derivatives) {
    // Value only: skip the first and second moment sums.
    for (double t : distinct_event_times(data)) {
      double s0 = 0.0;
      double a0 = 0.0;
      int deaths = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (!(data.entry[i] <= t && t <= data.exit[i])) continue;
        s0 += weight[i];
        if (data.event[i] && data.exit[i] == t) {
          ++deaths;
          a0 += weight[i];
          out.value += eta[i] - shift;
        }
      }
      for (int k = 0; k < deaths; ++k) {
        const double f = ties == TiesMethod::Efron ? static_cast<double>(k) / deaths : 0.0;
        out.value -= std::log(s0 - f * a0);
      }
    }
    return out;
  }
  out.gradient.assign(p, 0.0);
  out.information = Matrix(p, p);

  std::vector<double> s1(p), a1(p), m1(p);
  Matrix s2(p, p), a2(p, p);

  for (double t : distinct_event_times(data)) {
    double s0 = 0.0;
    double a0 = 0.0;
    int deaths = 0;
    std::fill(s1.begin(), s1.end(), 0.0);
    std::fill(a1.begin(), a1.end(), 0.0);
    s2 = Matrix(p, p);
    a2 = Matrix(p, p);

    for (std::size_t i = 0; i < n; ++i) {
      if (!(data.entry[i] <= t && t <= data.exit[i])) continue;
      const bool dies = data.event[i] && data.exit[i] == t;
      const double w = weight[i];
      const auto xi = x.row(i);
      s0 += w;
      for (std::size_t j = 0; j < p; ++j) {
        s1[j] += w * xi[j];
        for (std::size_t k = 0; k <= j; ++k) s2(j, k) += w * xi[j] * xi[k];
      }
      if (dies) {
        ++deaths;
        a0 += w;
        out.value += eta[i] - shift;
        for (std::size_t j = 0; j < p; ++j) {
          out.gradient[j] += xi[j];
          a1[j] += w * xi[j];
          for (std::size_t k = 0; k <= j; ++k) a2(j, k) += w * xi[j] * xi[k];
        }
      }
    }
    if (deaths == 0 || s0 <= 0.0)
      throw ModelError(ModelErrorKind::EmptyInput,
                       fmt::format("empty risk set at event time {}", t));

    for (int k = 0; k < deaths; ++k) {
      const double f = ties == TiesMethod::Efron ? static_cast<double>(k) / deaths : 0.0;
      const double d0 = s0 - f * a0;
      out.value -= std::log(d0);
      for (std::size_t j = 0; j < p; ++j) {
        m1[j] = (s1[j] - f * a1[j]) / d0;
        out.gradient[j] -= m1[j];
      }
      for (std::size_t j = 0; j < p; ++j)
        for (std::size_t l = 0; l <= j; ++l)
          out.information(j, l) += (s2(j, l) - f * a2(j, l)) / d0 - m1[j] * m1[l];
    }
  }
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t l = 0; l < j; ++l) out.information(l, j) = out.information(j, l);
  return out;
}

// l(to) - l(from) from per-subject changes in the linear predictor: each
// risk-set term becomes log1p(sum w expm1(delta) / sum w), so the result is
// accurate relative to the gain itself rather than to l.
double loglik_gain(std::span<const double> from, std::span<const double> to, const Matrix& x,
                   const SurvivalData& data, TiesMethod ties) {
  const std::size_t n = x.rows();
  const std::size_t p = x.cols();
  std::vector<double> eta(n, 0.0), delta(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = x.row(i);
    for (std::size_t j = 0; j < p; ++j) {
      eta[i] += row[j] * from[j];
      delta[i] += row[j] * (to[j] - from[j]);
    }
  }
  const double shift = n == 0 ? 0.0 : *std::max_element(eta.begin(), eta.end());
  std::vector<double> weight(n), change(n);
  for (std::size_t i = 0; i < n; ++i) {
    weight[i] = std::exp(eta[i] - shift);
    change[i] = weight[i] * std::expm1(delta[i]);
  }

  double out = 0.0;
  for (double t : distinct_event_times(data)) {
    double s0 = 0.0, ds = 0.0, a0 = 0.0, da = 0.0;
    int deaths = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!(data.entry[i] <= t && t <= data.exit[i])) continue;
      s0 += weight[i];
      ds += change[i];
      if (data.event[i] && data.exit[i] == t) {
        ++deaths;
        a0 += weight[i];
        da += change[i];
        out += delta[i];
      }
    }
    for (int k = 0; k < deaths; ++k) {
      const double f = ties == TiesMethod::Efron ? static_cast<double>(k) / deaths : 0.0;
      out -= std::log1p((ds - f * da) / (s0 - f * a0));
    }
  }
  return out;
}

}  // namespace

PartialLikelihood partial_likelihood_terms(std::span<const double> beta, const Matrix& x,
                                           const SurvivalData& data, TiesMethod ties) {
  return evaluate(beta, x, data, ties, true);
}

double partial_loglik(std::span<const double> beta, const Matrix& x, const SurvivalData& data,
                      TiesMethod ties) {
  return evaluate(beta, x, data, ties, false).value;
}

std::vector<double> score_gradient(std::span<const double> beta, const Matrix& x,
                                   const SurvivalData& data, TiesMethod ties) {
  return partial_likelihood_terms(beta, x, data, ties).gradient;
}

CoxFit cox_fit(const Matrix& x, std::vector<std::string> column_names, const SurvivalData& data,
               const CoxOptions& options) {
  const std::vector<double> zero(x.cols(), 0.0);
  check_dimensions(zero, x, data);
  if (column_names.size() != x.cols())
    throw ModelError(ModelErrorKind::DimensionMismatch, "column names do not match the design");
  if (data.size() == 0) throw ModelError(ModelErrorKind::EmptyInput, "no observations");
  const std::size_t events = data.event_count();
  if (events == 0) throw ModelError(ModelErrorKind::NoEvents, "no events: Cox model undefined");

  CoxFit fit;
  fit.ties = options.ties;

  for (std::size_t j = 0; j < x.cols(); ++j) {
    const auto col = x.column(j);
    if (std::all_of(col.begin(), col.end(), [&](double v) { return v == col.front(); }))
      throw ModelError(ModelErrorKind::ConstantColumn,
                       "column '" + column_names[j] + "' is constant", column_names[j]);
    const bool dummy =
        std::all_of(col.begin(), col.end(), [](double v) { return v == 0.0 || v == 1.0; });
    if (dummy) {
      int col_events = 0;
      for (std::size_t i = 0; i < col.size(); ++i)
        col_events += (col[i] == 1.0 && data.event[i]) ? 1 : 0;
      if (col_events < options.min_column_events)
        fit.warnings.push_back(fmt::format("column '{}' has only {} events", column_names[j],
                                           col_events));
    }
  }
  if (x.cols() >= events)
    fit.warnings.push_back(
        fmt::format("{} columns for {} events; estimates may be unstable", x.cols(), events));

  detail::NewtonSettings settings;
  settings.max_iterations = options.max_iterations;
  settings.max_halvings = options.max_halvings;
  settings.loglik_tolerance = options.loglik_tolerance;
  settings.gradient_tolerance = options.gradient_tolerance;
  settings.step_tolerance = options.step_tolerance;
  settings.divergence_threshold = options.divergence_threshold;
  settings.divergence_kind = ModelErrorKind::Divergence;
  settings.divergence_message = "monotone likelihood: coefficient diverges for column ";

  auto result = detail::newton_maximize(
      [&](std::span<const double> beta) {
        return partial_likelihood_terms(beta, x, data, options.ties);
      },
      [&](std::span<const double> from, std::span<const double> to) {
        return loglik_gain(from, to, x, data, options.ties);
      },
      column_names, settings);

  fit.column_names = std::move(column_names);
  fit.coefficients = std::move(result.beta);
  fit.covariance = std::move(result.covariance);
  fit.log_likelihood_trace = std::move(result.trace);
  fit.converged = result.converged;
  fit.iterations = result.iterations;
  return fit;
}

CoxFit cox_fit(const DesignMatrix& design, const SurvivalData& data, const CoxOptions& options) {
  return cox_fit(design.values, design.column_names, data, options);
}

ModelTable wald_table(const CoxFit& fit, std::span<const std::string> terms, double level) {
  if (!fit.converged)
    throw ModelError(ModelErrorKind::NotConverged, "Cox fit did not converge");
  if (terms.size() != fit.coefficients.size())
    throw ModelError(ModelErrorKind::DimensionMismatch, "term labels do not match coefficients");
  ModelTable table;
  table.kind = RatioKind::Hazard;
  table.level = level;
  for (std::size_t j = 0; j < terms.size(); ++j)
    table.rows.push_back(
        wald_row(terms[j], fit.coefficients[j], std::sqrt(fit.covariance(j, j)), level));
  return table;
}

ModelTable wald_table(const CoxFit& fit, double level) {
  return wald_table(fit, fit.column_names, level);
}

}  // namespace cohortsurv
