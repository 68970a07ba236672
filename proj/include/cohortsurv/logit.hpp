#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cohortsurv/cohort.hpp"
#include "cohortsurv/matrix.hpp"
#include "cohortsurv/model_table.hpp"

namespace cohortsurv {

inline constexpr const char* kInterceptTerm = "(Intercept)";

struct LogitOptions {
  int max_iterations = 50;
  int max_halvings = 20;
  double loglik_tolerance = 1e-10;
  double gradient_tolerance = 1e-8;
  double step_tolerance = 1e-6;
  double separation_threshold = 15.0;
};

// Coefficients and covariance are ordered intercept first, then the design
// columns.
struct LogitFit {
  std::vector<std::string> column_names;
  std::vector<double> coefficients;
  Matrix covariance;
  double log_likelihood = 0.0;
  std::vector<double> log_likelihood_trace;
  bool converged = false;
  int iterations = 0;
};

// Bernoulli log-likelihood with logit link; `coefficients` includes the
// intercept in position 0.
double logit_loglik(std::span<const double> coefficients, const Matrix& x,
                    std::span<const std::uint8_t> outcomes);

// IRLS (Newton on the Bernoulli likelihood) with an automatic intercept.
// Throws ModelError for all-equal outcomes, constant columns, separation
// (a coefficient leaving [-15, 15]) or a singular information matrix.
LogitFit logit_fit(const Matrix& x, std::vector<std::string> column_names,
                   std::span<const std::uint8_t> outcomes, const LogitOptions& options = {});

LogitFit logit_fit(const DesignMatrix& design, std::span<const std::uint8_t> outcomes,
                   const LogitOptions& options = {});

// Odds ratios for the design columns; the intercept is not rendered.
ModelTable odds_table(const LogitFit& fit, std::span<const std::string> terms, double level = 0.95);
ModelTable odds_table(const LogitFit& fit, double level = 0.95);

}  // namespace cohortsurv
