#pragma once

#include <span>
#include <string>
#include <vector>

#include "cohortsurv/cohort.hpp"
#include "cohortsurv/matrix.hpp"
#include "cohortsurv/model_table.hpp"
#include "cohortsurv/survival_data.hpp"

namespace cohortsurv {

enum class TiesMethod { Efron, Breslow };

std::string_view token(TiesMethod ties);

struct CoxOptions {
  TiesMethod ties = TiesMethod::Efron;
  int max_iterations = 50;
  int max_halvings = 20;
  double loglik_tolerance = 1e-9;
  double gradient_tolerance = 1e-6;
  // A Newton step larger than this keeps the iteration going even when the
  // gradient is tiny; a monotone likelihood keeps taking unit-sized steps.
  double step_tolerance = 1e-6;
  double divergence_threshold = 15.0;
  int min_column_events = 5;
};

struct CoxFit {
  std::vector<std::string> column_names;
  std::vector<double> coefficients;
  Matrix covariance;  // inverse observed information at the optimum
  std::vector<double> log_likelihood_trace;
  bool converged = false;
  int iterations = 0;
  TiesMethod ties = TiesMethod::Efron;
  std::vector<std::string> warnings;

  double log_likelihood() const { return log_likelihood_trace.back(); }
};

// Value, gradient and observed information of the log partial likelihood.
struct PartialLikelihood {
  double value = 0.0;
  std::vector<double> gradient;
  Matrix information;
};

PartialLikelihood partial_likelihood_terms(std::span<const double> beta, const Matrix& x,
                                           const SurvivalData& data, TiesMethod ties);

double partial_loglik(std::span<const double> beta, const Matrix& x, const SurvivalData& data,
                      TiesMethod ties = TiesMethod::Efron);

std::vector<double> score_gradient(std::span<const double> beta, const Matrix& x,
                                   const SurvivalData& data, TiesMethod ties = TiesMethod::Efron);

// Newton-Raphson from beta = 0 with step halving. Throws ModelError for no
// events, constant columns, a monotone likelihood (Divergence) or a singular
// information matrix (NonIdentifiable).
CoxFit cox_fit(const Matrix& x, std::vector<std::string> column_names, const SurvivalData& data,
               const CoxOptions& options = {});

CoxFit cox_fit(const DesignMatrix& design, const SurvivalData& data,
               const CoxOptions& options = {});

// Throws ModelError(NotConverged) for a fit that did not converge.
ModelTable wald_table(const CoxFit& fit, std::span<const std::string> terms, double level = 0.95);
ModelTable wald_table(const CoxFit& fit, double level = 0.95);

}  // namespace cohortsurv
