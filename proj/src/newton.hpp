#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "cohortsurv/error.hpp"
#include "cohortsurv/matrix.hpp"
#include "cohortsurv/statfn.hpp"

namespace cohortsurv::detail {

struct NewtonSettings {
  int max_iterations = 50;
  int max_halvings = 20;
  double loglik_tolerance = 1e-9;
  double gradient_tolerance = 1e-6;
  double step_tolerance = 1e-6;
  double divergence_threshold = 15.0;
  ModelErrorKind divergence_kind = ModelErrorKind::Divergence;
  std::string divergence_message;  // prefix, the column name is appended
};

struct NewtonResult {
  std::vector<double> beta;
  std::vector<double> trace;
  Matrix covariance;
  bool converged = false;
  int iterations = 0;
};

[[noreturn]] inline void throw_non_identifiable(const NotPositiveDefinite& e,
                                                const std::vector<std::string>& names) {
  const std::string column = e.pivot() < names.size() ? names[e.pivot()] : std::string();
  throw ModelError(ModelErrorKind::NonIdentifiable,
                   "information matrix is singular; column '" + column +
                       "' is not identifiable from the preceding columns",
                   column);
}

// Maximizes a concave log-likelihood. `eval(beta)` returns an object with
// `value`, `gradient` and `information` (negative Hessian); `gain(from, to)`
// returns objective(to) - objective(from) computed directly, since near the
// optimum the true gain is smaller than the rounding noise of either value.
// Accepted iterates never decrease the objective; the trace accumulates the
// gains onto the starting value.
template <typename Eval, typename Gain>
NewtonResult newton_maximize(Eval&& eval, Gain&& gain, const std::vector<std::string>& names,
                             const NewtonSettings& s) {
  NewtonResult out;
  out.beta.assign(names.size(), 0.0);
  auto terms = eval(out.beta);
  if (!std::isfinite(terms.value))
    throw ModelError(ModelErrorKind::NonIdentifiable, "log-likelihood is not finite at zero");
  out.trace.push_back(terms.value);

  for (int iter = 0; iter < s.max_iterations; ++iter) {
    std::vector<double> step;
    try {
      step = SpdMatrix(terms.information).solve(terms.gradient);
    } catch (const NotPositiveDefinite& e) {
      throw_non_identifiable(e, names);
    }
    if (max_abs(terms.gradient) <= s.gradient_tolerance && max_abs(step) <= s.step_tolerance) {
      out.converged = true;
      break;
    }

    double scale = 1.0;
    double delta = 0.0;
    bool accepted = false;
    std::vector<double> candidate(out.beta.size());
    for (int h = 0; h <= s.max_halvings; ++h, scale *= 0.5) {
      for (std::size_t j = 0; j < candidate.size(); ++j)
        candidate[j] = out.beta[j] + scale * step[j];
      delta = gain(std::span<const double>(out.beta), std::span<const double>(candidate));
      if (std::isfinite(delta) && delta >= 0.0) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // No ascent direction left at working precision.
      out.converged = max_abs(terms.gradient) <= s.gradient_tolerance;
      break;
    }

    ++out.iterations;
    out.beta = candidate;
    terms = eval(out.beta);
    out.trace.push_back(out.trace.back() + delta);

    std::size_t worst = 0;
    for (std::size_t j = 1; j < out.beta.size(); ++j)
      if (std::abs(out.beta[j]) > std::abs(out.beta[worst])) worst = j;
    if (!out.beta.empty() && std::abs(out.beta[worst]) > s.divergence_threshold) {
      throw ModelError(s.divergence_kind,
                       s.divergence_message + "'" + names[worst] + "' (|coefficient| exceeded " +
                           std::to_string(static_cast<int>(s.divergence_threshold)) + ")",
                       names[worst]);
    }

    if (delta <= s.loglik_tolerance && max_abs(terms.gradient) <= s.gradient_tolerance) {
      out.converged = true;
      break;
    }
  }

  try {
    out.covariance = SpdMatrix(terms.information).inverse();
  } catch (const NotPositiveDefinite& e) {
    throw_non_identifiable(e, names);
  }
  return out;
}

}  // namespace cohortsurv::detail
