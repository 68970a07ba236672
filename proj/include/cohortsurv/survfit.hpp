#pragma once

#include <span>
#include <vector>

#include "cohortsurv/survival_data.hpp"

namespace cohortsurv {

// Product-limit step function. One entry per distinct event time.
// n_censor[i] counts censored exits in [times[i], times[i+1]) (the last
// interval is open-ended); censorings before the first event time are not
// listed. ci_lower/ci_upper are NaN where the log-log band is undefined
// (survival 0 or 1).
struct KmCurve {
  std::vector<double> times;
  std::vector<int> n_risk;
  std::vector<int> n_event;
  std::vector<int> n_censor;
  std::vector<double> survival;
  std::vector<double> greenwood_var;
  std::vector<double> ci_lower;
  std::vector<double> ci_upper;
  double conf_level = 0.95;
};

// Kaplan-Meier estimate with delayed entry. A subject censored at t stays in
// the risk set for deaths at t.
KmCurve km_fit(const SurvivalData& data, double conf_level = 0.95);

// Right-continuous lookup: 1 before the first event time, last value after
// the last one.
double km_eval(const KmCurve& curve, double t);

struct LogRankResult {
  double chi_square = 0.0;
  int degrees_of_freedom = 0;
  double p_value = 1.0;
  std::vector<double> observed;
  std::vector<double> expected;
};

// Multi-group log-rank test over pooled event times with delayed-entry risk
// sets. Throws DataError for fewer than two groups, an empty group, or no
// events at all.
LogRankResult log_rank(std::span<const SurvivalData> groups);

}  // namespace cohortsurv
