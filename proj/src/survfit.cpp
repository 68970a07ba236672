#include "cohortsurv/survfit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cohortsurv/error.hpp"
#include "cohortsurv/matrix.hpp"
#include "cohortsurv/statfn.hpp"

namespace cohortsurv {

void SurvivalData::validate() const {
  if (entry.size() != exit.size() || event.size() != exit.size())
    throw DataError("entry, exit and event vectors differ in length");
  for (std::size_t i = 0; i < exit.size(); ++i) {
    if (!std::isfinite(entry[i]) || !std::isfinite(exit[i]))
      throw DataError("non-finite time for observation " + std::to_string(i));
    if (exit[i] < entry[i])
      throw DataError("exit before entry for observation " + std::to_string(i));
  }
}

namespace {

std::vector<double> event_times(const SurvivalData& data) {
  std::vector<double> times;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (data.event[i]) times.push_back(data.exit[i]);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  return times;
}

struct RiskCounts {
  int at_risk = 0;
  int deaths = 0;
};

RiskCounts counts_at(const SurvivalData& data, double t) {
  RiskCounts c;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.entry[i] <= t && t <= data.exit[i]) ++c.at_risk;
    if (data.event[i] && data.exit[i] == t) ++c.deaths;
  }
  return c;
}

}  // namespace

KmCurve km_fit(const SurvivalData& data, double conf_level) {
  data.validate();
  if (data.size() == 0) throw DataError("km_fit: empty input");
  const double z = normal_critical_value(conf_level);

  KmCurve curve;
  curve.conf_level = conf_level;
  curve.times = event_times(data);

  double surv = 1.0;
  double greenwood_sum = 0.0;
  // While nobody leaves or enters between event times, the factors
  // telescope: S = base * (r - d) / r_first. One division instead of a
  // running product keeps uncensored curves exactly equal to count / n.
  double run_base = 1.0;
  int run_risk = 0;
  int expected_risk = -1;
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();

  for (std::size_t k = 0; k < curve.times.size(); ++k) {
    const double t = curve.times[k];
    const double next =
        k + 1 < curve.times.size() ? curve.times[k + 1] : std::numeric_limits<double>::infinity();
    const auto [r, d] = counts_at(data, t);

    int censored = 0;
    for (std::size_t i = 0; i < data.size(); ++i)
      if (!data.event[i] && data.exit[i] >= t && data.exit[i] < next) ++censored;

    if (r != expected_risk) {
      run_base = surv;
      run_risk = r;
    }
    surv = run_base * (static_cast<double>(r - d) / run_risk);
    expected_risk = r - d;
    if (r > d) greenwood_sum += static_cast<double>(d) / (static_cast<double>(r) * (r - d));

    curve.n_risk.push_back(r);
    curve.n_event.push_back(d);
    curve.n_censor.push_back(censored);
    curve.survival.push_back(surv);
    curve.greenwood_var.push_back(surv > 0.0 ? surv * surv * greenwood_sum : 0.0);

    if (surv > 0.0 && surv < 1.0 && greenwood_sum > 0.0) {
      const double se = std::sqrt(greenwood_sum) / std::abs(std::log(surv));
      curve.ci_lower.push_back(std::pow(surv, std::exp(z * se)));
      curve.ci_upper.push_back(std::pow(surv, std::exp(-z * se)));
    } else {
      curve.ci_lower.push_back(nan);
      curve.ci_upper.push_back(nan);
    }
  }
  return curve;
}

double km_eval(const KmCurve& curve, double t) {
  const auto it = std::upper_bound(curve.times.begin(), curve.times.end(), t);
  if (it == curve.times.begin()) return 1.0;
  return curve.survival[static_cast<std::size_t>(it - curve.times.begin()) - 1];
}

LogRankResult log_rank(std::span<const SurvivalData> groups) {
  const std::size_t g = groups.size();
  if (g < 2) throw DataError("log_rank: at least two groups are required");
  for (std::size_t k = 0; k < g; ++k) {
    groups[k].validate();
    if (groups[k].size() == 0)
      throw DataError("log_rank: group " + std::to_string(k) + " is empty");
  }

  std::vector<double> times;
  for (const auto& grp : groups) {
    const auto t = event_times(grp);
    times.insert(times.end(), t.begin(), t.end());
  }
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  if (times.empty()) throw DataError("log_rank: no events in any group");

  LogRankResult result;
  result.observed.assign(g, 0.0);
  result.expected.assign(g, 0.0);
  Matrix variance(g, g);

  std::vector<double> at_risk(g);
  for (double t : times) {
    double r = 0.0;
    double d = 0.0;
    for (std::size_t k = 0; k < g; ++k) {
      const auto c = counts_at(groups[k], t);
      at_risk[k] = c.at_risk;
      result.observed[k] += c.deaths;
      r += c.at_risk;
      d += c.deaths;
    }
    for (std::size_t k = 0; k < g; ++k) result.expected[k] += d * at_risk[k] / r;
    if (r > 1.0) {
      const double factor = d * (r - d) / (r - 1.0);
      for (std::size_t a = 0; a < g; ++a)
        for (std::size_t b = 0; b < g; ++b) {
          const double pa = at_risk[a] / r;
          const double pb = at_risk[b] / r;
          variance(a, b) += factor * pa * ((a == b ? 1.0 : 0.0) - pb);
        }
    }
  }

  // Drop the last group: the full variance matrix is singular.
  const std::size_t m = g - 1;
  Matrix reduced(m, m);
  std::vector<double> diff(m);
  for (std::size_t a = 0; a < m; ++a) {
    diff[a] = result.observed[a] - result.expected[a];
    for (std::size_t b = 0; b < m; ++b) reduced(a, b) = 0.5 * (variance(a, b) + variance(b, a));
  }

  std::vector<double> solved;
  try {
    solved = SpdMatrix(reduced).solve(diff);
  } catch (const NotPositiveDefinite&) {
    throw DataError("log_rank: degenerate variance (a group is never at risk at an event time)");
  }
  double stat = 0.0;
  for (std::size_t a = 0; a < m; ++a) stat += diff[a] * solved[a];

  result.chi_square = std::max(0.0, stat);
  result.degrees_of_freedom = static_cast<int>(m);
  result.p_value = chi_square_sf(result.chi_square, result.degrees_of_freedom);
  return result;
}

}  // namespace cohortsurv
