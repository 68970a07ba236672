#include "cohortsurv/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <limits>
#include <numeric>

#include "cohortsurv/error.hpp"
#include "cohortsurv/logit.hpp"
#include "cohortsurv/rng.hpp"

namespace cohortsurv {

std::map<Variable, std::vector<LevelTarget>> CalibrationTargets::default_levels() {
  return {
      {Variable::Sex, {{"male", 100, 68}, {"female", 32, 21}}},
      {Variable::Allegiance,
       {{"Stark", 26, 13},
        {"Targaryen", 14, 9},
        {"Lannister", 19, 11},
        {"Baratheon", 13, 10},
        {"Greyjoy", 5, 2},
        {"Martell", 6, 5},
        {"Tyrell", 4, 4},
        {"Other", 45, 35}}},
      {Variable::Occupation,
       {{"HouseMember", 42, 29}, {"KnightSoldier", 46, 33}, {"Advisor", 13, 7}, {"Other", 31, 20}}},
      {Variable::Region, {{"North", 59, 42}, {"South", 49, 31}, {"Essos", 24, 16}}},
  };
}

void CalibrationTargets::validate() const {
  if (n < 1) throw DataError("targets: n must be positive");
  if (deaths < 0 || deaths > n) throw DataError("targets: deaths must lie in [0, n]");
  if (horizon < 1) throw DataError("targets: horizon must be positive");
  if (!(age_mean > 0.0) || !(age_sd > 0.0)) throw DataError("targets: age moments must be positive");

  for (Variable v : {Variable::Sex, Variable::Allegiance, Variable::Occupation, Variable::Region}) {
    const auto name = std::string(token(v));
    auto it = levels.find(v);
    if (it == levels.end()) throw DataError("targets: no levels for " + name);
    auto expected = level_tokens(v);
    if (it->second.size() != expected.size())
      throw DataError("targets: " + name + " must list every level exactly once");
    int pop = 0;
    int dead = 0;
    for (const auto& lt : it->second) {
      if (std::find(expected.begin(), expected.end(), lt.level) == expected.end())
        throw DataError("targets: '" + lt.level + "' is not a level of " + name);
      expected.erase(std::find(expected.begin(), expected.end(), lt.level));
      if (lt.population < 0 || lt.deaths < 0 || lt.deaths > lt.population)
        throw DataError("targets: " + name + "/" + lt.level + " needs 0 <= deaths <= population");
      pop += lt.population;
      dead += lt.deaths;
    }
    if (pop != n)
      throw DataError(fmt::format("targets: {} populations sum to {}, expected {}", name, pop, n));
    if (v == Variable::Allegiance && dead != deaths)
      throw DataError(fmt::format("targets: allegiance deaths sum to {}, expected {}", dead, deaths));
  }
  int caused = 0;
  for (const auto& [cause, count] : causes) {
    if (count < 0) throw DataError("targets: negative cause count");
    caused += count;
  }
  if (caused > deaths) throw DataError("targets: cause counts exceed deaths");
}

namespace {

// Writes level tokens into subjects through a setter, one token per subject.
void assign_levels(std::vector<Subject>& subjects, Variable v, const std::vector<std::string>& tokens) {
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    auto& s = subjects[i];
    const auto& t = tokens[i];
    switch (v) {
      case Variable::Sex: s.sex = *parse_sex(t); break;
      case Variable::Allegiance: s.allegiance = *parse_allegiance(t); break;
      case Variable::Occupation: s.occupation = *parse_occupation(t); break;
      case Variable::Region: s.region = *parse_region(t); break;
    }
  }
}

void swap_level(Subject& a, Subject& b, Variable v) {
  switch (v) {
    case Variable::Sex: std::swap(a.sex, b.sex); break;
    case Variable::Allegiance: std::swap(a.allegiance, b.allegiance); break;
    case Variable::Occupation: std::swap(a.occupation, b.occupation); break;
    case Variable::Region: std::swap(a.region, b.region); break;
  }
}

double median_duration(const std::vector<Subject>& subjects) {
  std::vector<int> d;
  d.reserve(subjects.size());
  for (const auto& s : subjects) d.push_back(s.exit_episode - s.entry_episode + 1);
  std::sort(d.begin(), d.end());
  const std::size_t n = d.size();
  return n % 2 == 1 ? d[n / 2] : 0.5 * (d[n / 2 - 1] + d[n / 2]);
}

}  // namespace

CalibratedCohort generate_calibrated(const CalibrationTargets& targets, std::uint64_t seed) {
  targets.validate();
  Rng rng(seed);
  const auto n = static_cast<std::size_t>(targets.n);
  std::vector<Subject> subjects(n);

  // Independent, shuffled column assignment: exact population marginals.
  for (const auto& [variable, levels] : targets.levels) {
    std::vector<std::string> tokens;
    for (const auto& lt : levels) tokens.insert(tokens.end(), lt.population, lt.level);
    rng.shuffle(tokens);
    assign_levels(subjects, variable, tokens);
  }

  // Deaths: exact within every allegiance level.
  for (const auto& lt : targets.levels.at(Variable::Allegiance)) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < n; ++i)
      if (subjects[i].level(Variable::Allegiance) == lt.level) members.push_back(i);
    rng.shuffle(members);
    for (int k = 0; k < lt.deaths; ++k) subjects[members[k]].event = true;
  }

  // Greedy repair of the remaining death marginals: swapping a variable's
  // value between a dead and a living subject keeps its population marginal
  // and moves one death between two levels.
  CalibratedCohort out{Cohort({}, targets.horizon), {}, 0.0};
  for (Variable v : {Variable::Sex, Variable::Occupation, Variable::Region}) {
    const auto& levels = targets.levels.at(v);
    auto dead_count = [&](const std::string& level) {
      return static_cast<int>(std::count_if(subjects.begin(), subjects.end(), [&](const Subject& s) {
        return s.event && s.level(v) == level;
      }));
    };
    auto pick = [&](const std::string& level, bool dead) -> std::optional<std::size_t> {
      std::vector<std::size_t> pool;
      for (std::size_t i = 0; i < n; ++i)
        if (subjects[i].event == dead && subjects[i].level(v) == level) pool.push_back(i);
      if (pool.empty()) return std::nullopt;
      return pool[rng.below(pool.size())];
    };

    for (bool improved = true; improved;) {
      improved = false;
      for (const auto& over : levels) {
        if (dead_count(over.level) <= over.deaths) continue;
        for (const auto& under : levels) {
          if (dead_count(under.level) >= under.deaths) continue;
          const auto d = pick(over.level, true);
          const auto a = pick(under.level, false);
          if (!d || !a) continue;
          swap_level(subjects[*d], subjects[*a], v);
          improved = true;
          break;
        }
        if (improved) break;
      }
    }
    for (const auto& lt : levels) out.residuals.push_back({v, lt.level, lt.deaths, dead_count(lt.level)});
  }

  // Ages: gamma with the target mean and SD, whole years.
  const double shape = (targets.age_mean / targets.age_sd) * (targets.age_mean / targets.age_sd);
  const double scale = targets.age_sd * targets.age_sd / targets.age_mean;
  for (auto& s : subjects) s.age_years = std::round(rng.gamma(shape, scale));

  // Staggered first appearances: half the cast appears in the first episode,
  // the rest over the first three quarters of the horizon.
  const int horizon = targets.horizon;
  const int last_entry = std::max(1, horizon * 3 / 4);
  std::vector<double> death_quantile(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& s = subjects[i];
    s.entry_episode = (rng.uniform() < 0.5 || last_entry == 1)
                          ? 1
                          : 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(last_entry - 1)));
    death_quantile[i] = rng.uniform_open();
    s.screen_minutes = std::round(10.0 * (5.0 + 295.0 * rng.uniform())) / 10.0;
  }

  // Time of death within the remaining span is span * q^k; pick the exponent
  // whose median follow-up is closest to the target.
  auto place_exits = [&](double exponent) {
    for (std::size_t i = 0; i < n; ++i) {
      auto& s = subjects[i];
      const int span = horizon - s.entry_episode + 1;
      if (!s.event) {
        s.exit_episode = horizon;
        continue;
      }
      const int duration = std::clamp(
          static_cast<int>(std::ceil(span * std::pow(death_quantile[i], exponent))), 1, span);
      s.exit_episode = s.entry_episode + duration - 1;
    }
  };
  double best_exponent = 1.0;
  double best_gap = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= 400; ++k) {
    const double exponent = std::exp(std::log(0.05) + k * (std::log(20.0) - std::log(0.05)) / 400);
    place_exits(exponent);
    const double gap = std::abs(median_duration(subjects) - targets.median_follow_up);
    if (gap < best_gap) {
      best_gap = gap;
      best_exponent = exponent;
    }
  }
  place_exits(best_exponent);

  // Causes of death, shuffled over the dying subjects.
  std::vector<Cause> causes;
  for (const auto& [cause, count] : targets.causes) causes.insert(causes.end(), count, cause);
  int dying = 0;
  for (const auto& s : subjects) dying += s.event ? 1 : 0;
  causes.resize(static_cast<std::size_t>(dying), Cause::Other);
  rng.shuffle(causes);
  std::size_t next_cause = 0;
  for (std::size_t i = 0; i < n; ++i) {
    auto& s = subjects[i];
    s.id = fmt::format("c{:03d}", i + 1);
    s.name = fmt::format("Character {:03d}", i + 1);
    if (s.event) s.cause = causes[next_cause++];
  }

  out.median_follow_up = median_duration(subjects);
  out.cohort = Cohort(std::move(subjects), horizon);
  return out;
}

PhDataset generate_ph(const PhScenario& scenario) {
  if (scenario.n < 1) throw DataError("scenario: n must be at least 1");
  if (!(scenario.baseline_hazard > 0.0)) throw DataError("scenario: baseline hazard must be positive");
  if (scenario.true_coefficients.empty()) throw DataError("scenario: no coefficients");

  Rng rng(scenario.seed);
  const auto n = static_cast<std::size_t>(scenario.n);
  const std::size_t p = scenario.true_coefficients.size();

  PhDataset out;
  out.true_coefficients = scenario.true_coefficients;
  out.x = Matrix(n, p);
  for (std::size_t j = 0; j < p; ++j) {
    out.column_names.push_back(fmt::format("x{}", j + 1));
    if (scenario.scheme == CovariateScheme::Binary) {
      std::vector<double> col(n, 0.0);
      std::fill(col.begin(), col.begin() + static_cast<std::ptrdiff_t>(n / 2), 1.0);
      rng.shuffle(col);
      for (std::size_t i = 0; i < n; ++i) out.x(i, j) = col[i];
    } else {
      for (std::size_t i = 0; i < n; ++i) out.x(i, j) = rng.uniform();
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    double eta = 0.0;
    for (std::size_t j = 0; j < p; ++j) eta += out.x(i, j) * scenario.true_coefficients[j];
    const double hazard = scenario.baseline_hazard * std::exp(eta);
    const double prob = -std::expm1(-hazard);
    if (!(prob < 1.0))
      throw DataError(fmt::format("scenario: per-episode death probability reaches 1 for subject {}", i));
    // Geometric waiting time by inversion.
    const double u = rng.uniform_open();
    const double waiting = std::floor(std::log(u) / std::log1p(-prob)) + 1.0;
    const bool dies = waiting <= scenario.censor_episode;
    out.data.entry.push_back(1.0);
    out.data.exit.push_back(dies ? waiting : static_cast<double>(scenario.censor_episode));
    out.data.event.push_back(dies ? 1 : 0);
  }
  if (out.data.event_count() == 0)
    throw ModelError(ModelErrorKind::NoEvents, "scenario produced no events before censoring");
  out.data.validate();
  return out;
}

// --- grid oracle -----------------------------------------------------------

std::vector<double> oracle_grid_fit(const GridProblem& problem, double lower, double upper,
                                    double step) {
  if (!std::isfinite(lower) || !std::isfinite(upper) || !(upper > lower))
    throw DataError("grid: bounds must be finite with lower < upper");
  if (!(step > 0.0)) throw DataError("grid: step must be positive");
  const std::size_t dims = problem.model == GridModel::Cox ? problem.x.cols() : problem.x.cols() + 1;
  if (dims < 1 || dims > 2) throw DataError("grid: only 1 or 2 free coefficients are supported");

  auto objective = [&](std::span<const double> b) {
    return problem.model == GridModel::Cox
               ? partial_loglik(b, problem.x, problem.survival, problem.ties)
               : logit_loglik(b, problem.x, problem.outcomes);
  };

  const auto last = static_cast<long long>(std::floor((upper - lower) / step + 1e-9));
  auto coord = [&](long long k) { return lower + static_cast<double>(k) * step; };

  std::vector<long long> best(dims, 0);
  double best_value = -std::numeric_limits<double>::infinity();
  std::vector<double> point(dims);

  // Searches lattice indices lo..hi (clamped) with the given stride per axis.
  auto search = [&](std::vector<long long> lo, std::vector<long long> hi, long long stride) {
    auto found = best;
    double found_value = -std::numeric_limits<double>::infinity();
    for (std::size_t d = 0; d < dims; ++d) {
      lo[d] = std::max(0LL, lo[d]);
      hi[d] = std::min(last, hi[d]);
    }
    auto visit = [&](const std::vector<long long>& idx) {
      for (std::size_t d = 0; d < dims; ++d) point[d] = coord(idx[d]);
      const double v = objective(point);
      if (std::isfinite(v) && v > found_value) {
        found_value = v;
        found = idx;
      }
    };
    std::vector<long long> idx(dims);
    for (idx[0] = lo[0]; idx[0] <= hi[0]; idx[0] += stride) {
      if (dims == 1) {
        visit(idx);
        continue;
      }
      for (idx[1] = lo[1]; idx[1] <= hi[1]; idx[1] += stride) visit(idx);
    }
    if (found_value > best_value || !std::isfinite(best_value)) {
      best_value = found_value;
      best = found;
    }
  };

  const double total = std::pow(static_cast<double>(last + 1), static_cast<double>(dims));
  if (total <= 4e6) {
    search(std::vector<long long>(dims, 0), std::vector<long long>(dims, last), 1);
  } else {
    long long stride = std::max(1LL, (last + 1) / 200);
    search(std::vector<long long>(dims, 0), std::vector<long long>(dims, last), stride);
    while (stride > 1) {
      const long long window = 2 * stride;
      stride = std::max(1LL, stride / 10);
      std::vector<long long> lo(dims), hi(dims);
      for (std::size_t d = 0; d < dims; ++d) {
        lo[d] = best[d] - window;
        hi[d] = best[d] + window;
      }
      search(lo, hi, stride);
    }
    std::vector<long long> lo(dims), hi(dims);
    for (std::size_t d = 0; d < dims; ++d) {
      lo[d] = best[d] - 2;
      hi[d] = best[d] + 2;
    }
    search(lo, hi, 1);
  }
  if (!std::isfinite(best_value)) throw DataError("grid: objective is not finite anywhere on the grid");

  std::vector<double> out(dims);
  for (std::size_t d = 0; d < dims; ++d) out[d] = coord(best[d]);
  return out;
}

}  // namespace cohortsurv
