#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cohortsurv/cohort.hpp"
#include "cohortsurv/coxph.hpp"
#include "cohortsurv/matrix.hpp"
#include "cohortsurv/survival_data.hpp"

namespace cohortsurv {

inline constexpr std::uint64_t kDefaultSeed = 2018;

struct LevelTarget {
  std::string level;  // canonical token
  int population = 0;
  int deaths = 0;
};

// Marginal targets for a synthetic cohort. The defaults reproduce the
// published baseline table: 132 characters, 89 deaths, per-level
// counts for sex, allegiance, occupation and region.
struct CalibrationTargets {
  int n = 132;
  int deaths = 89;
  int horizon = kDefaultHorizon;
  double median_follow_up = 32.0;
  double age_mean = 35.1;
  double age_sd = 18.3;
  std::map<Variable, std::vector<LevelTarget>> levels = default_levels();
  // Deaths by cause; deaths not covered here are recorded as `other`.
  std::map<Cause, int> causes = {{Cause::InvasiveInjury, 59},
                                 {Cause::Burn, 12},
                                 {Cause::Poison, 4},
                                 {Cause::Natural, 1}};

  static std::map<Variable, std::vector<LevelTarget>> default_levels();

  // Throws DataError when the targets contradict each other.
  void validate() const;
};

struct DeathResidual {
  Variable variable;
  std::string level;
  int target = 0;
  int achieved = 0;
};

struct CalibratedCohort {
  Cohort cohort;
  // One entry per level of sex, occupation and region (allegiance is
  // matched exactly by construction).
  std::vector<DeathResidual> residuals;
  double median_follow_up = 0.0;
};

// Deterministic for a given seed. Population marginals, total deaths and
// allegiance death counts match the targets exactly; death counts of the
// other variables are repaired greedily and any gap is reported.
CalibratedCohort generate_calibrated(const CalibrationTargets& targets = {},
                                     std::uint64_t seed = kDefaultSeed);

enum class CovariateScheme { Binary, Uniform };

struct PhScenario {
  int n = 1000;
  std::vector<double> true_coefficients{0.0};
  double baseline_hazard = 0.05;  // per-episode
  CovariateScheme scheme = CovariateScheme::Binary;
  int censor_episode = kDefaultHorizon;  // administrative censoring
  std::uint64_t seed = 1;
};

struct PhDataset {
  Matrix x;
  std::vector<std::string> column_names;
  SurvivalData data;
  std::vector<double> true_coefficients;
};

// Discrete-time proportional hazards: every subject enters at episode 1 and
// dies in each episode with probability 1 - exp(-h0 exp(x'beta)); survivors
// are censored at `censor_episode`. Binary covariates are balanced (exactly
// half ones per column).
PhDataset generate_ph(const PhScenario& scenario);

enum class GridModel { Cox, Logit };

struct GridProblem {
  GridModel model = GridModel::Cox;
  Matrix x;
  SurvivalData survival;              // Cox only
  TiesMethod ties = TiesMethod::Efron;  // Cox only
  std::vector<std::uint8_t> outcomes;  // Logit only
};

// Grid argmax of the exact objective (partial likelihood, or Bernoulli
// likelihood with intercept first) over the lattice lower + k * step in each
// free coefficient. At most two free coefficients. Large 2-D lattices are
// searched coarse to fine; both objectives are concave.
std::vector<double> oracle_grid_fit(const GridProblem& problem, double lower, double upper,
                                    double step);

}  // namespace cohortsurv
