#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cohortsurv/matrix.hpp"
#include "cohortsurv/survival_data.hpp"

namespace cohortsurv {

inline constexpr int kDefaultHorizon = 67;

enum class Sex { Male, Female };
enum class Allegiance { Stark, Targaryen, Lannister, Baratheon, Greyjoy, Martell, Tyrell, Other };
enum class Occupation { HouseMember, KnightSoldier, Advisor, Other };
enum class Region { North, South, Essos };
enum class Cause { InvasiveInjury, Burn, Poison, Natural, Other };

enum class Variable { Sex, Allegiance, Occupation, Region };

// Level orders follow the baseline table layout.
inline constexpr std::array kSexLevels{Sex::Male, Sex::Female};
inline constexpr std::array kAllegianceLevels{
    Allegiance::Stark,   Allegiance::Targaryen, Allegiance::Lannister, Allegiance::Baratheon,
    Allegiance::Greyjoy, Allegiance::Martell,   Allegiance::Tyrell,    Allegiance::Other};
inline constexpr std::array kOccupationLevels{Occupation::HouseMember, Occupation::KnightSoldier,
                                              Occupation::Advisor, Occupation::Other};
inline constexpr std::array kRegionLevels{Region::North, Region::South, Region::Essos};
inline constexpr std::array kCauseLevels{Cause::InvasiveInjury, Cause::Burn, Cause::Poison,
                                         Cause::Natural, Cause::Other};

// Canonical CSV tokens.
std::string_view token(Sex v);
std::string_view token(Allegiance v);
std::string_view token(Occupation v);
std::string_view token(Region v);
std::string_view token(Cause v);
std::string_view token(Variable v);

// Case-insensitive token parsing; std::nullopt for unknown tokens.
std::optional<Sex> parse_sex(std::string_view s);
std::optional<Allegiance> parse_allegiance(std::string_view s);
std::optional<Occupation> parse_occupation(std::string_view s);
std::optional<Region> parse_region(std::string_view s);
std::optional<Cause> parse_cause(std::string_view s);
std::optional<Variable> parse_variable(std::string_view s);

// Canonical tokens of every level of a variable, in table order.
std::vector<std::string> level_tokens(Variable v);

struct Subject {
  std::string id;
  std::string name;
  double age_years = 0.0;
  Sex sex = Sex::Male;
  Allegiance allegiance = Allegiance::Other;
  Occupation occupation = Occupation::Other;
  Region region = Region::North;
  int entry_episode = 1;
  int exit_episode = 1;
  bool event = false;
  std::optional<Cause> cause;
  std::optional<double> screen_minutes;
  bool killed_by_white_walker = false;
  bool supernatural_non_aging = false;

  // Token of this subject's level for a categorical variable.
  std::string_view level(Variable v) const;

  bool operator==(const Subject&) const = default;
};

// Validated, immutable collection of subjects. Ids are unique and every
// subject satisfies 1 <= entry <= exit <= horizon.
class Cohort {
 public:
  explicit Cohort(std::vector<Subject> subjects, int horizon = kDefaultHorizon);

  const std::vector<Subject>& subjects() const noexcept { return subjects_; }
  int horizon() const noexcept { return horizon_; }
  std::size_t size() const noexcept { return subjects_.size(); }
  bool empty() const noexcept { return subjects_.empty(); }

  bool operator==(const Cohort&) const = default;

 private:
  std::vector<Subject> subjects_;
  int horizon_;
};

// --- ingestion -------------------------------------------------------------

Cohort parse_cohort(std::string_view csv_text, int horizon = kDefaultHorizon);
Cohort read_cohort_file(const std::string& path, int horizon = kDefaultHorizon);

// Writes every required and optional column; parse_cohort inverts it exactly.
std::string serialize_cohort(const Cohort& cohort);

// --- exclusions ------------------------------------------------------------

enum class ExclusionRule { ScreenTime, WhiteWalker, Supernatural };
std::string_view token(ExclusionRule rule);

struct Exclusion {
  std::string id;
  ExclusionRule rule;
};

struct ExclusionResult {
  Cohort cohort;
  std::vector<Exclusion> removed;
};

// Removes subjects with screen time below the threshold (only when recorded),
// deaths at the hands of a White Walker, and non-aging supernatural characters.
// Each removal is reported once, under the first rule it trips.
ExclusionResult apply_exclusions(const Cohort& cohort, double min_screen_minutes = 5.0);

// --- design matrix ---------------------------------------------------------

struct CovariateSpec {
  double age_scale = 10.0;
  Sex sex_reference = Sex::Female;
  Allegiance allegiance_reference = Allegiance::Stark;
  Occupation occupation_reference = Occupation::HouseMember;
  Region region_reference = Region::North;

  // Sets a reference level by token; throws DataError when the token is not a
  // level of `variable`.
  void set_reference(Variable variable, std::string_view level);
};

inline constexpr std::size_t kDesignColumns = 14;

struct DesignMatrix {
  std::vector<std::string> column_names;
  Matrix values;
  std::vector<std::string> row_ids;
};

// Column names for a covariate spec: age_dec, the non-reference sex, then the
// non-reference levels of allegiance, occupation and region.
std::vector<std::string> design_column_names(const CovariateSpec& spec = {});

DesignMatrix encode_design(const Cohort& cohort, const CovariateSpec& spec = {});

// --- summaries -------------------------------------------------------------

struct Stratum {
  Variable variable;
  std::string level;
  int population = 0;
  double population_pct = 0.0;
  int deaths = 0;
  double death_pct = 0.0;
};

// Causes are reported against both the number of deaths and the cohort size,
// since published figures use either denominator.
struct CauseRow {
  Cause cause;
  int count = 0;
  double pct_of_deaths = 0.0;
  double pct_of_cohort = 0.0;
};

struct BaselineTable {
  std::vector<Stratum> strata;
  std::vector<CauseRow> causes;
  int n = 0;
  int deaths = 0;
  double death_pct = 0.0;
  double age_mean = 0.0;
  double age_sd = 0.0;
};

// Percentages are rounded to one decimal place.
BaselineTable baseline_table(const Cohort& cohort);

struct FollowUp {
  double median = 0.0;
  std::vector<int> durations;  // exit - entry + 1, in cohort order
};

FollowUp follow_up_summary(const Cohort& cohort);

SurvivalData to_survival_data(const Cohort& cohort, EntryMode mode = EntryMode::Staggered);

// Event indicators as model outcomes.
std::vector<std::uint8_t> event_outcomes(const Cohort& cohort);

}  // namespace cohortsurv
