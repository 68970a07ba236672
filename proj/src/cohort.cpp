#include "cohortsurv/cohort.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "cohortsurv/error.hpp"
#include "text_util.hpp"

namespace cohortsurv {

namespace {

template <typename Enum, std::size_t N>
std::optional<Enum> lookup(std::string_view s, const std::array<Enum, N>& levels,
                           std::string_view (*name)(Enum)) {
  s = detail::trim(s);
  for (Enum level : levels)
    if (detail::iequals(s, name(level))) return level;
  return std::nullopt;
}

double round1(double pct) { return std::round(pct * 10.0) / 10.0; }

double percent(int count, int total) {
  return total == 0 ? 0.0 : round1(100.0 * count / total);
}

}  // namespace

std::string_view token(Sex v) { return v == Sex::Male ? "male" : "female"; }

std::string_view token(Allegiance v) {
  switch (v) {
    case Allegiance::Stark: return "Stark";
    case Allegiance::Targaryen: return "Targaryen";
    case Allegiance::Lannister: return "Lannister";
    case Allegiance::Baratheon: return "Baratheon";
    case Allegiance::Greyjoy: return "Greyjoy";
    case Allegiance::Martell: return "Martell";
    case Allegiance::Tyrell: return "Tyrell";
    case Allegiance::Other: return "Other";
  }
  return "";
}

std::string_view token(Occupation v) {
  switch (v) {
    case Occupation::HouseMember: return "HouseMember";
    case Occupation::KnightSoldier: return "KnightSoldier";
    case Occupation::Advisor: return "Advisor";
    case Occupation::Other: return "Other";
  }
  return "";
}

std::string_view token(Region v) {
  switch (v) {
    case Region::North: return "North";
    case Region::South: return "South";
    case Region::Essos: return "Essos";
  }
  return "";
}

std::string_view token(Cause v) {
  switch (v) {
    case Cause::InvasiveInjury: return "invasive_injury";
    case Cause::Burn: return "burn";
    case Cause::Poison: return "poison";
    case Cause::Natural: return "natural";
    case Cause::Other: return "other";
  }
  return "";
}

std::string_view token(Variable v) {
  switch (v) {
    case Variable::Sex: return "sex";
    case Variable::Allegiance: return "allegiance";
    case Variable::Occupation: return "occupation";
    case Variable::Region: return "region";
  }
  return "";
}

std::string_view token(ExclusionRule rule) {
  switch (rule) {
    case ExclusionRule::ScreenTime: return "screen_time";
    case ExclusionRule::WhiteWalker: return "white_walker";
    case ExclusionRule::Supernatural: return "supernatural";
  }
  return "";
}

std::optional<Sex> parse_sex(std::string_view s) {
  return lookup<Sex>(s, kSexLevels, token);
}
std::optional<Allegiance> parse_allegiance(std::string_view s) {
  return lookup<Allegiance>(s, kAllegianceLevels, token);
}
std::optional<Occupation> parse_occupation(std::string_view s) {
  return lookup<Occupation>(s, kOccupationLevels, token);
}
std::optional<Region> parse_region(std::string_view s) {
  return lookup<Region>(s, kRegionLevels, token);
}
std::optional<Cause> parse_cause(std::string_view s) {
  return lookup<Cause>(s, kCauseLevels, token);
}
std::optional<Variable> parse_variable(std::string_view s) {
  static constexpr std::array kVariables{Variable::Sex, Variable::Allegiance,
                                         Variable::Occupation, Variable::Region};
  return lookup<Variable>(s, kVariables, token);
}

std::vector<std::string> level_tokens(Variable v) {
  std::vector<std::string> out;
  auto add = [&out](const auto& levels) {
    for (auto level : levels) out.emplace_back(token(level));
  };
  switch (v) {
    case Variable::Sex: add(kSexLevels); break;
    case Variable::Allegiance: add(kAllegianceLevels); break;
    case Variable::Occupation: add(kOccupationLevels); break;
    case Variable::Region: add(kRegionLevels); break;
  }
  return out;
}

std::string_view Subject::level(Variable v) const {
  switch (v) {
    case Variable::Sex: return token(sex);
    case Variable::Allegiance: return token(allegiance);
    case Variable::Occupation: return token(occupation);
    case Variable::Region: return token(region);
  }
  return "";
}

Cohort::Cohort(std::vector<Subject> subjects, int horizon)
    : subjects_(std::move(subjects)), horizon_(horizon) {
  if (horizon_ < 1) throw DataError("horizon must be at least 1");
  std::set<std::string> ids;
  for (const auto& s : subjects_) {
    const std::string who = "subject '" + s.id + "': ";
    if (s.id.empty()) throw DataError("subject with empty id");
    if (!ids.insert(s.id).second) throw DataError("duplicate id '" + s.id + "'");
    if (!std::isfinite(s.age_years) || s.age_years < 0.0)
      throw DataError(who + "age_years must be finite and non-negative");
    if (s.entry_episode < 1) throw DataError(who + "entry_episode must be >= 1");
    if (s.entry_episode > s.exit_episode) throw DataError(who + "entry_episode > exit_episode");
    if (s.exit_episode > horizon_)
      throw DataError(who + "exit_episode exceeds horizon " + std::to_string(horizon_));
    if (s.cause && !s.event) throw DataError(who + "cause given for a subject without event");
    if (s.screen_minutes && (!std::isfinite(*s.screen_minutes) || *s.screen_minutes < 0.0))
      throw DataError(who + "screen_minutes must be finite and non-negative");
  }
}

// --- CSV -------------------------------------------------------------------

namespace {

constexpr std::array<std::string_view, 11> kRequiredColumns{
    "id",         "name",          "age_years",    "sex",   "allegiance", "occupation",
    "region",     "entry_episode", "exit_episode", "event", "cause"};
constexpr std::array<std::string_view, 3> kOptionalColumns{
    "screen_minutes", "killed_by_white_walker", "supernatural_non_aging"};

bool parse_flag(std::string_view raw, int row, std::string_view column) {
  const auto s = detail::trim(raw);
  if (s.empty() || s == "0" || detail::iequals(s, "false")) return false;
  if (s == "1" || detail::iequals(s, "true")) return true;
  throw DataError("column '" + std::string(column) + "': invalid boolean '" + std::string(s) +
                      "'",
                  row);
}

template <typename Enum>
Enum parse_enum(std::string_view raw, std::optional<Enum> (*parser)(std::string_view), int row,
                std::string_view column) {
  if (auto v = parser(raw)) return *v;
  throw DataError("column '" + std::string(column) + "': unknown token '" +
                      std::string(detail::trim(raw)) + "'",
                  row);
}

}  // namespace

Cohort parse_cohort(std::string_view csv_text, int horizon) {
  auto records = detail::csv_records(csv_text);
  std::erase_if(records, [](const auto& r) { return detail::trim(r.second).empty(); });
  if (records.empty()) throw DataError("missing header row");

  std::map<std::string, std::size_t, std::less<>> column_index;
  {
    const auto header = detail::split_csv_record(records.front().second);
    for (std::size_t i = 0; i < header.size(); ++i) {
      std::string name(detail::trim(header[i]));
      if (!column_index.emplace(name, i).second)
        throw DataError("duplicate column '" + name + "'", records.front().first);
    }
  }
  for (auto col : kRequiredColumns)
    if (!column_index.contains(col))
      throw DataError("missing required column '" + std::string(col) + "'");

  const std::size_t width = column_index.size();
  std::vector<Subject> subjects;
  std::set<std::string, std::less<>> ids;
  subjects.reserve(records.size() - 1);

  for (std::size_t r = 1; r < records.size(); ++r) {
    const int row = records[r].first;
    const auto fields = detail::split_csv_record(records[r].second);
    if (fields.size() != width)
      throw DataError("expected " + std::to_string(width) + " fields, found " +
                          std::to_string(fields.size()),
                      row);

    auto field = [&](std::string_view col) -> std::string_view {
      auto it = column_index.find(col);
      if (it == column_index.end()) return {};
      return detail::trim(fields[it->second]);
    };
    auto number = [&](std::string_view col) {
      auto v = detail::parse_double(field(col));
      if (!v || !std::isfinite(*v))
        throw DataError("column '" + std::string(col) + "': unparseable number '" +
                            std::string(field(col)) + "'",
                        row);
      return *v;
    };
    auto integer = [&](std::string_view col) {
      auto v = detail::parse_int(field(col));
      if (!v) {
        throw DataError("column '" + std::string(col) + "': unparseable integer '" +
                            std::string(field(col)) + "'",
                        row);
      }
      return static_cast<int>(*v);
    };

    Subject s;
    s.id = std::string(field("id"));
    if (s.id.empty()) throw DataError("empty id", row);
    if (!ids.insert(s.id).second) throw DataError("duplicate id '" + s.id + "'", row);
    s.name = std::string(field("name"));

    s.age_years = number("age_years");
    if (s.age_years < 0.0) throw DataError("column 'age_years': negative age", row);
    s.sex = parse_enum<Sex>(field("sex"), parse_sex, row, "sex");
    s.allegiance = parse_enum<Allegiance>(field("allegiance"), parse_allegiance, row, "allegiance");
    s.occupation = parse_enum<Occupation>(field("occupation"), parse_occupation, row, "occupation");
    s.region = parse_enum<Region>(field("region"), parse_region, row, "region");

    s.entry_episode = integer("entry_episode");
    s.exit_episode = integer("exit_episode");
    if (s.entry_episode < 1) throw DataError("entry_episode must be >= 1", row);
    if (s.entry_episode > s.exit_episode)
      throw DataError("entry_episode " + std::to_string(s.entry_episode) + " > exit_episode " +
                          std::to_string(s.exit_episode),
                      row);
    if (s.exit_episode > horizon)
      throw DataError("exit_episode " + std::to_string(s.exit_episode) + " exceeds horizon " +
                          std::to_string(horizon),
                      row);

    const auto event = field("event");
    if (event == "1") {
      s.event = true;
    } else if (event == "0") {
      s.event = false;
    } else {
      throw DataError("column 'event': expected 0 or 1, found '" + std::string(event) + "'", row);
    }

    if (const auto cause = field("cause"); !cause.empty()) {
      if (!s.event) throw DataError("cause given for a subject without event", row);
      s.cause = parse_enum<Cause>(cause, parse_cause, row, "cause");
    }

    if (const auto minutes = field("screen_minutes"); !minutes.empty()) {
      s.screen_minutes = number("screen_minutes");
      if (*s.screen_minutes < 0.0)
        throw DataError("column 'screen_minutes': negative value", row);
    }
    s.killed_by_white_walker =
        parse_flag(field("killed_by_white_walker"), row, "killed_by_white_walker");
    s.supernatural_non_aging =
        parse_flag(field("supernatural_non_aging"), row, "supernatural_non_aging");

    subjects.push_back(std::move(s));
  }
  return Cohort(std::move(subjects), horizon);
}

Cohort read_cohort_file(const std::string& path, int horizon) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_cohort(buf.str(), horizon);
}

std::string serialize_cohort(const Cohort& cohort) {
  std::string out;
  auto append_row = [&out](const auto& fields) {
    bool first = true;
    for (const auto& f : fields) {
      if (!first) out += ',';
      out += detail::csv_escape(f);
      first = false;
    }
    out += '\n';
  };

  std::vector<std::string> header(kRequiredColumns.begin(), kRequiredColumns.end());
  header.insert(header.end(), kOptionalColumns.begin(), kOptionalColumns.end());
  append_row(header);

  for (const auto& s : cohort.subjects()) {
    std::vector<std::string> row{
        s.id,
        s.name,
        detail::format_double(s.age_years),
        std::string(token(s.sex)),
        std::string(token(s.allegiance)),
        std::string(token(s.occupation)),
        std::string(token(s.region)),
        std::to_string(s.entry_episode),
        std::to_string(s.exit_episode),
        s.event ? "1" : "0",
        s.cause ? std::string(token(*s.cause)) : std::string(),
        s.screen_minutes ? detail::format_double(*s.screen_minutes) : std::string(),
        s.killed_by_white_walker ? "1" : "0",
        s.supernatural_non_aging ? "1" : "0",
    };
    append_row(row);
  }
  return out;
}

// --- exclusions ------------------------------------------------------------

ExclusionResult apply_exclusions(const Cohort& cohort, double min_screen_minutes) {
  std::vector<Subject> kept;
  std::vector<Exclusion> removed;
  for (const auto& s : cohort.subjects()) {
    std::optional<ExclusionRule> rule;
    if (s.screen_minutes && *s.screen_minutes < min_screen_minutes)
      rule = ExclusionRule::ScreenTime;
    else if (s.killed_by_white_walker)
      rule = ExclusionRule::WhiteWalker;
    else if (s.supernatural_non_aging)
      rule = ExclusionRule::Supernatural;

    if (rule)
      removed.push_back({s.id, *rule});
    else
      kept.push_back(s);
  }
  return {Cohort(std::move(kept), cohort.horizon()), std::move(removed)};
}

// --- design ----------------------------------------------------------------

void CovariateSpec::set_reference(Variable variable, std::string_view level) {
  auto fail = [&] {
    throw DataError("'" + std::string(level) + "' is not a level of " +
                    std::string(token(variable)));
  };
  switch (variable) {
    case Variable::Sex:
      if (auto v = parse_sex(level)) sex_reference = *v; else fail();
      break;
    case Variable::Allegiance:
      if (auto v = parse_allegiance(level)) allegiance_reference = *v; else fail();
      break;
    case Variable::Occupation:
      if (auto v = parse_occupation(level)) occupation_reference = *v; else fail();
      break;
    case Variable::Region:
      if (auto v = parse_region(level)) region_reference = *v; else fail();
      break;
  }
}

namespace {

// Dummy column order. Allegiance and occupation follow the regression table
// (alphabetical, "Other" last); the reference level is dropped.
constexpr std::array kAllegianceColumns{
    Allegiance::Stark,     Allegiance::Baratheon, Allegiance::Greyjoy, Allegiance::Lannister,
    Allegiance::Martell,   Allegiance::Targaryen, Allegiance::Tyrell,  Allegiance::Other};
constexpr std::array kOccupationColumns{Occupation::HouseMember, Occupation::Advisor,
                                        Occupation::KnightSoldier, Occupation::Other};
constexpr std::array kRegionColumns{Region::North, Region::South, Region::Essos};

std::string column_label(Allegiance a) {
  return a == Allegiance::Other ? "OtherAllegiance" : std::string(token(a));
}
std::string column_label(Occupation o) {
  return o == Occupation::Other ? "OtherOccupation" : std::string(token(o));
}
std::string column_label(Region r) { return std::string(token(r)); }

}  // namespace

std::vector<std::string> design_column_names(const CovariateSpec& spec) {
  std::vector<std::string> names{"age_dec", spec.sex_reference == Sex::Female ? "male" : "female"};
  for (auto a : kAllegianceColumns)
    if (a != spec.allegiance_reference) names.push_back(column_label(a));
  for (auto o : kOccupationColumns)
    if (o != spec.occupation_reference) names.push_back(column_label(o));
  for (auto r : kRegionColumns)
    if (r != spec.region_reference) names.push_back(column_label(r));
  return names;
}

DesignMatrix encode_design(const Cohort& cohort, const CovariateSpec& spec) {
  if (cohort.empty()) throw DataError("cannot encode an empty cohort");
  if (!(spec.age_scale > 0.0) || !std::isfinite(spec.age_scale))
    throw DataError("age_scale must be positive");

  DesignMatrix design;
  design.column_names = design_column_names(spec);
  design.values = Matrix(cohort.size(), design.column_names.size());

  for (std::size_t i = 0; i < cohort.size(); ++i) {
    const Subject& s = cohort.subjects()[i];
    auto row = design.values.row(i);
    std::size_t col = 0;
    row[col++] = s.age_years / spec.age_scale;
    row[col++] = s.sex == spec.sex_reference ? 0.0 : 1.0;
    for (auto a : kAllegianceColumns)
      if (a != spec.allegiance_reference) row[col++] = s.allegiance == a ? 1.0 : 0.0;
    for (auto o : kOccupationColumns)
      if (o != spec.occupation_reference) row[col++] = s.occupation == o ? 1.0 : 0.0;
    for (auto r : kRegionColumns)
      if (r != spec.region_reference) row[col++] = s.region == r ? 1.0 : 0.0;
    design.row_ids.push_back(s.id);
  }
  return design;
}

// --- summaries -------------------------------------------------------------

BaselineTable baseline_table(const Cohort& cohort) {
  if (cohort.empty()) throw DataError("cannot summarize an empty cohort");

  BaselineTable table;
  table.n = static_cast<int>(cohort.size());
  for (const auto& s : cohort.subjects()) table.deaths += s.event ? 1 : 0;
  table.death_pct = percent(table.deaths, table.n);

  double sum = 0.0;
  for (const auto& s : cohort.subjects()) sum += s.age_years;
  table.age_mean = sum / table.n;
  double ss = 0.0;
  for (const auto& s : cohort.subjects()) ss += (s.age_years - table.age_mean) * (s.age_years - table.age_mean);
  table.age_sd = table.n > 1 ? std::sqrt(ss / (table.n - 1)) : 0.0;

  for (Variable v : {Variable::Sex, Variable::Allegiance, Variable::Occupation, Variable::Region}) {
    for (const auto& level : level_tokens(v)) {
      Stratum st{v, level};
      for (const auto& s : cohort.subjects()) {
        if (s.level(v) != level) continue;
        ++st.population;
        st.deaths += s.event ? 1 : 0;
      }
      st.population_pct = percent(st.population, table.n);
      st.death_pct = percent(st.deaths, st.population);
      table.strata.push_back(std::move(st));
    }
  }

  for (Cause c : kCauseLevels) {
    CauseRow row{c};
    for (const auto& s : cohort.subjects())
      if (s.event && s.cause == c) ++row.count;
    row.pct_of_deaths = percent(row.count, table.deaths);
    row.pct_of_cohort = percent(row.count, table.n);
    table.causes.push_back(row);
  }
  return table;
}

FollowUp follow_up_summary(const Cohort& cohort) {
  if (cohort.empty()) throw DataError("cannot summarize an empty cohort");
  FollowUp out;
  out.durations.reserve(cohort.size());
  for (const auto& s : cohort.subjects())
    out.durations.push_back(s.exit_episode - s.entry_episode + 1);

  std::vector<int> sorted = out.durations;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  out.median = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  return out;
}

SurvivalData to_survival_data(const Cohort& cohort, EntryMode mode) {
  SurvivalData data;
  data.entry.reserve(cohort.size());
  data.exit.reserve(cohort.size());
  data.event.reserve(cohort.size());
  for (const auto& s : cohort.subjects()) {
    data.entry.push_back(mode == EntryMode::Origin ? 1.0 : s.entry_episode);
    data.exit.push_back(s.exit_episode);
    data.event.push_back(s.event ? 1 : 0);
  }
  return data;
}

std::vector<std::uint8_t> event_outcomes(const Cohort& cohort) {
  std::vector<std::uint8_t> y;
  y.reserve(cohort.size());
  for (const auto& s : cohort.subjects()) y.push_back(s.event ? 1 : 0);
  return y;
}

}  // namespace cohortsurv
