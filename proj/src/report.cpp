#include "cohortsurv/report.hpp"

#include <cmath>
#include <fmt/format.h>

#include "cohortsurv/error.hpp"
#include "json_util.hpp"
#include "text_util.hpp"

namespace cohortsurv {

using nlohmann::ordered_json;

std::string level_label(Variable variable, std::string_view level) {
  switch (variable) {
    case Variable::Sex: return level == "male" ? "Male" : "Female";
    case Variable::Allegiance:
      return level == "Other" ? "Other Allegiance/Commoners" : std::string(level);
    case Variable::Occupation:
      if (level == "HouseMember") return "Member of a House or Royalty";
      if (level == "KnightSoldier") return "Knight or Soldier";
      if (level == "Other") return "Other Occupation";
      return std::string(level);
    case Variable::Region: return std::string(level);
  }
  return std::string(level);
}

namespace {

std::string variable_title(Variable v) {
  switch (v) {
    case Variable::Sex: return "Sex";
    case Variable::Allegiance: return "Allegiance";
    case Variable::Occupation: return "Occupation";
    case Variable::Region: return "Geographic Location";
  }
  return "";
}

std::string cause_label(Cause c) {
  switch (c) {
    case Cause::InvasiveInjury: return "Invasive injury";
    case Cause::Burn: return "Burns";
    case Cause::Poison: return "Poison";
    case Cause::Natural: return "Natural";
    case Cause::Other: return "Other or unspecified";
  }
  return "";
}

std::string count_pct(int count, double pct) { return fmt::format("{} ({:.1f})", count, pct); }

// Full-precision number for JSON; NaN becomes null.
ordered_json number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

ordered_json baseline_json(const BaselineTable& t) {
  ordered_json j;
  j["n"] = t.n;
  j["deaths"] = t.deaths;
  j["death_pct"] = t.death_pct;
  j["age_mean"] = t.age_mean;
  j["age_sd"] = t.age_sd;
  j["strata"] = ordered_json::array();
  for (const auto& s : t.strata) {
    j["strata"].push_back({{"variable", token(s.variable)},
                           {"level", s.level},
                           {"population", s.population},
                           {"population_pct", s.population_pct},
                           {"deaths", s.deaths},
                           {"death_pct", s.death_pct}});
  }
  j["causes"] = ordered_json::array();
  for (const auto& c : t.causes) {
    j["causes"].push_back({{"cause", token(c.cause)},
                           {"count", c.count},
                           {"pct_of_deaths", c.pct_of_deaths},
                           {"pct_of_cohort", c.pct_of_cohort}});
  }
  return j;
}

std::string baseline_markdown(const BaselineTable& t) {
  std::string out = fmt::format("| Characteristic | Study Population (n={}) | Deaths [n(%)] |\n", t.n);
  out += "|:---|---:|---:|\n";
  out += fmt::format("| Age, years [mean(SD)] | {:.1f} ({:.1f}) | |\n", t.age_mean, t.age_sd);
  std::optional<Variable> current;
  for (const auto& s : t.strata) {
    if (s.variable != current) {
      current = s.variable;
      if (s.variable != Variable::Sex) out += fmt::format("| **{}** | | |\n", variable_title(s.variable));
    }
    out += fmt::format("| {} | {} | {} |\n", level_label(s.variable, s.level),
                       count_pct(s.population, s.population_pct), count_pct(s.deaths, s.death_pct));
  }
  out += fmt::format("| Total | | {} |\n", count_pct(t.deaths, t.death_pct));

  out += "\n| Cause of death | n | % of deaths | % of cohort |\n|:---|---:|---:|---:|\n";
  for (const auto& c : t.causes)
    out += fmt::format("| {} | {} | {:.1f} | {:.1f} |\n", cause_label(c.cause), c.count,
                       c.pct_of_deaths, c.pct_of_cohort);
  return out;
}

std::string baseline_csv(const BaselineTable& t) {
  std::string out = "variable,level,population,population_pct,deaths,death_pct\n";
  for (const auto& s : t.strata)
    out += fmt::format("{},{},{},{},{},{}\n", token(s.variable), s.level, s.population,
                       detail::format_double(s.population_pct), s.deaths,
                       detail::format_double(s.death_pct));
  out += fmt::format("total,,{},100,{},{}\n", t.n, t.deaths, detail::format_double(t.death_pct));
  return out;
}

ordered_json km_json(const KmSummary& s) {
  ordered_json j;
  j["variable"] = token(s.variable);
  j["strata"] = ordered_json::array();
  for (const auto& st : s.strata) {
    ordered_json c;
    c["level"] = st.level;
    c["n"] = st.n;
    int events = 0;
    for (int e : st.curve.n_event) events += e;
    c["events"] = events;
    const auto median = km_median(st.curve);
    c["median_survival"] = median ? ordered_json(*median) : ordered_json(nullptr);
    ordered_json steps = ordered_json::array();
    for (std::size_t i = 0; i < st.curve.times.size(); ++i) {
      steps.push_back({{"time", st.curve.times[i]},
                       {"n_risk", st.curve.n_risk[i]},
                       {"n_event", st.curve.n_event[i]},
                       {"n_censor", st.curve.n_censor[i]},
                       {"survival", st.curve.survival[i]},
                       {"var", st.curve.greenwood_var[i]},
                       {"ci_lower", number(st.curve.ci_lower[i])},
                       {"ci_upper", number(st.curve.ci_upper[i])}});
    }
    c["steps"] = std::move(steps);
    j["strata"].push_back(std::move(c));
  }
  if (s.log_rank) {
    const auto& lr = *s.log_rank;
    j["log_rank"] = {{"chi_square", lr.chi_square},
                     {"df", lr.degrees_of_freedom},
                     {"p", lr.p_value},
                     {"observed", lr.observed},
                     {"expected", lr.expected}};
  } else {
    j["log_rank"] = nullptr;
  }
  if (!s.note.empty()) j["note"] = s.note;
  return j;
}

std::string km_markdown(const KmSummary& s) {
  std::string out = fmt::format("| {} | N | Events | Median survival (episode) |\n",
                                variable_title(s.variable));
  out += "|:---|---:|---:|---:|\n";
  for (const auto& st : s.strata) {
    int events = 0;
    for (int e : st.curve.n_event) events += e;
    const auto median = km_median(st.curve);
    out += fmt::format("| {} | {} | {} | {} |\n", level_label(s.variable, st.level),
                       st.n, events,
                       median ? fmt::format("{:g}", *median) : std::string("not reached"));
  }
  if (s.log_rank) {
    out += fmt::format("\nLog-rank test: chi-square = {:.2f}, df = {}, p = {}\n",
                       s.log_rank->chi_square, s.log_rank->degrees_of_freedom,
                       format_p_value(s.log_rank->p_value));
  }
  if (!s.note.empty()) out += "\n" + s.note + "\n";
  return out;
}

std::string km_csv(const KmSummary& s) {
  std::string out = "level,observed,expected\n";
  for (std::size_t g = 0; g < s.strata.size(); ++g) {
    const double observed = s.log_rank ? s.log_rank->observed[g] : std::nan("");
    const double expected = s.log_rank ? s.log_rank->expected[g] : std::nan("");
    out += fmt::format("{},{},{}\n", s.strata[g].level, detail::format_double(observed),
                       detail::format_double(expected));
  }
  if (s.log_rank) {
    out += fmt::format("chi_square,{}\ndf,{}\np,{}\n", detail::format_double(s.log_rank->chi_square),
                       s.log_rank->degrees_of_freedom, detail::format_double(s.log_rank->p_value));
  }
  return out;
}

}  // namespace

std::string render_baseline_table(const BaselineTable& table, Format format) {
  switch (format) {
    case Format::Markdown: return baseline_markdown(table);
    case Format::Csv: return baseline_csv(table);
    case Format::Json: return baseline_json(table).dump(2) + "\n";
  }
  throw Error("unknown format");
}

std::string render_km_curve_csv(const KmCurve& c) {
  std::string out = "time,n_risk,n_event,n_censor,survival,var,ci_lower,ci_upper\n";
  for (std::size_t i = 0; i < c.times.size(); ++i) {
    out += fmt::format("{},{},{},{},{},{},{},{}\n", detail::format_double(c.times[i]), c.n_risk[i],
                       c.n_event[i], c.n_censor[i], detail::format_double(c.survival[i]),
                       detail::format_double(c.greenwood_var[i]), detail::format_double(c.ci_lower[i]),
                       detail::format_double(c.ci_upper[i]));
  }
  return out;
}

std::optional<double> km_median(const KmCurve& curve) {
  for (std::size_t i = 0; i < curve.times.size(); ++i)
    if (curve.survival[i] <= 0.5) return curve.times[i];
  return std::nullopt;
}

std::string render_km_summary(const KmSummary& summary, Format format) {
  switch (format) {
    case Format::Markdown: return km_markdown(summary);
    case Format::Csv: return km_csv(summary);
    case Format::Json: return km_json(summary).dump(2) + "\n";
  }
  throw Error("unknown format");
}

std::string render_report(const ReportSections& s, Format format) {
  if (!s.baseline && !s.follow_up && s.models.empty() && !s.km)
    throw Error("report has no tables to render");

  if (format == Format::Json) {
    ordered_json j;
    if (s.baseline) j["baseline"] = baseline_json(*s.baseline);
    if (s.follow_up) j["follow_up"] = {{"median", s.follow_up->median}};
    for (const auto& [title, table] : s.models) j["models"].push_back({{"title", title}, {"table", model_table_json(table)}});
    if (s.km) j["km"] = km_json(*s.km);
    if (!s.notes.empty()) j["notes"] = s.notes;
    return j.dump(2) + "\n";
  }

  std::string out;
  auto section = [&](const std::string& title, const std::string& body) {
    if (!out.empty()) out += "\n";
    out += format == Format::Markdown ? "## " + title + "\n\n" : "# " + title + "\n";
    out += body;
  };
  if (format == Format::Markdown) out += "# Cohort survival report\n";
  if (s.baseline) section("Baseline characteristics", render_baseline_table(*s.baseline, format));
  if (s.follow_up) {
    section("Follow-up", format == Format::Markdown
                             ? fmt::format("Median follow-up: {:g} episodes\n", s.follow_up->median)
                             : fmt::format("median,{}\n", detail::format_double(s.follow_up->median)));
  }
  for (const auto& [title, table] : s.models) section(title, render_model_table(table, format));
  if (s.km) section("Kaplan-Meier by " + std::string(token(s.km->variable)), render_km_summary(*s.km, format));
  if (!s.notes.empty()) {
    std::string body;
    for (const auto& note : s.notes) body += (format == Format::Markdown ? "- " : "") + note + "\n";
    section("Notes", body);
  }
  return out;
}

}  // namespace cohortsurv
