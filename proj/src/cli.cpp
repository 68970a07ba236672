#include "cohortsurv/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <fmt/format.h>
#include <fstream>
#include <iostream>
#include <map>

#include "cohortsurv/error.hpp"
#include "cohortsurv/logit.hpp"
#include "cohortsurv/report.hpp"
#include "cohortsurv/survfit.hpp"
#include "text_util.hpp"

namespace cohortsurv {

namespace {

namespace fs = std::filesystem;

class UsageError : public Error {
 public:
  using Error::Error;
};

// Writes through a sibling temporary file so a failed run never leaves a
// partial artifact at `path`.
void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write '" + path.string() + "'");
    f << content;
    if (!f.flush()) throw Error("cannot write '" + path.string() + "'");
  }
  fs::rename(tmp, path);
}

void emit(const RunConfig& cfg, const std::string& content, std::ostream& out) {
  if (cfg.out.empty())
    out << content;
  else
    write_file(cfg.out, content);
}

Cohort load(const RunConfig& cfg, std::ostream& err) {
  if (cfg.data.empty()) throw UsageError("--data is required for '" + cfg.subcommand + "'");
  if (!fs::exists(cfg.data)) throw UsageError("--data: file '" + cfg.data + "' does not exist");
  auto result = apply_exclusions(read_cohort_file(cfg.data, cfg.horizon), cfg.min_screen_minutes);
  for (const auto& e : result.removed)
    err << "excluded " << e.id << " (" << token(e.rule) << ")\n";
  if (result.cohort.empty()) throw DataError("no subjects remain after exclusions");
  return std::move(result.cohort);
}

ModelTable cox_table(const Cohort& cohort, const RunConfig& cfg, std::ostream& err) {
  const auto design = encode_design(cohort);
  CoxOptions options;
  options.ties = cfg.ties;
  const auto fit = cox_fit(design, to_survival_data(cohort, cfg.entry_mode), options);
  for (const auto& w : fit.warnings) err << "warning: " << w << "\n";
  if (!fit.converged) throw ModelError(ModelErrorKind::NotConverged, "Cox fit did not converge");
  return wald_table(fit, cfg.conf);
}

ModelTable logit_table(const Cohort& cohort, const RunConfig& cfg) {
  const auto design = encode_design(cohort);
  const auto fit = logit_fit(design, event_outcomes(cohort));
  if (!fit.converged)
    throw ModelError(ModelErrorKind::NotConverged, "logistic fit did not converge");
  return odds_table(fit, cfg.conf);
}

KmSummary km_summary(const Cohort& cohort, const RunConfig& cfg) {
  const auto variable = parse_variable(cfg.by);
  if (!variable) throw UsageError("--by: unknown variable '" + cfg.by + "'");

  std::vector<std::string> levels = level_tokens(*variable);
  if (!cfg.only.empty()) {
    std::vector<std::string> chosen;
    for (const auto& raw : cfg.only) {
      auto it = std::find_if(levels.begin(), levels.end(),
                             [&](const std::string& l) { return detail::iequals(l, raw); });
      if (it == levels.end())
        throw UsageError("--only: '" + raw + "' is not a level of " + cfg.by);
      chosen.push_back(*it);
    }
    levels = chosen;
  }

  KmSummary summary;
  summary.variable = *variable;
  std::vector<SurvivalData> groups;
  for (const auto& level : levels) {
    std::vector<Subject> members;
    for (const auto& s : cohort.subjects())
      if (s.level(*variable) == level) members.push_back(s);
    if (members.empty()) continue;
    const int n = static_cast<int>(members.size());
    const Cohort stratum(std::move(members), cohort.horizon());
    groups.push_back(to_survival_data(stratum, cfg.entry_mode));
    summary.strata.push_back({level, n, km_fit(groups.back(), cfg.conf)});
  }
  if (summary.strata.empty()) throw DataError("no subjects in the selected strata");

  try {
    summary.log_rank = log_rank(groups);
  } catch (const DataError& e) {
    summary.note = std::string("log-rank test not computed: ") + e.what();
  }
  return summary;
}

std::string km_file_name(const RunConfig& cfg, const std::string& level) {
  return fmt::format("km_{}_{}.csv", detail::to_lower(cfg.by), level);
}

int dispatch(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto& cmd = cfg.subcommand;

  if (cmd == "synth") {
    CalibrationTargets targets;
    targets.horizon = cfg.horizon;
    const auto generated = generate_calibrated(targets, cfg.seed);
    for (const auto& r : generated.residuals)
      if (r.achieved != r.target)
        err << fmt::format("calibration gap: {}/{} deaths {} (target {})\n", token(r.variable),
                           r.level, r.achieved, r.target);
    emit(cfg, serialize_cohort(generated.cohort), out);
    return kExitOk;
  }

  const Cohort cohort = load(cfg, err);

  if (cmd == "table1") {
    emit(cfg, render_baseline_table(baseline_table(cohort), cfg.format), out);
  } else if (cmd == "cox") {
    emit(cfg, render_model_table(cox_table(cohort, cfg, err), cfg.format), out);
  } else if (cmd == "logit") {
    emit(cfg, render_model_table(logit_table(cohort, cfg), cfg.format), out);
  } else if (cmd == "km") {
    const auto summary = km_summary(cohort, cfg);
    std::vector<std::pair<fs::path, std::string>> files;
    const fs::path dir = cfg.out.empty() ? fs::path(".") : fs::path(cfg.out);
    for (const auto& st : summary.strata)
      files.emplace_back(dir / km_file_name(cfg, st.level), render_km_curve_csv(st.curve));
    for (const auto& [path, content] : files) {
      write_file(path, content);
      err << "wrote " << path.string() << "\n";
    }
    out << render_km_summary(summary, cfg.format);
  } else if (cmd == "report") {
    ReportSections sections;
    sections.baseline = baseline_table(cohort);
    sections.follow_up = follow_up_summary(cohort);
    sections.models.emplace_back("Multivariate Cox model", cox_table(cohort, cfg, err));
    try {
      sections.models.emplace_back("Multivariate logistic regression model",
                                   logit_table(cohort, cfg));
    } catch (const ModelError& e) {
      sections.notes.push_back(std::string("Logistic model not estimable: ") + e.what());
    }
    sections.km = km_summary(cohort, cfg);
    emit(cfg, render_report(sections, cfg.format), out);
  } else {
    throw UsageError("unknown subcommand '" + cmd + "'");
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Survival analysis of character cohorts: baseline tables, Kaplan-Meier curves, "
               "Cox and logistic regression.",
               "cohortsurv"};
  app.require_subcommand(1, 1);
  app.set_config("--config", "", "Plain key=value file supplying option defaults");

  RunConfig cfg;
  std::string format = "markdown";
  std::string ties = "efron";
  std::string entry_mode = "staggered";
  std::string only;

  app.add_option("--data", cfg.data, "Cohort CSV file");
  app.add_option("--out", cfg.out, "Output file (directory for km curves)");
  app.add_option("--format", format, "Output format")
      ->check(CLI::IsMember({"markdown", "csv", "json"}, CLI::ignore_case));
  app.add_option("--ties", ties, "Tie correction for the Cox model")
      ->check(CLI::IsMember({"efron", "breslow"}, CLI::ignore_case));
  app.add_option("--entry-mode", entry_mode, "Risk-set entry: staggered first appearance or origin")
      ->check(CLI::IsMember({"staggered", "origin"}, CLI::ignore_case));
  app.add_option("--conf", cfg.conf, "Confidence level in (0, 1)");
  app.add_option("--seed", cfg.seed, "Seed for synth");
  app.add_option("--horizon", cfg.horizon, "Last episode of follow-up")->check(CLI::PositiveNumber);
  app.add_option("--min-screen-minutes", cfg.min_screen_minutes,
                 "Exclude subjects with less recorded screen time")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--by", cfg.by, "Stratification variable: sex, allegiance, occupation, region");
  app.add_option("--only", only, "Comma-separated levels of --by to keep");

  const std::map<std::string, std::string> commands{
      {"table1", "Baseline characteristics table"},
      {"km", "Kaplan-Meier curves per stratum and a log-rank test"},
      {"cox", "Multivariate Cox proportional hazards model"},
      {"logit", "Multivariate logistic regression for death by end of follow-up"},
      {"synth", "Write the calibrated synthetic cohort"},
      {"report", "All analyses in one document"},
  };
  for (const auto& [name, description] : commands) app.add_subcommand(name, description)->fallthrough();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (args.empty()) throw CLI::CallForHelp();
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return args.empty() ? kExitUsage : kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  cfg.subcommand = app.get_subcommands().front()->get_name();
  cfg.ties = detail::to_lower(ties) == "breslow" ? TiesMethod::Breslow : TiesMethod::Efron;
  cfg.entry_mode = detail::to_lower(entry_mode) == "origin" ? EntryMode::Origin : EntryMode::Staggered;
  if (!only.empty()) cfg.only = detail::split(only, ',');

  try {
    cfg.format = parse_format(format);
    if (!(cfg.conf > 0.0 && cfg.conf < 1.0))
      throw UsageError(fmt::format("--conf: {} is not in (0, 1)", cfg.conf));
    return dispatch(cfg, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ModelError& e) {
    err << "model error: " << e.what() << "\n";
    return kExitDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitDataError;
  }
}

}  // namespace cohortsurv
