#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cohortsurv/cohort.hpp"
#include "cohortsurv/model_table.hpp"
#include "cohortsurv/survfit.hpp"

namespace cohortsurv {

// Display label used in rendered tables, e.g. "Member of a House or Royalty".
std::string level_label(Variable variable, std::string_view level);

std::string render_baseline_table(const BaselineTable& table, Format format);

// Columns time,n_risk,n_event,n_censor,survival,var,ci_lower,ci_upper;
// undefined band limits are written as NA.
std::string render_km_curve_csv(const KmCurve& curve);

// First event time with survival <= 0.5, if the curve gets there.
std::optional<double> km_median(const KmCurve& curve);

struct KmStratum {
  std::string level;
  int n = 0;  // subjects in the stratum
  KmCurve curve;
};

struct KmSummary {
  Variable variable = Variable::Allegiance;
  std::vector<KmStratum> strata;
  std::optional<LogRankResult> log_rank;
  std::string note;  // set when the log-rank test could not be computed
};

std::string render_km_summary(const KmSummary& summary, Format format);

struct ReportSections {
  std::optional<BaselineTable> baseline;
  std::optional<FollowUp> follow_up;
  std::vector<std::pair<std::string, ModelTable>> models;  // (title, table)
  std::optional<KmSummary> km;
  std::vector<std::string> notes;
};

// Throws Error when no section is present.
std::string render_report(const ReportSections& sections, Format format);

}  // namespace cohortsurv
