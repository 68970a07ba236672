#include "cohortsurv/model_table.hpp"

#include <cmath>
#include <fmt/format.h>
#include <json.hpp>

#include "cohortsurv/error.hpp"
#include "cohortsurv/statfn.hpp"
#include "json_util.hpp"
#include "text_util.hpp"

namespace cohortsurv {

ModelRow wald_row(std::string term, double coefficient, double std_error, double level) {
  const double crit = normal_critical_value(level);
  ModelRow row;
  row.term = std::move(term);
  row.coefficient = coefficient;
  row.std_error = std_error;
  row.ratio = std::exp(coefficient);
  row.ci_lower = std::exp(coefficient - crit * std_error);
  row.ci_upper = std::exp(coefficient + crit * std_error);
  row.z = coefficient == 0.0 ? 0.0 : coefficient / std_error;
  row.p_value = std::isfinite(row.z) ? 2.0 * std_normal_cdf(-std::abs(row.z)) : 0.0;
  return row;
}

std::string format_p_value(double p) {
  if (std::isnan(p)) return "NA";
  if (p < 0.0001) return "<0.0001";
  if (p >= 0.01) return fmt::format("{:.2f}", p);
  // Two significant figures.
  const int decimals = 1 - static_cast<int>(std::floor(std::log10(p)));
  return fmt::format("{:.{}f}", p, decimals);
}

Format parse_format(const std::string& name) {
  const auto lower = detail::to_lower(name);
  if (lower == "markdown" || lower == "md") return Format::Markdown;
  if (lower == "csv") return Format::Csv;
  if (lower == "json") return Format::Json;
  throw Error("unknown format '" + name + "' (expected markdown, csv or json)");
}

namespace {

std::string ratio_key(RatioKind kind) { return kind == RatioKind::Hazard ? "hr" : "or"; }

// Two decimals without a sign on values that round to zero.
std::string two_decimals(double v) {
  auto s = fmt::format("{:.2f}", v);
  return s == "-0.00" ? "0.00" : s;
}

std::string markdown(const ModelTable& table) {
  const std::string ratio_title = table.kind == RatioKind::Hazard ? "Hazard Ratio" : "Odds Ratio";
  std::string out = fmt::format("| Term | Coefficient | {} ({:g}% CI) | P value |\n", ratio_title,
                                table.level * 100.0);
  out += "|:---|---:|:---:|---:|\n";
  for (const auto& r : table.rows) {
    out += fmt::format("| {} | {} | {:.2f} ({:.2f}-{:.2f}) | {} |\n", r.term,
                       two_decimals(r.coefficient), r.ratio, r.ci_lower, r.ci_upper,
                       format_p_value(r.p_value));
  }
  return out;
}

std::string csv(const ModelTable& table) {
  std::string out = fmt::format("term,coef,{},ci_lower,ci_upper,z,p\n", ratio_key(table.kind));
  for (const auto& r : table.rows) {
    out += detail::csv_escape(r.term);
    for (double v : {r.coefficient, r.ratio, r.ci_lower, r.ci_upper, r.z, r.p_value}) {
      out += ',';
      out += detail::format_double(v);
    }
    out += '\n';
  }
  return out;
}

}  // namespace

nlohmann::ordered_json model_table_json(const ModelTable& table) {
  nlohmann::ordered_json j;
  j["model"] = table.kind == RatioKind::Hazard ? "cox" : "logit";
  j["level"] = table.level;
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : table.rows) {
    nlohmann::ordered_json row;
    row["term"] = r.term;
    row["coef"] = r.coefficient;
    row[ratio_key(table.kind)] = r.ratio;
    row["ci_lower"] = r.ci_lower;
    row["ci_upper"] = r.ci_upper;
    row["z"] = r.z;
    row["p"] = r.p_value;
    j["rows"].push_back(std::move(row));
  }
  return j;
}

std::string render_model_table(const ModelTable& table, Format format) {
  switch (format) {
    case Format::Markdown: return markdown(table);
    case Format::Csv: return csv(table);
    case Format::Json: return model_table_json(table).dump(2) + "\n";
  }
  throw Error("unknown format");
}

}  // namespace cohortsurv
