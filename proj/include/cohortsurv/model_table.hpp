#pragma once

#include <string>
#include <vector>

namespace cohortsurv {

enum class RatioKind { Hazard, Odds };

enum class Format { Markdown, Csv, Json };

struct ModelRow {
  std::string term;
  double coefficient = 0.0;
  double std_error = 0.0;
  double ratio = 1.0;
  double ci_lower = 1.0;
  double ci_upper = 1.0;
  double z = 0.0;
  double p_value = 1.0;
};

struct ModelTable {
  RatioKind kind = RatioKind::Hazard;
  double level = 0.95;
  std::vector<ModelRow> rows;
};

// Wald summary of one coefficient: ratio = exp(coef), CI = exp(coef -/+ z* se),
// z = coef / se, two-sided normal p-value.
ModelRow wald_row(std::string term, double coefficient, double std_error, double level = 0.95);

// Markdown rounds to two decimals in the layout of a published regression
// table; CSV and JSON carry every number at round-trip precision with columns
// term,coef,hr|or,ci_lower,ci_upper,z,p.
std::string render_model_table(const ModelTable& table, Format format);

// Markdown p-value: two decimals from 0.01 up, two significant figures below,
// "<0.0001" under that.
std::string format_p_value(double p);

Format parse_format(const std::string& name);

}  // namespace cohortsurv
