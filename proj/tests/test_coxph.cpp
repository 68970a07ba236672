#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cohortsurv/cohort.hpp"
#include "cohortsurv/coxph.hpp"
#include "cohortsurv/error.hpp"
#include "cohortsurv/statfn.hpp"
#include "cohortsurv/synth.hpp"
#include "oracles.hpp"

using namespace cohortsurv;

namespace {

SurvivalData common_entry(std::vector<double> exit, std::vector<std::uint8_t> event) {
  std::vector<double> entry(exit.size(), 1.0);
  return SurvivalData{std::move(entry), std::move(exit), std::move(event)};
}

Matrix column(std::vector<double> v) {
  Matrix m(v.size(), 1);
  for (std::size_t i = 0; i < v.size(); ++i) m(i, 0) = v[i];
  return m;
}

// x=1 dies at 1, x=0 at 2, x=1 at 3, x=0 at 4.
const Matrix kAltX = column({1, 0, 1, 0});
const SurvivalData kAltData = common_entry({1, 2, 3, 4}, {1, 1, 1, 1});

ModelErrorKind fit_error(const Matrix& x, const SurvivalData& d) {
  try {
    cox_fit(x, std::vector<std::string>(x.cols(), "x"), d);
  } catch (const ModelError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error";
  return ModelErrorKind::EmptyInput;
}

}  // namespace

TEST(PartialLoglik, ZeroBetaReducesToRiskSetSizes) {
  const std::vector<double> beta{0.0};
  const double expected = -(std::log(4.0) + std::log(3.0) + std::log(2.0));
  EXPECT_NEAR(partial_loglik(beta, kAltX, kAltData, TiesMethod::Breslow), expected, 1e-14);
}

TEST(PartialLoglik, EfronEqualsBreslowWithoutTies) {
  std::mt19937_64 gen(2);
  for (int rep = 0; rep < 20; ++rep) {
    const int n = 6;
    Matrix x(n, 2);
    std::vector<double> exits;
    for (int i = 0; i < n; ++i) {
      x(i, 0) = static_cast<double>(gen() % 2);
      x(i, 1) = static_cast<double>(gen() % 100) / 25.0;
      exits.push_back(i + 1.0);
    }
    const auto d = common_entry(exits, std::vector<std::uint8_t>(n, 1));
    const std::vector<double> beta{0.3, -0.7};
    EXPECT_EQ(partial_loglik(beta, x, d, TiesMethod::Efron), partial_loglik(beta, x, d, TiesMethod::Breslow));
  }
}

TEST(PartialLoglik, AlternatingExampleMatchesDirectSum) {
  const std::vector<double> beta{1.0};
  EXPECT_NEAR(partial_loglik(beta, kAltX, kAltData),
              oracle::direct_partial_loglik(beta, kAltX, kAltData, true), 1e-12);
}

TEST(PartialLoglik, MatchesDirectSumOnRandomTiedTruncatedData) {
  std::mt19937_64 gen(17);
  for (int rep = 0; rep < 50; ++rep) {
    const auto r = oracle::random_cox_data(gen, 12, 2, 5, true, 0.3);
    if (r.data.event_count() == 0) continue;
    const std::vector<double> beta{static_cast<double>(gen() % 200) / 100.0 - 1.0,
                                   static_cast<double>(gen() % 200) / 100.0 - 1.0};
    for (auto ties : {TiesMethod::Efron, TiesMethod::Breslow}) {
      const double direct = oracle::direct_partial_loglik(beta, r.x, r.data, ties == TiesMethod::Efron);
      EXPECT_NEAR(partial_loglik(beta, r.x, r.data, ties), direct, 1e-12 * (1.0 + std::fabs(direct)));
      EXPECT_NEAR(partial_likelihood_terms(beta, r.x, r.data, ties).value, direct,
                  1e-12 * (1.0 + std::fabs(direct)));
    }
  }
}

TEST(PartialLoglik, DimensionMismatch) {
  const std::vector<double> two{0.0, 0.0};
  EXPECT_THROW(partial_loglik(two, kAltX, kAltData), ModelError);
  EXPECT_THROW(partial_loglik(std::vector<double>{0.0}, column({1, 0}), kAltData), ModelError);
}

TEST(ScoreGradient, ConstantCovariateHasZeroGradient) {
  const auto x = column({2, 2, 2, 2});
  for (double b : {-3.0, 0.0, 0.5, 4.0}) {
    const std::vector<double> beta{b};
    EXPECT_NEAR(score_gradient(beta, x, kAltData)[0], 0.0, 1e-12);
  }
}

TEST(ScoreGradient, MatchesFiniteDifferences) {
  std::mt19937_64 gen(23);
  for (int rep = 0; rep < 30; ++rep) {
    const auto r = oracle::random_cox_data(gen, 10, 2, 6, true, 0.3);
    if (r.data.event_count() == 0) continue;
    const std::vector<double> beta{static_cast<double>(gen() % 200) / 100.0 - 1.0,
                                   static_cast<double>(gen() % 200) / 100.0 - 1.0};
    for (auto ties : {TiesMethod::Efron, TiesMethod::Breslow}) {
      const auto analytic = score_gradient(beta, r.x, r.data, ties);
      const auto numeric = finite_diff_grad(
          [&](std::span<const double> b) { return partial_loglik(b, r.x, r.data, ties); }, beta);
      for (std::size_t j = 0; j < 2; ++j)
        EXPECT_NEAR(analytic[j], numeric[j], 1e-6 * std::max(1.0, std::fabs(analytic[j])));
    }
  }
}

TEST(ScoreGradient, InformationMatchesFiniteDifferenceOfGradient) {
  std::mt19937_64 gen(29);
  const auto r = oracle::random_cox_data(gen, 12, 2, 5, true, 0.2);
  const std::vector<double> beta{0.4, -0.3};
  const auto terms = partial_likelihood_terms(beta, r.x, r.data, TiesMethod::Efron);
  for (std::size_t k = 0; k < 2; ++k) {
    const auto col = finite_diff_grad(
        [&](std::span<const double> b) { return score_gradient(b, r.x, r.data)[k]; }, beta);
    for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(-col[j], terms.information(k, j), 1e-6);
  }
}

TEST(CoxFit, AlternatingExamplePinnedByGrid) {
  const auto fit = cox_fit(kAltX, {"x"}, kAltData);
  ASSERT_TRUE(fit.converged);
  EXPECT_NEAR(fit.coefficients[0], 0.9406136421, 1e-9);

  GridProblem grid;
  grid.x = kAltX;
  grid.survival = kAltData;
  EXPECT_NEAR(oracle_grid_fit(grid, -5.0, 5.0, 1e-4)[0], fit.coefficients[0], 1e-3);
  EXPECT_LE(max_abs(score_gradient(fit.coefficients, kAltX, kAltData)), 1e-6);
}

TEST(CoxFit, MonotoneLikelihoodIsNamedDivergence) {
  // The x=1 subject dies first at every event time it is at risk.
  const auto x = column({1, 1, 0, 0});
  const auto d = common_entry({1, 2, 3, 4}, {1, 1, 1, 0});
  try {
    cox_fit(x, {"Greyjoy"}, d);
    FAIL() << "expected divergence";
  } catch (const ModelError& e) {
    EXPECT_EQ(e.kind(), ModelErrorKind::Divergence);
    EXPECT_EQ(e.column(), "Greyjoy");
    EXPECT_NE(std::string(e.what()).find("Greyjoy"), std::string::npos);
  }
}

TEST(CoxFit, InputErrors) {
  EXPECT_EQ(fit_error(kAltX, common_entry({1, 2, 3, 4}, {0, 0, 0, 0})), ModelErrorKind::NoEvents);
  EXPECT_EQ(fit_error(column({3, 3, 3, 3}), kAltData), ModelErrorKind::ConstantColumn);
  Matrix dup(4, 2);
  for (std::size_t i = 0; i < 4; ++i) dup(i, 0) = dup(i, 1) = kAltX(i, 0);
  EXPECT_EQ(fit_error(dup, kAltData), ModelErrorKind::NonIdentifiable);
  EXPECT_THROW(cox_fit(kAltX, {"a", "b"}, kAltData), ModelError);
}

TEST(CoxFit, WarnsAboutThinColumns) {
  const auto fit = cox_fit(kAltX, {"x"}, kAltData);
  ASSERT_EQ(fit.warnings.size(), 1u);
  EXPECT_NE(fit.warnings[0].find("'x' has only 2 events"), std::string::npos);
}

TEST(CoxFit, TimeTransformInvariance) {
  std::mt19937_64 gen(31);
  int checked = 0;
  for (int rep = 0; rep < 20; ++rep) {
    const auto r = oracle::random_cox_data(gen, 25, 2, 8, true, 0.25);
    CoxFit base;
    try {
      base = cox_fit(r.x, {"a", "b"}, r.data);
    } catch (const ModelError&) {
      continue;
    }
    for (auto transform : {+[](double t) { return 2.0 * t; }, +[](double t) { return std::exp(t) + 7.0; }}) {
      auto d = r.data;
      for (auto& t : d.entry) t = transform(t);
      for (auto& t : d.exit) t = transform(t);
      const auto fit = cox_fit(r.x, {"a", "b"}, d);
      for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(fit.coefficients[j], base.coefficients[j], 1e-10);
    }
    ++checked;
  }
  EXPECT_GE(checked, 10);
}

TEST(CoxFit, CenteringInvariance) {
  std::mt19937_64 gen(37);
  const auto r = oracle::random_cox_data(gen, 40, 2, 10, true, 0.2);
  const auto base = cox_fit(r.x, {"a", "b"}, r.data);
  auto shifted = r.x;
  for (std::size_t i = 0; i < shifted.rows(); ++i) shifted(i, 1) += 3.7;
  const auto fit = cox_fit(shifted, {"a", "b"}, r.data);
  for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(fit.coefficients[j], base.coefficients[j], 1e-8);
}

TEST(CoxFit, ReferenceLevelCoherence) {
  const auto cohort = generate_calibrated().cohort;
  const auto data = to_survival_data(cohort);
  CovariateSpec other;
  other.set_reference(Variable::Allegiance, "Lannister");
  const auto a = cox_fit(encode_design(cohort), data);
  const auto b = cox_fit(encode_design(cohort, other), data);

  auto coef = [](const CoxFit& f, const std::string& name) {
    for (std::size_t j = 0; j < f.column_names.size(); ++j)
      if (f.column_names[j] == name) return f.coefficients[j];
    return 0.0;  // reference level
  };
  for (const auto& l1 : level_tokens(Variable::Allegiance))
    for (const auto& l2 : level_tokens(Variable::Allegiance)) {
      const auto n1 = l1 == "Other" ? std::string("OtherAllegiance") : l1;
      const auto n2 = l2 == "Other" ? std::string("OtherAllegiance") : l2;
      EXPECT_NEAR(coef(a, n1) - coef(a, n2), coef(b, n1) - coef(b, n2), 1e-8) << l1 << " vs " << l2;
    }
  EXPECT_NEAR(a.log_likelihood(), b.log_likelihood(), 1e-9);
}

TEST(CoxFit, FitInvariantsOnCalibratedCohort) {
  const auto cohort = generate_calibrated().cohort;
  for (auto mode : {EntryMode::Staggered, EntryMode::Origin})
    for (auto ties : {TiesMethod::Efron, TiesMethod::Breslow}) {
      CoxOptions opts;
      opts.ties = ties;
      const auto fit = cox_fit(encode_design(cohort), to_survival_data(cohort, mode), opts);
      ASSERT_TRUE(fit.converged);
      EXPECT_EQ(fit.coefficients.size(), 14u);
      for (std::size_t k = 1; k < fit.log_likelihood_trace.size(); ++k)
        EXPECT_GE(fit.log_likelihood_trace[k], fit.log_likelihood_trace[k - 1]);
      for (std::size_t i = 0; i < 14; ++i) {
        EXPECT_GE(fit.covariance(i, i), 0.0);
        for (std::size_t j = 0; j < 14; ++j) EXPECT_NEAR(fit.covariance(i, j), fit.covariance(j, i), 1e-10);
      }
      const auto d = encode_design(cohort);
      EXPECT_LE(max_abs(score_gradient(fit.coefficients, d.values, to_survival_data(cohort, mode), ties)), 1e-6);
    }
}

TEST(CoxFit, MatchesGridSearchOnSmallDatasets) {
  std::mt19937_64 gen(41);
  int checked = 0;
  for (int rep = 0; rep < 60 && checked < 12; ++rep) {
    const int p = 1 + rep % 2;
    const auto r = oracle::random_cox_data(gen, 8, p, 6, true, 0.2);
    std::vector<std::string> names(p, "x");
    CoxFit fit;
    try {
      fit = cox_fit(r.x, names, r.data);
    } catch (const ModelError&) {
      continue;
    }
    GridProblem grid;
    grid.x = r.x;
    grid.survival = r.data;
    const auto g = oracle_grid_fit(grid, -5.0, 5.0, p == 1 ? 1e-4 : 1e-3);
    bool boundary = false;
    for (double b : g) boundary |= std::fabs(std::fabs(b) - 5.0) < 1e-9;
    if (boundary) continue;
    for (int j = 0; j < p; ++j) EXPECT_NEAR(fit.coefficients[j], g[j], 1e-3) << "rep " << rep;
    ++checked;
  }
  EXPECT_GE(checked, 8);
}

TEST(WaldTable, PublishedAgeRow) {
  const auto row = wald_row("age_dec", 0.22, 0.0716);
  EXPECT_NEAR(row.ratio, 1.25, 0.005);
  EXPECT_NEAR(row.ci_lower, 1.08, 0.005);
  EXPECT_NEAR(row.ci_upper, 1.43, 0.005);
  EXPECT_EQ(row.ratio, std::exp(0.22));
}

TEST(WaldTable, PublishedMartellRow) {
  const auto row = wald_row("Martell", 1.70, 0.680);
  EXPECT_NEAR(row.ratio, 5.47, 0.005);
  EXPECT_NEAR(row.ci_lower, 1.44, 0.005);
  EXPECT_NEAR(row.ci_upper, 20.7, 0.1);
}

TEST(WaldTable, ZeroCoefficient) {
  const auto row = wald_row("x", 0.0, 0.8);
  EXPECT_EQ(row.ratio, 1.0);
  EXPECT_EQ(row.z, 0.0);
  EXPECT_EQ(row.p_value, 1.0);
  EXPECT_NEAR(std::log(row.ci_lower), -std::log(row.ci_upper), 1e-14);
}

TEST(WaldTable, RatiosAreExpOfCoefficientsBitForBit) {
  const auto cohort = generate_calibrated().cohort;
  const auto fit = cox_fit(encode_design(cohort), to_survival_data(cohort));
  const auto table = wald_table(fit);
  ASSERT_EQ(table.rows.size(), 14u);
  const double z = normal_critical_value(0.95);
  for (std::size_t j = 0; j < 14; ++j) {
    const auto& r = table.rows[j];
    EXPECT_EQ(r.term, fit.column_names[j]);
    EXPECT_EQ(r.ratio, std::exp(fit.coefficients[j]));
    const double se = std::sqrt(fit.covariance(j, j));
    EXPECT_NEAR(r.ci_lower, std::exp(r.coefficient - z * se), 1e-12 * r.ci_upper);
    EXPECT_NEAR(r.ci_upper, std::exp(r.coefficient + z * se), 1e-12 * r.ci_upper);
    EXPECT_GE(r.p_value, 0.0);
    EXPECT_LE(r.p_value, 1.0);
  }
}

TEST(WaldTable, NonConvergedFitIsRejected) {
  CoxOptions opts;
  opts.max_iterations = 1;
  const auto fit = cox_fit(kAltX, {"x"}, kAltData, opts);
  ASSERT_FALSE(fit.converged);
  try {
    wald_table(fit);
    FAIL();
  } catch (const ModelError& e) {
    EXPECT_EQ(e.kind(), ModelErrorKind::NotConverged);
  }
}
