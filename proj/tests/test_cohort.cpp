#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "cohortsurv/cohort.hpp"
#include "cohortsurv/error.hpp"
#include "cohortsurv/synth.hpp"

using namespace cohortsurv;

namespace {

const std::string kHeader =
    "id,name,age_years,sex,allegiance,occupation,region,entry_episode,exit_episode,event,cause\n";

Subject make_subject(std::string id, double age, Sex sex, Allegiance a, Occupation o, Region r) {
  Subject s;
  s.id = std::move(id);
  s.name = "Test " + s.id;
  s.age_years = age;
  s.sex = sex;
  s.allegiance = a;
  s.occupation = o;
  s.region = r;
  s.entry_episode = 1;
  s.exit_episode = 67;
  return s;
}

std::string data_error(const std::string& csv) {
  try {
    parse_cohort(csv);
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(ParseCohort, MinimalRow) {
  const auto cohort = parse_cohort(kHeader + "a1,Arya,11,female,stark,housemember,north,1,67,0,\n");
  ASSERT_EQ(cohort.size(), 1u);
  const auto& s = cohort.subjects().front();
  EXPECT_EQ(s.allegiance, Allegiance::Stark);
  EXPECT_EQ(s.occupation, Occupation::HouseMember);
  EXPECT_FALSE(s.event);
  EXPECT_FALSE(s.cause.has_value());
  EXPECT_FALSE(s.screen_minutes.has_value());
  EXPECT_FALSE(s.killed_by_white_walker);
}

TEST(ParseCohort, UnknownAllegianceNamesTheRow) {
  const auto msg = data_error(kHeader + "a1,A,20,male,Stark,Advisor,North,1,5,0,\n" +
                              "a2,Drogo,30,male,Dothraki,Other,Essos,3,12,1,invasive_injury\n");
  EXPECT_NE(msg.find("row 3"), std::string::npos) << msg;
  EXPECT_NE(msg.find("Dothraki"), std::string::npos) << msg;
}

TEST(ParseCohort, ErrorPaths) {
  EXPECT_NE(data_error("id,name\na,b\n").find("missing required column"), std::string::npos);
  EXPECT_NE(data_error(kHeader + "a,A,old,male,Stark,Advisor,North,1,5,0,\n").find("age_years"),
            std::string::npos);
  EXPECT_NE(data_error(kHeader + "a,A,20,male,Stark,Advisor,North,1,5,0,\n" +
                       "a,B,20,male,Stark,Advisor,North,1,5,0,\n")
                .find("duplicate id"),
            std::string::npos);
  EXPECT_NE(data_error(kHeader + "a,A,20,male,Stark,Advisor,North,9,5,0,\n").find("row 2"),
            std::string::npos);
  EXPECT_NE(data_error(kHeader + "a,A,20,male,Stark,Advisor,North,1,68,0,\n").find("horizon"),
            std::string::npos);
  EXPECT_NE(data_error(kHeader + "a,A,,male,Stark,Advisor,North,1,5,0,\n").find("age_years"),
            std::string::npos);
  EXPECT_NE(data_error(kHeader + "a,A,20,male,Stark,Advisor,North,1,5,0,poison\n").find("cause"),
            std::string::npos);
  EXPECT_NE(data_error(kHeader + "a,A,20,male,Stark,Advisor,North,1,5,2,\n").find("event"),
            std::string::npos);
  EXPECT_NE(data_error(kHeader + "a,A,20,male,Stark,Advisor,North,1,5,0\n").find("fields"),
            std::string::npos);
}

TEST(ParseCohort, OptionalColumnsQuotingAndCase) {
  const std::string csv =
      "id,name,age_years,sex,allegiance,occupation,region,entry_episode,exit_episode,event,cause,"
      "screen_minutes,killed_by_white_walker\r\n"
      "n1,\"Stark, Ned\",45,MALE,STARK,HouseMember,North,1,9,1,Invasive_Injury,74.5,0\r\n"
      "w1,\"Wildling \"\"Spear\"\"\",25,female,Other,KnightSoldier,North,20,30,1,,12,true\r\n";
  const auto cohort = parse_cohort(csv);
  ASSERT_EQ(cohort.size(), 2u);
  EXPECT_EQ(cohort.subjects()[0].name, "Stark, Ned");
  EXPECT_EQ(cohort.subjects()[0].cause, Cause::InvasiveInjury);
  EXPECT_EQ(cohort.subjects()[0].screen_minutes, 74.5);
  EXPECT_EQ(cohort.subjects()[1].name, "Wildling \"Spear\"");
  EXPECT_TRUE(cohort.subjects()[1].killed_by_white_walker);
  EXPECT_FALSE(cohort.subjects()[1].cause.has_value());
}

TEST(ParseCohort, BundledCalibratedCohortHas132Subjects) {
  const auto cohort = read_cohort_file(COHORTSURV_DATA_DIR "/calibrated_cohort.csv");
  EXPECT_EQ(cohort.size(), 132u);
}

TEST(ParseCohort, SerializeRoundTripIsIdentity) {
  for (std::uint64_t seed : {1u, 2u, 99u}) {
    auto cohort = generate_calibrated({}, seed).cohort;
    // Add the fields the generator never sets.
    auto subjects = cohort.subjects();
    subjects[0].killed_by_white_walker = true;
    subjects[1].supernatural_non_aging = true;
    subjects[2].screen_minutes.reset();
    subjects[3].name = "Comma, \"quoted\" name";
    subjects[4].age_years = 35.123456789012345;
    const Cohort modified(subjects, cohort.horizon());
    EXPECT_EQ(parse_cohort(serialize_cohort(modified)), modified);
  }
}

TEST(ApplyExclusions, WhiteWalkerVictimIsExcluded) {
  auto s = make_subject("ww", 30, Sex::Male, Allegiance::Stark, Occupation::KnightSoldier, Region::North);
  s.killed_by_white_walker = true;
  s.event = true;
  s.exit_episode = 10;
  const auto result = apply_exclusions(Cohort({s}), 5.0);
  EXPECT_TRUE(result.cohort.empty());
  ASSERT_EQ(result.removed.size(), 1u);
  EXPECT_EQ(token(result.removed[0].rule), "white_walker");
}

TEST(ApplyExclusions, ScreenTimeThresholdIsStrict) {
  auto below = make_subject("b", 30, Sex::Male, Allegiance::Stark, Occupation::Advisor, Region::North);
  below.screen_minutes = 4.9;
  auto at = make_subject("a", 30, Sex::Male, Allegiance::Stark, Occupation::Advisor, Region::North);
  at.screen_minutes = 5.0;
  auto supernatural = make_subject("s", 300, Sex::Female, Allegiance::Other, Occupation::Other, Region::Essos);
  supernatural.supernatural_non_aging = true;
  const auto result = apply_exclusions(Cohort({below, at, supernatural}), 5.0);
  ASSERT_EQ(result.cohort.size(), 1u);
  EXPECT_EQ(result.cohort.subjects()[0].id, "a");
  ASSERT_EQ(result.removed.size(), 2u);
  EXPECT_EQ(result.removed[0].rule, ExclusionRule::ScreenTime);
  EXPECT_EQ(result.removed[1].rule, ExclusionRule::Supernatural);
}

TEST(ApplyExclusions, NoFlagsNoScreenTimeIsIdentity) {
  const auto cohort = parse_cohort(kHeader + "a,A,20,male,Stark,Advisor,North,1,5,0,\n" +
                                   "b,B,40,female,Tyrell,Other,South,2,7,1,poison\n");
  const auto result = apply_exclusions(cohort, 5.0);
  EXPECT_EQ(result.cohort, cohort);
  EXPECT_TRUE(result.removed.empty());
}

TEST(ApplyExclusions, Idempotent) {
  auto subjects = generate_calibrated({}, 5).cohort.subjects();
  subjects[0].screen_minutes = 1.0;
  subjects[7].killed_by_white_walker = true;
  subjects[9].supernatural_non_aging = true;
  const Cohort cohort(subjects);
  const auto once = apply_exclusions(cohort, 5.0);
  const auto twice = apply_exclusions(once.cohort, 5.0);
  EXPECT_EQ(once.removed.size(), 3u);
  EXPECT_EQ(twice.cohort, once.cohort);
  EXPECT_TRUE(twice.removed.empty());
}

TEST(EncodeDesign, AllReferenceLevels) {
  const auto d = encode_design(Cohort({make_subject("x", 35, Sex::Male, Allegiance::Stark,
                                                    Occupation::HouseMember, Region::North)}));
  ASSERT_EQ(d.values.cols(), kDesignColumns);
  std::vector<double> expected(14, 0.0);
  expected[0] = 3.5;
  expected[1] = 1.0;
  const auto row = d.values.row(0);
  EXPECT_EQ(std::vector<double>(row.begin(), row.end()), expected);
}

TEST(EncodeDesign, DirectDummyCoding) {
  const auto d = encode_design(Cohort({make_subject("x", 20, Sex::Female, Allegiance::Martell,
                                                    Occupation::Advisor, Region::Essos)}));
  const std::vector<std::string> names{"age_dec",   "male",          "Baratheon",       "Greyjoy",
                                       "Lannister", "Martell",       "Targaryen",       "Tyrell",
                                       "OtherAllegiance", "Advisor", "KnightSoldier", "OtherOccupation",
                                       "South",     "Essos"};
  EXPECT_EQ(d.column_names, names);
  std::vector<double> expected(14, 0.0);
  expected[0] = 2.0;
  expected[5] = 1.0;
  expected[9] = 1.0;
  expected[13] = 1.0;
  const auto row = d.values.row(0);
  EXPECT_EQ(std::vector<double>(row.begin(), row.end()), expected);
}

TEST(EncodeDesign, CalibratedCohortShapeAndDummyGroups) {
  const auto cohort = generate_calibrated().cohort;
  const auto d = encode_design(cohort);
  EXPECT_EQ(d.values.rows(), 132u);
  EXPECT_EQ(d.values.cols(), 14u);
  for (std::size_t i = 0; i < d.values.rows(); ++i) {
    const auto r = d.values.row(i);
    EXPECT_TRUE(std::isfinite(r[0]));
    for (std::size_t j = 1; j < 14; ++j) EXPECT_TRUE(r[j] == 0.0 || r[j] == 1.0);
    const double alleg = std::accumulate(r.begin() + 2, r.begin() + 9, 0.0);
    const double occ = std::accumulate(r.begin() + 9, r.begin() + 12, 0.0);
    const double reg = std::accumulate(r.begin() + 12, r.end(), 0.0);
    EXPECT_LE(alleg, 1.0);
    EXPECT_LE(occ, 1.0);
    EXPECT_LE(reg, 1.0);
  }
}

TEST(EncodeDesign, PermutingSubjectsPermutesRows) {
  auto subjects = generate_calibrated({}, 3).cohort.subjects();
  const auto original = encode_design(Cohort(subjects));
  std::mt19937_64 gen(1);
  std::shuffle(subjects.begin(), subjects.end(), gen);
  const auto permuted = encode_design(Cohort(subjects));
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    const auto k = static_cast<std::size_t>(
        std::find(original.row_ids.begin(), original.row_ids.end(), permuted.row_ids[i]) -
        original.row_ids.begin());
    const auto a = permuted.values.row(i);
    const auto b = original.values.row(k);
    EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin()));
  }
}

TEST(EncodeDesign, ChangingReferenceKeepsFourteenColumns) {
  CovariateSpec spec;
  spec.set_reference(Variable::Allegiance, "lannister");
  spec.set_reference(Variable::Sex, "male");
  spec.set_reference(Variable::Region, "Essos");
  const auto names = design_column_names(spec);
  EXPECT_EQ(names.size(), 14u);
  EXPECT_EQ(names[1], "female");
  EXPECT_NE(std::find(names.begin(), names.end(), "Stark"), names.end());
  EXPECT_EQ(std::find(names.begin(), names.end(), "Lannister"), names.end());
  EXPECT_NE(std::find(names.begin(), names.end(), "North"), names.end());
  EXPECT_THROW(spec.set_reference(Variable::Region, "Dorne"), DataError);
}

TEST(EncodeDesign, EmptyCohortIsRejected) {
  EXPECT_THROW(encode_design(Cohort({})), DataError);
  EXPECT_THROW(baseline_table(Cohort({})), DataError);
  EXPECT_THROW(follow_up_summary(Cohort({})), DataError);
}

TEST(BaselineTable, CalibratedCohortRows) {
  const auto t = baseline_table(read_cohort_file(COHORTSURV_DATA_DIR "/calibrated_cohort.csv"));
  auto find = [&](Variable v, const std::string& level) {
    return *std::find_if(t.strata.begin(), t.strata.end(),
                         [&](const Stratum& s) { return s.variable == v && s.level == level; });
  };
  const auto stark = find(Variable::Allegiance, "Stark");
  EXPECT_EQ(stark.population, 26);
  EXPECT_DOUBLE_EQ(stark.population_pct, 19.7);
  EXPECT_EQ(stark.deaths, 13);
  EXPECT_DOUBLE_EQ(stark.death_pct, 50.0);
  EXPECT_EQ(t.deaths, 89);
  EXPECT_DOUBLE_EQ(t.death_pct, 67.4);

  for (Variable v : {Variable::Sex, Variable::Allegiance, Variable::Occupation, Variable::Region}) {
    int pop = 0;
    for (const auto& s : t.strata)
      if (s.variable == v) {
        pop += s.population;
        EXPECT_LE(s.deaths, s.population);
      }
    EXPECT_EQ(pop, t.n);
  }
  // Invasive injury against both denominators: 59 of 89 deaths, 59 of 132.
  EXPECT_EQ(t.causes[0].count, 59);
  EXPECT_DOUBLE_EQ(t.causes[0].pct_of_cohort, 44.7);
  EXPECT_DOUBLE_EQ(t.causes[0].pct_of_deaths, 66.3);
}

TEST(BaselineTable, SingleLivingSubject) {
  const auto t = baseline_table(Cohort({make_subject("x", 35, Sex::Male, Allegiance::Greyjoy,
                                                     Occupation::Other, Region::South)}));
  const auto it = std::find_if(t.strata.begin(), t.strata.end(),
                               [](const Stratum& s) { return s.level == "Greyjoy"; });
  EXPECT_EQ(it->population, 1);
  EXPECT_DOUBLE_EQ(it->population_pct, 100.0);
  EXPECT_EQ(it->deaths, 0);
  EXPECT_DOUBLE_EQ(it->death_pct, 0.0);
  EXPECT_EQ(t.deaths, 0);
}

TEST(FollowUp, InclusiveDurationsAndMedian) {
  auto s = make_subject("a", 30, Sex::Male, Allegiance::Stark, Occupation::Advisor, Region::North);
  s.entry_episode = 5;
  s.exit_episode = 5;
  EXPECT_EQ(follow_up_summary(Cohort({s})).durations, std::vector<int>{1});

  std::vector<Subject> four;
  for (int d : {10, 20, 30, 40}) {
    auto t = make_subject("s" + std::to_string(d), 30, Sex::Male, Allegiance::Stark,
                          Occupation::Advisor, Region::North);
    t.entry_episode = 1;
    t.exit_episode = d;
    four.push_back(t);
  }
  EXPECT_DOUBLE_EQ(follow_up_summary(Cohort(four)).median, 25.0);
}

TEST(FollowUp, CalibratedCohortMedianNearTarget) {
  const auto f = follow_up_summary(read_cohort_file(COHORTSURV_DATA_DIR "/calibrated_cohort.csv"));
  EXPECT_NEAR(f.median, 32.0, 3.0);
}

TEST(SurvivalData, EntryModes) {
  auto s = make_subject("a", 30, Sex::Male, Allegiance::Stark, Occupation::Advisor, Region::North);
  s.entry_episode = 12;
  s.exit_episode = 20;
  s.event = true;
  const Cohort c({s});
  EXPECT_EQ(to_survival_data(c).entry[0], 12.0);
  EXPECT_EQ(to_survival_data(c, EntryMode::Origin).entry[0], 1.0);
  EXPECT_EQ(event_outcomes(c), std::vector<std::uint8_t>{1});
}
