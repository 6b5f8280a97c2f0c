#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "frailty/cohort.hpp"
#include "frailty/errors.hpp"
#include "frailty/flows.hpp"
#include "frailty/markers.hpp"

using namespace frailty;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("frailty_flows_test_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name, const std::string& content) const {
    const fs::path p = path / name;
    std::ofstream out(p, std::ios::binary);
    out << content;
    return p.string();
  }
  std::string at(const std::string& name) const { return (path / name).string(); }
};

FlowPaths fixture_paths(const TempDir& dir) {
  FlowPaths paths;
  paths.registry = dir.file("registry.csv",
                            "subject_id,sex,birth_date,death_date,area_id\n"
                            "a1,M,1940-07-01,,3\n"
                            "a2,F,1930-01-01,2016-05-20,7\n"
                            "a3,F,1952-06-15,,4\n"
                            "a4,M,1928-03-02,2015-11-30,2\n"
                            "a5,M,1945-02-10,,1\n");
  paths.discharge = dir.file("discharge.csv",
                             "subject_id,date,duration,dx1,dx2,dx3,dx4,dx5,dx6\n"
                             "a1,2014-03-05,7,428,,,,,\n"
                             "a1,2016-02-10,3,820,,,,,\n"
                             "a2,2015-12-31,2,170,,,,,\n"
                             "zz,2015-02-02,1,428,,,,,\n"
                             "a3,2015-05-05,1,428,,,,,\n"
                             "a1,2013-12-31,5,428,,,,,\n"
                             "a9,2015-01-01\n"
                             "a2,not-a-date,1,428,,,,,\n");
  paths.er = dir.file("er.csv",
                      "subject_id,date,priority,dx1,dx2,dx3,dx4,dx5\n"
                      "a5,2016-07-07,red,300,,,,\n"
                      "a1,2016-08-08,green,460,,,,\n"
                      "a2,2015-06-06,red,585,,,,\n");
  paths.psychiatry = dir.file("psychiatry.csv",
                              "subject_id,date,dx1,dx2,dx3\n"
                              "a2,2015-09-09,F01,,\n");
  paths.home_care = dir.file("home_care.csv",
                             "subject_id,date,service_code\n"
                             "a1,2016-04-04,ADI01\n");
  paths.exemption = dir.file("exemption.csv",
                             "subject_id,date,exemption_code,diagnosis\n"
                             "a2,2014-05-05,048,174\n"
                             "a5,2016-03-03,3C1,\n"
                             "a1,2014-08-08,,\n");
  paths.pharma = dir.file("pharma.csv",
                          "subject_id,date,atc\n"
                          "a5,2014-06-06,N05BA01\n"
                          "a2,2016-06-06,N06DA02\n");
  paths.outpatient = dir.file("outpatient.csv",
                              "subject_id,date,service_code\n"
                              "a1,2015-03-03,88.72\n");
  return paths;
}

const Subject& find_subject(const Cohort& cohort, const std::string& id) {
  for (const Subject& s : cohort.subjects) {
    if (s.id == id) return s;
  }
  REQUIRE(false);
  return cohort.subjects.front();
}

}  // namespace

TEST_CASE("flow ingestion applies eligibility, windowing, and row policy") {
  TempDir dir;
  const FlowPaths paths = fixture_paths(dir);
  const CohortSpec spec = CohortSpec::for_outcome_year(2016);

  IngestStats stats;
  const Cohort cohort = load_flows(paths, spec, RowPolicy::SkipAndLog, &stats);

  CHECK(stats.registry_rows == 5);
  CHECK(stats.subjects == 3);
  CHECK(stats.under_age == 1);         // a3 is 63 at the index date
  CHECK(stats.dead_before_index == 1); // a4 died during the baseline
  CHECK(stats.orphan_records == 1);    // zz is in no registry
  CHECK(stats.malformed_rows == 3);    // short row, bad date, empty exemption code
  CHECK(stats.row_errors.size() == 3);
  CHECK(stats.outside_window == 1);    // the 2013 discharge
  CHECK(stats.baseline_records == 7);
  CHECK(stats.outcome_records == 6);

  REQUIRE(cohort.subjects.size() == 3);
  CHECK(cohort.subjects[0].id == "a1");
  CHECK(cohort.subjects[1].id == "a2");
  CHECK(cohort.subjects[2].id == "a5");

  const Subject& a1 = find_subject(cohort, "a1");
  CHECK(a1.age_years == 75);
  CHECK(a1.area_id == 3);
  CHECK(!a1.death_date.has_value());
  REQUIRE(a1.baseline_records.size() == 2);  // 2014 discharge + 2015 outpatient
  CHECK(a1.baseline_records[0].flow == FlowKind::HospitalDischarge);
  REQUIRE(a1.baseline_records[0].codes.size() == 1);
  CHECK(a1.baseline_records[0].codes[0].code == "428");
  CHECK(a1.baseline_records[0].codes[0].position == 0);
  CHECK(*a1.baseline_records[0].attribute("duration") == "7");
  CHECK(a1.outcome_records.size() == 3);  // femur discharge, green ER, home care

  const Subject& a2 = find_subject(cohort, "a2");
  CHECK(a2.age_years == 86);
  REQUIRE(a2.death_date.has_value());
  CHECK(a2.death_date->year == 2016);
  CHECK(a2.baseline_records.size() == 4);
  CHECK(a2.outcome_records.size() == 1);  // the 2016 pharmaceutical row

  SUBCASE("the abort policy throws on the first malformed row") {
    CHECK_THROWS_AS(load_flows(paths, spec, RowPolicy::Abort), DataError);
  }

  SUBCASE("baseline markers extract from the ingested records") {
    const MarkerConfig config = default_marker_config();
    const Profile p2 = extract_profile(a2, config);
    // a2: age 86 -> band 4; one baseline discharge; cancer via exemption 048
    // and the 170 diagnosis; kidney failure via the 585 ER code; the F01
    // psychiatry record counts as neurological, not mental.
    CHECK(p2[0] == 4);
    CHECK(p2[1] == 1);
    CHECK(p2[2] == 0);
    CHECK(p2[3] == 1);
    CHECK(p2[4] == 1);
    CHECK(p2[5] == 0);
    CHECK(p2[6] == 0);
    CHECK(p2[7] == 1);
  }

  SUBCASE("outcome linkage fills the six flags with onset restrictions") {
    Cohort linked = cohort;
    link_outcomes(linked, default_outcome_config());

    const Subject& l1 = find_subject(linked, "a1");
    CHECK(!l1.outcomes.death);
    CHECK(l1.outcomes.hospitalisation);
    CHECK(l1.outcomes.femur_fracture);
    CHECK(!l1.outcomes.er_red_code);  // green triage only
    CHECK(!l1.outcomes.baseline_disability);
    CHECK(l1.outcomes.disability_onset);  // first home-care record in 2016
    CHECK(!l1.outcomes.dementia_onset);

    const Subject& l2 = find_subject(linked, "a2");
    CHECK(l2.outcomes.death);
    CHECK(!l2.outcomes.hospitalisation);  // no outcome-year discharge
    CHECK(l2.outcomes.baseline_dementia); // F01 in the baseline window
    CHECK(!l2.outcomes.dementia_onset);   // 2016 N06D drug does not re-onset
    CHECK(l2.outcomes.dementia_prevalent());
    CHECK(!l2.outcomes.er_red_code);      // red triage was in the baseline

    const Subject& l5 = find_subject(linked, "a5");
    CHECK(l5.outcomes.er_red_code);
    CHECK(l5.outcomes.disability_onset);  // exemption 3C1 in 2016
    CHECK(!l5.outcomes.death);
    CHECK(!l5.outcomes.femur_fracture);
  }
}

TEST_CASE("subjects with no clinical rows get empty record lists") {
  TempDir dir;
  FlowPaths paths;
  paths.registry = dir.file("registry.csv",
                            "subject_id,sex,birth_date,death_date,area_id\n"
                            "b1,F,1941-02-03,,\n");
  const Cohort cohort = load_flows(paths, CohortSpec::for_outcome_year(2016));
  REQUIRE(cohort.subjects.size() == 1);
  CHECK(cohort.subjects[0].baseline_records.empty());
  CHECK(cohort.subjects[0].outcome_records.empty());
  CHECK(!cohort.subjects[0].area_id.has_value());

  Cohort linked = cohort;
  link_outcomes(linked, default_outcome_config());
  CHECK(linked.subjects[0].outcomes == OutcomeVector{});
}

TEST_CASE("load_flows validates file-level problems eagerly") {
  TempDir dir;
  const CohortSpec spec = CohortSpec::for_outcome_year(2016);

  FlowPaths missing;
  CHECK_THROWS_AS(load_flows(missing, spec), DataError);

  missing.registry = dir.at("absent.csv");
  CHECK_THROWS_AS(load_flows(missing, spec), DataError);

  FlowPaths bad_header;
  bad_header.registry = dir.file("bad_registry.csv", "id,sex\nx,M\n");
  CHECK_THROWS_AS(load_flows(bad_header, spec), DataError);

  FlowPaths bad_flow;
  bad_flow.registry = dir.file("registry.csv",
                               "subject_id,sex,birth_date,death_date,area_id\n"
                               "b1,F,1941-02-03,,\n");
  bad_flow.pharma = dir.file("pharma.csv", "subject_id,atc\nb1,N05\n");  // no date
  CHECK_THROWS_AS(load_flows(bad_flow, spec), DataError);

  // A duplicate registry id is a row error, honouring the policy.
  FlowPaths dupes;
  dupes.registry = dir.file("dupes.csv",
                            "subject_id,sex,birth_date,death_date,area_id\n"
                            "b1,F,1941-02-03,,\n"
                            "b1,M,1940-01-01,,\n");
  IngestStats stats;
  const Cohort kept = load_flows(dupes, spec, RowPolicy::SkipAndLog, &stats);
  CHECK(kept.subjects.size() == 1);
  CHECK(kept.subjects[0].sex == Sex::Female);
  CHECK(stats.malformed_rows == 1);
  CHECK_THROWS_AS(load_flows(dupes, spec, RowPolicy::Abort), DataError);
}

TEST_CASE("writing flows and reloading them reproduces the cohort") {
  TempDir dir;
  const FlowPaths fixture = fixture_paths(dir);
  const CohortSpec spec = CohortSpec::for_outcome_year(2016);
  Cohort original = load_flows(fixture, spec);
  link_outcomes(original, default_outcome_config());

  FlowPaths out;
  out.registry = dir.at("out_registry.csv");
  out.discharge = dir.at("out_discharge.csv");
  out.er = dir.at("out_er.csv");
  out.psychiatry = dir.at("out_psychiatry.csv");
  out.home_care = dir.at("out_home_care.csv");
  out.exemption = dir.at("out_exemption.csv");
  out.pharma = dir.at("out_pharma.csv");
  out.outpatient = dir.at("out_outpatient.csv");
  write_flows(original, out);

  IngestStats stats;
  Cohort reloaded = load_flows(out, spec, RowPolicy::Abort, &stats);
  link_outcomes(reloaded, default_outcome_config());
  CHECK(stats.malformed_rows == 0);
  CHECK(stats.orphan_records == 0);
  REQUIRE(reloaded.subjects.size() == original.subjects.size());
  for (std::size_t i = 0; i < original.subjects.size(); ++i) {
    CAPTURE(original.subjects[i].id);
    CHECK(reloaded.subjects[i] == original.subjects[i]);
  }
  CHECK(reloaded.spec == original.spec);
}

TEST_CASE("a death during the baseline window is a data inconsistency") {
  Cohort cohort;
  cohort.spec = CohortSpec::for_outcome_year(2016);
  Subject s;
  s.id = "ghost";
  s.age_years = 80;
  s.death_date = Date{2015, 6, 1};
  cohort.subjects.push_back(s);
  CHECK_THROWS_AS(link_outcomes(cohort, default_outcome_config()), DataError);

  // Dying after the outcome year is fine and is not a death outcome.
  cohort.subjects[0].death_date = Date{2017, 1, 5};
  link_outcomes(cohort, default_outcome_config());
  CHECK(!cohort.subjects[0].outcomes.death);
}

TEST_CASE("outcome configuration serializes and validates") {
  const OutcomeConfig config = default_outcome_config();
  const std::string text = outcome_config_to_json(config);
  const OutcomeConfig reparsed = parse_outcome_config(text);
  CHECK(outcome_config_to_json(reparsed) == text);

  // The disability outcome shares the disability marker's patterns.
  const MarkerConfig markers = default_marker_config();
  for (const MarkerDefinition& m : markers.markers) {
    if (m.name == "disability") {
      CHECK(config.disability.size() == m.patterns.size());
    }
  }

  CHECK_THROWS_AS(parse_outcome_config("nope"), DataError);
  CHECK_THROWS_AS(parse_outcome_config("{}"), DataError);
  CHECK_THROWS_AS(parse_outcome_config(R"({"femur_fracture": [], "disability": [],
                                           "dementia": []})"),
                  DataError);
}
