#include <doctest.h>

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "frailty/charlson.hpp"
#include "frailty/cohort.hpp"
#include "frailty/csv.hpp"
#include "frailty/deprivation.hpp"
#include "frailty/errors.hpp"
#include "frailty/markers.hpp"
#include "frailty/reports.hpp"
#include "frailty/selection.hpp"
#include "frailty/stability.hpp"
#include "frailty/stratify.hpp"
#include "frailty/synthetic.hpp"

using namespace frailty;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("frailty_analytics_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  static int& counter() {
    static int n = 0;
    return n;
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  REQUIRE(out.good());
  out << text;
}

// A subject with the given outcome flags and no records.
Subject subject_with(OutcomeVector v) {
  static int id = 0;
  Subject s;
  s.id = "s" + std::to_string(id++);
  s.age_years = 70;
  s.outcomes = v;
  return s;
}

FlowRecord discharge_with(std::vector<std::string> concomitant,
                          std::string primary = "486") {
  FlowRecord r;
  r.flow = FlowKind::HospitalDischarge;
  r.date = Date{2016, 3, 14};
  r.codes.push_back({CodeSystem::Icd9Cm, std::move(primary), 0});
  int pos = 1;
  for (std::string& code : concomitant) {
    r.codes.push_back({CodeSystem::Icd9Cm, std::move(code), pos++});
  }
  return r;
}

}  // namespace

TEST_CASE("index summary and histogram") {
  const std::vector<double> fi = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
  const FiSummary s = describe_fi(fi);
  CHECK(s.n == 8);
  CHECK(s.min == doctest::Approx(0.1));
  CHECK(s.max == doctest::Approx(0.8));
  CHECK(s.mean == doctest::Approx(0.45));
  CHECK(s.median == doctest::Approx(0.45));
  CHECK(s.q1 == doctest::Approx(0.275));  // position (n-1)*0.25 = 1.75
  CHECK(s.q3 == doctest::Approx(0.625));

  SUBCASE("histogram covers [0,1] and keeps every observation") {
    const std::vector<double> values = {0.0, 0.01, 0.02, 0.5, 1.0};
    const std::vector<HistogramBin> bins = fi_histogram(values);
    CHECK(bins.size() == 50);
    CHECK(bins.front().lo == doctest::Approx(0.0));
    CHECK(bins.back().hi == doctest::Approx(1.0));
    CHECK(bins[0].count == 2);   // 0.0 and 0.01
    CHECK(bins[1].count == 1);   // 0.02 opens the second bin
    CHECK(bins[25].count == 1);  // 0.5
    CHECK(bins[49].count == 1);  // 1.0 lands in the closed last bin
    std::size_t total = 0;
    for (const HistogramBin& b : bins) total += b.count;
    CHECK(total == values.size());
  }

  SUBCASE("invalid inputs are rejected") {
    CHECK_THROWS_AS(describe_fi({}), DataError);
    CHECK_THROWS_AS(fi_histogram({}, 0.02), DataError);
    CHECK_THROWS_AS(fi_histogram(fi, 0.0), DataError);
  }
}

TEST_CASE("quartile strata") {
  SUBCASE("eight distinct values split two per stratum") {
    const std::vector<double> fi = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
    const std::vector<std::uint32_t> profile = {0, 0, 1, 1, 2, 2, 3, 3};
    const StratumTable table = stratify_quartiles(fi, profile);
    CHECK_FALSE(table.degenerate);
    REQUIRE(table.strata.size() == 4);
    for (std::size_t q = 0; q < 4; ++q) {
      CHECK(table.strata[q].label == "Q" + std::to_string(q + 1));
      CHECK(table.strata[q].rows.size() == 2);
      CHECK(table.strata[q].n_profiles == 1);
    }
    // A value equal to a cut point stays in the lower stratum.
    CHECK(table.cuts[0] == doctest::Approx(0.275));
    CHECK(table.strata[0].rows == std::vector<std::uint32_t>{0, 1});
    CHECK(table.strata[3].rows == std::vector<std::uint32_t>{6, 7});
  }

  SUBCASE("tie on a cut goes to the lower stratum") {
    // Median = 0.3; rows with exactly 0.3 must land in Q2, not Q3.
    const std::vector<double> fi = {0.1, 0.2, 0.3, 0.3, 0.3, 0.5, 0.6, 0.7, 0.9};
    const StratumTable table = stratify_quartiles(fi, {});
    const double median = table.cuts[1];
    CHECK(median == doctest::Approx(0.3));
    for (std::uint32_t row : table.strata[2].rows) CHECK(fi[row] > median);
    std::size_t total = 0;
    for (const Stratum& s : table.strata) total += s.rows.size();
    CHECK(total == fi.size());
  }

  SUBCASE("fewer than four distinct values is degenerate") {
    const std::vector<double> fi = {0.2, 0.2, 0.2, 0.9, 0.9, 0.9};
    const StratumTable table = stratify_quartiles(fi, {});
    CHECK(table.degenerate);
  }
}

TEST_CASE("outcome tables over strata") {
  // 8 subjects, index 0.1..0.8 : Q1 = rows {0,1}, ..., Q4 = rows {6,7}.
  std::vector<double> fi = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
  Cohort cohort;
  cohort.spec = CohortSpec::for_outcome_year(2016);
  OutcomeVector none;
  OutcomeVector death;
  death.death = true;
  OutcomeVector baseline_dis;
  baseline_dis.baseline_disability = true;  // prevalent via the baseline flag
  OutcomeVector onset_dis;
  onset_dis.disability_onset = true;  // prevalent via new onset
  cohort.subjects = {subject_with(none),  subject_with(none),
                     subject_with(death), subject_with(baseline_dis),
                     subject_with(none),  subject_with(onset_dis),
                     subject_with(death), subject_with(death)};
  const StratumTable strata = stratify_quartiles(fi, {});

  SUBCASE("prevalence by stratum") {
    const PrevalenceTable t = outcome_prevalence_by_stratum(cohort, strata);
    REQUIRE(t.row_labels == outcome_table_labels());
    REQUIRE(t.column_labels ==
            std::vector<std::string>{"all", "Q1", "Q2", "Q3", "Q4"});
    CHECK(t.values[0][0] == doctest::Approx(100.0 * 3 / 8));  // death overall
    CHECK(t.values[0][2] == doctest::Approx(50.0));           // death in Q2 (row 2)
    CHECK(t.values[0][4] == doctest::Approx(100.0));          // death in Q4
    // Disability row counts baseline and onset cases alike.
    CHECK(t.values[3][0] == doctest::Approx(100.0 * 2 / 8));
    CHECK(t.values[3][2] == doctest::Approx(50.0));
    CHECK(t.values[3][3] == doctest::Approx(50.0));
  }

  SUBCASE("event distribution across strata: rows sum to 100") {
    const PrevalenceTable t = outcome_distribution_across_strata(cohort, strata);
    REQUIRE(t.column_labels == std::vector<std::string>{"Q1", "Q2", "Q3", "Q4"});
    for (std::size_t r = 0; r < t.values.size(); ++r) {
      double row_total = 0.0;
      for (double v : t.values[r]) row_total += v;
      if (row_total > 0.0) CHECK(row_total == doctest::Approx(100.0));
    }
    CHECK(t.values[0][1] == doctest::Approx(100.0 / 3));  // 1 of 3 deaths in Q2
    CHECK(t.values[0][3] == doctest::Approx(200.0 / 3));  // 2 of 3 deaths in Q4
  }

  SUBCASE("outcome count distribution: columns sum to 100") {
    const PrevalenceTable t = outcome_count_distribution(cohort, strata);
    REQUIRE(t.row_labels.size() == 7);  // 0..6 outcomes
    for (std::size_t col = 0; col < t.column_labels.size(); ++col) {
      double col_total = 0.0;
      for (std::size_t r = 0; r < t.values.size(); ++r) col_total += t.values[r][col];
      CHECK(col_total == doctest::Approx(100.0));
    }
    // Rows 0 and 1 have no outcome at all.
    CHECK(t.values[0][1] == doctest::Approx(100.0));
  }
}

TEST_CASE("top percentile selection") {
  SUBCASE("ties resolve by index descending then row ascending") {
    const std::vector<double> fi = {0.9, 0.8, 0.9, 0.1};
    CHECK(top_rows_by_fi(fi, 2) == std::vector<std::uint32_t>{0, 2});
    CHECK(top_rows_by_fi(fi, 3) == std::vector<std::uint32_t>{0, 2, 1});
  }

  SUBCASE("group sizes are ceil(t * n)") {
    Cohort cohort;
    cohort.spec = CohortSpec::for_outcome_year(2016);
    std::vector<double> fi;
    OutcomeVector death;
    death.death = true;
    for (int i = 0; i < 10; ++i) {
      OutcomeVector v;
      v.death = i == 9;  // only the frailest subject dies
      cohort.subjects.push_back(subject_with(v));
      fi.push_back(0.05 + 0.1 * i);
    }
    const PrevalenceTable t = top_percentile_table(cohort, fi, {25, 10});
    REQUIRE(t.column_labels.size() == 2);
    // Top 25% of 10 = 3 subjects, one death; top 10% = 1 subject, the death.
    CHECK(t.values[0][0] == doctest::Approx(100.0 / 3));
    CHECK(t.values[0][1] == doctest::Approx(100.0));
    CHECK_THROWS_AS(top_percentile_table(cohort, fi, {0}), DataError);
    CHECK_THROWS_AS(top_percentile_table(cohort, fi, {101}), DataError);
  }
}

TEST_CASE("group summaries and overlap regions") {
  SUBCASE("groups are label-sorted; empty labels are skipped") {
    const std::vector<double> fi = {1.0, 2.0, 4.0, 9.0};
    const std::vector<std::string> groups = {"b", "a", "a", ""};
    const std::vector<GroupSummary> out = fi_by_group(fi, groups);
    REQUIRE(out.size() == 2);
    CHECK(out[0].label == "a");
    CHECK(out[0].n == 2);
    CHECK(out[0].mean == doctest::Approx(3.0));
    CHECK(out[0].has_ci);
    CHECK(out[0].ci_lo == doctest::Approx(3.0 - 1.96 * std::sqrt(2.0) / std::sqrt(2.0)));
    CHECK(out[1].label == "b");
    CHECK(out[1].n == 1);
    CHECK_FALSE(out[1].has_ci);
  }

  SUBCASE("overlap percentages sum to 100") {
    // 20 subjects: 4 in A only, 2 in B only, 1 in C only, 3 in A&B, 1 in all.
    std::vector<std::uint8_t> a(20, 0), b(20, 0), c(20, 0);
    for (int i = 0; i < 4; ++i) a[i] = 1;
    for (int i = 4; i < 6; ++i) b[i] = 1;
    c[6] = 1;
    for (int i = 7; i < 10; ++i) a[i] = b[i] = 1;
    a[10] = b[10] = c[10] = 1;
    const VennRegions r = venn_overlap(a, b, c);
    CHECK(r.a_only == doctest::Approx(20.0));
    CHECK(r.b_only == doctest::Approx(10.0));
    CHECK(r.c_only == doctest::Approx(5.0));
    CHECK(r.ab == doctest::Approx(15.0));
    CHECK(r.abc == doctest::Approx(5.0));
    CHECK(r.ac == doctest::Approx(0.0));
    CHECK(r.none == doctest::Approx(45.0));
    const double total =
        r.none + r.a_only + r.b_only + r.c_only + r.ab + r.ac + r.bc + r.abc;
    CHECK(total == doctest::Approx(100.0));
  }
}

TEST_CASE("comorbidity scores reproduce hand-computed fixtures") {
  const DeyoMap map = default_deyo_map();

  struct Fixture {
    std::vector<std::string> concomitant;
    int expected;
  };
  // Expected per-admission scores, worked out by hand from the weight table.
  const std::vector<Fixture> fixtures = {
      {{}, 0},
      {{"4101"}, 1},              // myocardial infarction
      {{"428"}, 1},               // congestive heart failure
      {{"4101", "4280"}, 2},      // two distinct weight-1 conditions
      {{"4101", "412"}, 1},       // same condition twice counts once
      {{"2504"}, 2},              // diabetes with chronic complications
      {{"196"}, 6},               // metastatic tumor (not double-counted)
      {{"042"}, 6},               // aids
      {{"5712", "5722"}, 4},      // mild (1) + moderate/severe liver (3)
      {{"3441", "585"}, 4},       // hemiplegia (2) + renal disease (2)
      {{"290"}, 1},               // dementia
      {{"71481", "4930"}, 2},     // rheumatologic + chronic pulmonary
      {{"V434"}, 1},              // peripheral vascular via V-code prefix
      {{"99999", "0000"}, 0},     // unknown codes are ignored
  };
  for (const Fixture& f : fixtures) {
    CAPTURE(f.expected);
    const FlowRecord r = discharge_with(f.concomitant);
    CHECK(charlson_admission_score(r, map) == f.expected);
  }

  SUBCASE("the primary diagnosis never counts") {
    const FlowRecord r = discharge_with({}, "410");
    CHECK(charlson_admission_score(r, map) == 0);
  }

  SUBCASE("code order and duplicates do not change the score") {
    const FlowRecord a = discharge_with({"4101", "585", "4101"});
    const FlowRecord b = discharge_with({"585", "4101"});
    CHECK(charlson_admission_score(a, map) == charlson_admission_score(b, map));
    CHECK(charlson_admission_score(a, map) == 3);
  }

  SUBCASE("subject score is the maximum over outcome-year admissions") {
    Subject s = subject_with({});
    s.outcome_records.push_back(discharge_with({"428"}));           // 1
    s.outcome_records.push_back(discharge_with({"3441", "585"}));   // 4
    s.outcome_records.push_back(discharge_with({}));                // 0
    FlowRecord not_a_discharge;
    not_a_discharge.flow = FlowKind::Exemption;
    not_a_discharge.date = Date{2016, 5, 2};
    not_a_discharge.codes.push_back({CodeSystem::ExemptionCode, "021", 0});
    s.outcome_records.push_back(not_a_discharge);
    const CharlsonResult r = charlson_score(s, map);
    CHECK(r.admission_scores == std::vector<int>{1, 4, 0});
    CHECK(r.cci == 4);
    CHECK(r.cci_class == CciClass::ThreePlus);
  }

  SUBCASE("class mapping") {
    CHECK(cci_class_of(0) == CciClass::Zero);
    CHECK(cci_class_of(1) == CciClass::One);
    CHECK(cci_class_of(2) == CciClass::Two);
    CHECK(cci_class_of(3) == CciClass::ThreePlus);
    CHECK(cci_class_of(9) == CciClass::ThreePlus);
    CHECK(std::string(to_string(CciClass::ThreePlus)) == "3+");
  }

  SUBCASE("no hospitalisations scores zero") {
    const CharlsonResult r = charlson_score(subject_with({}), map);
    CHECK(r.cci == 0);
    CHECK(r.cci_class == CciClass::Zero);
    CHECK(r.admission_scores.empty());
  }

  SUBCASE("weight table JSON round trip and shipped file") {
    const std::string text = deyo_map_to_json(map);
    const DeyoMap reparsed = parse_deyo_map(text);
    CHECK(deyo_map_to_json(reparsed) == text);
    const std::string shipped =
        std::string(FRAILTY_REPO_DIR) + "/configs/deyo_cci.json";
    CHECK(deyo_map_to_json(load_deyo_map(shipped)) == text);
    CHECK_THROWS_AS(parse_deyo_map("[]"), DataError);
  }
}

TEST_CASE("deprivation index") {
  TempDir dir;

  SUBCASE("loader validates the table") {
    const std::string path = dir.file("dep.csv");
    write_file(path,
               "area_id,population,low_education,unemployment\n"
               "1,100,0.2,0.05\n"
               "2,200,0.3,0.08\n");
    const DeprivationTable t = load_deprivation_table(path);
    CHECK(t.factor_names == std::vector<std::string>{"low_education", "unemployment"});
    REQUIRE(t.areas.size() == 2);
    CHECK(t.areas[0].area_id == 1);
    CHECK(t.areas[1].population == doctest::Approx(200.0));

    write_file(dir.file("dup.csv"),
               "area_id,population,f\n1,10,0.1\n1,20,0.2\n");
    CHECK_THROWS_AS(load_deprivation_table(dir.file("dup.csv")), DataError);
    write_file(dir.file("bad_pop.csv"), "area_id,population,f\n1,0,0.1\n");
    CHECK_THROWS_AS(load_deprivation_table(dir.file("bad_pop.csv")), DataError);
  }

  SUBCASE("identical areas give a zero index plus a degeneracy warning") {
    DeprivationTable t;
    t.factor_names = {"f1", "f2"};
    for (int a = 1; a <= 4; ++a) t.areas.push_back({a, 100.0, {0.3, 0.1}});
    const DeprivationIndex idx = deprivation_index(t);
    for (double v : idx.di) CHECK(v == doctest::Approx(0.0));
    CHECK(idx.warnings.size() == 2);  // both factors are constant
    for (int q : idx.quintile) {
      CHECK(q >= 1);
      CHECK(q <= 5);
    }
  }

  SUBCASE("quintiles follow the index with population weights") {
    DeprivationTable t;
    t.factor_names = {"f"};
    for (int a = 1; a <= 10; ++a) {
      t.areas.push_back({a, 100.0, {0.1 * a}});
    }
    const DeprivationIndex idx = deprivation_index(t);
    // Equal populations: two areas per quintile, ordered by the factor.
    const std::vector<int> expected = {1, 1, 2, 2, 3, 3, 4, 4, 5, 5};
    CHECK(idx.quintile == expected);
    for (std::size_t i = 1; i < idx.di.size(); ++i) CHECK(idx.di[i] > idx.di[i - 1]);

    DeprivationTable skewed;
    skewed.factor_names = {"f"};
    skewed.areas.push_back({1, 800.0, {0.1}});
    skewed.areas.push_back({2, 200.0, {0.9}});
    const DeprivationIndex idx2 = deprivation_index(skewed);
    // Area 1 holds 80% of the population: its quintile is ceil(0.8*5) = 4.
    CHECK(idx2.quintile == std::vector<int>{4, 5});
  }

  SUBCASE("subject assignment counts missing areas") {
    DeprivationTable t;
    t.factor_names = {"f"};
    for (int a = 1; a <= 5; ++a) t.areas.push_back({a, 100.0, {0.1 * a}});
    const DeprivationIndex idx = deprivation_index(t);

    Cohort cohort;
    cohort.spec = CohortSpec::for_outcome_year(2016);
    Subject in_area = subject_with({});
    in_area.area_id = 5;
    Subject unknown_area = subject_with({});
    unknown_area.area_id = 99;
    Subject no_area = subject_with({});
    cohort.subjects = {in_area, unknown_area, no_area};

    const DeprivationAssignment assignment = assign_deprivation(cohort, idx);
    CHECK(assignment.quintile == std::vector<int>{5, 0, 0});
    CHECK(assignment.missing == 2);
  }
}

TEST_CASE("rank correlation and cross-cohort stability") {
  SUBCASE("classic fixtures") {
    const SpearmanResult r1 = spearman({1, 2, 3, 4, 5}, {1, 3, 2, 4, 5});
    CHECK(r1.defined);
    CHECK(r1.rho == doctest::Approx(0.9));
    const SpearmanResult r2 = spearman({1, 2, 3, 4, 5}, {5, 4, 3, 2, 1});
    CHECK(r2.rho == doctest::Approx(-1.0));
    const SpearmanResult r3 = spearman({1, 2, 3}, {1, 2, 3});
    CHECK(r3.rho == doctest::Approx(1.0));
    const SpearmanResult r4 = spearman({1, 2, 3}, {7, 7, 7});
    CHECK_FALSE(r4.defined);
    const SpearmanResult r5 = spearman({1, 2, 2, 3}, {10, 20, 20, 30});
    CHECK(r5.rho == doctest::Approx(1.0));  // ties get average ranks
  }

  SUBCASE("identical cohorts are perfectly stable") {
    const std::vector<SubjectId> ids = {"a", "b", "c", "d"};
    const std::vector<double> fi = {0.1, 0.4, 0.2, 0.9};
    const std::vector<Profile> profiles = {{0, 1}, {1, 1}, {1, 0}, {1, 1}};
    const StabilityReport r = stability_metrics(ids, fi, profiles, ids, fi, profiles);
    CHECK(r.shared == 4);
    CHECK(r.stable == 4);
    CHECK(r.changed == 0);
    CHECK(r.overall.rho == doctest::Approx(1.0));
    CHECK(r.stable_subjects.rho == doctest::Approx(1.0));
    CHECK_FALSE(r.changed_subjects.defined);
  }

  SUBCASE("profile changers are tracked separately") {
    const std::vector<SubjectId> ids1 = {"a", "b", "c", "d", "x"};
    const std::vector<double> fi1 = {0.1, 0.2, 0.3, 0.4, 0.5};
    const std::vector<Profile> p1 = {{0}, {0}, {1}, {1}, {1}};
    const std::vector<SubjectId> ids2 = {"d", "c", "b", "a", "y"};
    const std::vector<double> fi2 = {0.5, 0.4, 0.1, 0.2, 0.9};
    const std::vector<Profile> p2 = {{1}, {1}, {0}, {1}, {0}};
    const StabilityReport r = stability_metrics(ids1, fi1, p1, ids2, fi2, p2);
    CHECK(r.shared == 4);  // x and y are unmatched
    CHECK(r.stable == 3);  // a changed profile {0} -> {1}
    CHECK(r.changed == 1);
    CHECK(r.overall.n == 4);

    CHECK_THROWS_AS(stability_metrics({"a", "b"}, {0.1, 0.2}, {{0}, {1}},
                                      {"a", "b"}, {0.1, 0.2}, {{0}, {1}}),
                    DataError);  // fewer than 3 shared subjects
  }
}

TEST_CASE("sex-stratified index agrees with the pooled index") {
  SyntheticSpec spec = default_synthetic_spec();
  spec.n_subjects = 1200;
  spec.seed = 991;
  const Cohort cohort = generate_synthetic_cohort(spec);
  const MarkerData data = extract_markers(cohort, default_marker_config());

  std::vector<std::size_t> markers(data.names.size());
  for (std::size_t m = 0; m < markers.size(); ++m) markers[m] = m;

  RankOptions rank;
  rank.method = RankMethod::Lpom;
  const FrailtyScore pooled = score_markers(data, markers, rank);
  const SexStratifiedReport report =
      sex_stratified_fi(cohort, data, markers, pooled.fi, rank);

  REQUIRE(report.groups.size() == 2);
  CHECK(report.groups[0].sex == Sex::Female);
  CHECK(report.groups[1].sex == Sex::Male);
  CHECK(report.groups[0].n + report.groups[1].n == cohort.size());
  for (const SexStratifiedGroup& g : report.groups) {
    CHECK(g.n > 0);
    CHECK(g.rho_vs_pooled.defined);
    // Same markers, same dominance rules: the per-sex index must track the
    // pooled one closely.
    CHECK(g.rho_vs_pooled.rho > 0.95);
    CHECK(g.evaluation.mean_auc > 0.5);
  }
}

TEST_CASE("report emission") {
  SyntheticSpec spec = default_synthetic_spec();
  spec.n_subjects = 800;
  spec.seed = 321;
  const Cohort cohort = generate_synthetic_cohort(spec);
  const MarkerData data = extract_markers(cohort, default_marker_config());
  std::vector<std::size_t> selected(data.names.size());
  for (std::size_t m = 0; m < selected.size(); ++m) selected[m] = m;

  RankOptions rank;
  rank.method = RankMethod::Lpom;
  const FrailtyScore score = score_markers(data, selected, rank);
  const SubsetEvaluation eval = evaluate_marker_subset(cohort, data, selected, rank);
  const std::vector<CharlsonResult> charlson =
      charlson_scores(cohort, default_deyo_map());

  ReportInputs inputs;
  inputs.cohort = &cohort;
  inputs.markers = &data;
  inputs.selected = &selected;
  inputs.fi = &score.fi;
  inputs.subject_profile = &score.poset.subject_profile;
  inputs.final_evaluation = &eval;
  inputs.charlson = &charlson;

  TempDir dir;

  SUBCASE("emit-all skips reports whose optional inputs are absent") {
    std::vector<std::string> skipped;
    const std::vector<EmittedReport> emitted =
        emit_all_reports(inputs, dir.file("reports"), &skipped);
    // No robustness, sex, or deprivation inputs were provided.
    CHECK(emitted.size() == 12);
    CHECK(skipped.size() == 3);
    std::set<std::string> emitted_ids;
    for (const EmittedReport& r : emitted) {
      emitted_ids.insert(r.id);
      CHECK(std::filesystem::exists(r.csv_path));
      CHECK(std::filesystem::exists(r.text_path));
      CHECK(std::filesystem::file_size(r.csv_path) > 0);
    }
    CHECK(emitted_ids.count("fi_summary") == 1);
    CHECK(emitted_ids.count("robustness_inclusion") == 0);
    CHECK(emitted_ids.count("fi_by_deprivation") == 0);

    // The quartile CSV parses and its subject counts add up.
    CsvReader reader(dir.file("reports") + "/quartile_profiles.csv");
    std::vector<std::string> row;
    const std::size_t col = reader.require_column("subjects");
    std::size_t total = 0;
    while (reader.next(row)) total += std::stoul(row[col]);
    CHECK(total == cohort.size());
  }

  SUBCASE("numeric ids are aliases") {
    const EmittedReport r = emit_report(inputs, "table2", dir.file("alias"));
    CHECK(r.id == "fi_summary");
    CHECK(std::filesystem::exists(r.csv_path));
  }

  SUBCASE("unknown ids and missing inputs raise the right errors") {
    CHECK_THROWS_AS(emit_report(inputs, "nope", dir.file("x")), DataError);
    CHECK_THROWS_AS(emit_report(inputs, "fi_by_deprivation", dir.file("x")),
                    DependencyError);
    CHECK_THROWS_AS(emit_report(inputs, "sex_stratified_auc", dir.file("x")),
                    DependencyError);
    ReportInputs incomplete;
    incomplete.cohort = &cohort;
    CHECK_THROWS_AS(emit_report(incomplete, "fi_summary", dir.file("x")),
                    DependencyError);
  }
}
