#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "frailty/auc.hpp"
#include "frailty/cohort.hpp"
#include "frailty/errors.hpp"
#include "frailty/flows.hpp"
#include "frailty/markers.hpp"
#include "frailty/synthetic.hpp"

using namespace frailty;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("frailty_synth_" + std::to_string(::getpid()) + "_" +
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

FlowPaths paths_in(const TempDir& dir) {
  FlowPaths p;
  p.registry = dir.file("registry.csv");
  p.discharge = dir.file("discharge.csv");
  p.er = dir.file("er.csv");
  p.psychiatry = dir.file("psychiatry.csv");
  p.home_care = dir.file("home_care.csv");
  p.exemption = dir.file("exemption.csv");
  p.pharma = dir.file("pharma.csv");
  p.outpatient = dir.file("outpatient.csv");
  return p;
}

std::string cohort_snapshot(const Cohort& cohort) {
  std::ostringstream out;
  write_cohort_ndjson(cohort, out);
  return out.str();
}

// Binomial z-statistic of an observed event count against a target rate.
double prevalence_z(std::size_t events, std::size_t n, double p) {
  const double obs = static_cast<double>(events) / static_cast<double>(n);
  return (obs - p) / std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

}  // namespace

TEST_CASE("synthetic cohorts are deterministic in the seed") {
  SyntheticSpec spec = default_synthetic_spec();
  spec.n_subjects = 400;
  spec.seed = 977;

  std::vector<double> latent_a;
  std::vector<double> latent_b;
  const Cohort a = generate_synthetic_cohort(spec, &latent_a);
  const Cohort b = generate_synthetic_cohort(spec, &latent_b);
  CHECK(cohort_snapshot(a) == cohort_snapshot(b));
  CHECK(latent_a == latent_b);
  REQUIRE(latent_a.size() == 400);

  spec.seed = 978;
  const Cohort c = generate_synthetic_cohort(spec);
  CHECK(cohort_snapshot(a) != cohort_snapshot(c));

  SUBCASE("an empty cohort is allowed") {
    spec.n_subjects = 0;
    std::vector<double> latent;
    const Cohort empty = generate_synthetic_cohort(spec, &latent);
    CHECK(empty.subjects.empty());
    CHECK(latent.empty());
    CHECK(empty.spec.outcome_year == spec.outcome_year);
  }
}

TEST_CASE("generated cohorts satisfy the documented data invariants") {
  SyntheticSpec spec = default_synthetic_spec();
  spec.n_subjects = 2000;
  spec.seed = 31;
  const Cohort cohort = generate_synthetic_cohort(spec);

  const ValidationReport report = validate_cohort(cohort);
  for (const Violation& v : report.violations) {
    CAPTURE(v.subject);
    CAPTURE(v.rule);
    CAPTURE(v.detail);
    CHECK(false);
  }
  CHECK(report.clean());

  std::size_t onset_and_baseline = 0;
  for (const Subject& s : cohort.subjects) {
    if (s.outcomes.disability_onset && s.outcomes.baseline_disability) ++onset_and_baseline;
    if (s.outcomes.dementia_onset && s.outcomes.baseline_dementia) ++onset_and_baseline;
    if (s.outcomes.death) {
      REQUIRE(s.death_date.has_value());
      CHECK(s.death_date->year == spec.outcome_year);
    }
  }
  CHECK(onset_and_baseline == 0);
}

TEST_CASE("marker, outcome and demographic rates match their calibration") {
  SyntheticSpec spec = default_synthetic_spec();
  spec.n_subjects = 10000;
  spec.seed = 4711;
  std::vector<double> latent;
  const Cohort cohort = generate_synthetic_cohort(spec, &latent);
  const std::size_t n = cohort.size();
  REQUIRE(n == 10000);

  const MarkerData data = extract_markers(cohort, default_marker_config());

  SUBCASE("each dichotomous marker hits its configured prevalence") {
    for (const SyntheticMarker& marker : spec.markers) {
      std::size_t index = data.names.size();
      for (std::size_t m = 0; m < data.names.size(); ++m) {
        if (data.names[m] == marker.name) index = m;
      }
      REQUIRE(index < data.names.size());
      const std::vector<std::uint8_t> column = data.column(index);
      std::size_t fired = 0;
      for (std::uint8_t level : column) fired += level > 0;
      CAPTURE(marker.name);
      CHECK(std::abs(prevalence_z(fired, n, marker.prevalence)) < 3.5);
    }
  }

  SUBCASE("baseline hospitalisation counts hit the configured mean") {
    double total = 0.0;
    for (const Subject& s : cohort.subjects) {
      for (const FlowRecord& r : s.baseline_records) {
        total += r.flow == FlowKind::HospitalDischarge;
      }
    }
    CHECK(total / static_cast<double>(n) == doctest::Approx(spec.hosp_mean).epsilon(0.08));
  }

  SUBCASE("exactly-linked outcomes hit their configured prevalences") {
    std::size_t death = 0, er_red = 0, femur = 0, hosp = 0;
    std::size_t disability_onset = 0, dementia_onset = 0;
    for (const Subject& s : cohort.subjects) {
      death += s.outcomes.death;
      er_red += s.outcomes.er_red_code;
      femur += s.outcomes.femur_fracture;
      hosp += s.outcomes.hospitalisation;
      disability_onset += s.outcomes.disability_onset;
      dementia_onset += s.outcomes.dementia_onset;
    }
    auto configured = [&](const char* name) {
      for (const SyntheticOutcome& o : spec.outcomes) {
        if (o.name == name) return o.prevalence;
      }
      REQUIRE(false);
      return 0.0;
    };
    CHECK(std::abs(prevalence_z(death, n, configured("death"))) < 3.5);
    CHECK(std::abs(prevalence_z(er_red, n, configured("er_red_code"))) < 3.5);
    CHECK(std::abs(prevalence_z(femur, n, configured("femur_fracture"))) < 3.5);

    // The hospitalisation flag is driven by the presence of any outcome-year
    // discharge, so a femur-fracture admission also raises it: the observed
    // rate sits between the configured rate and the union of the two events.
    const double p_hosp = configured("hospitalisation");
    const double p_femur = configured("femur_fracture");
    const double hosp_rate = static_cast<double>(hosp) / static_cast<double>(n);
    CHECK(hosp_rate > p_hosp - 3.5 * std::sqrt(p_hosp * (1 - p_hosp) / n));
    CHECK(hosp_rate < p_hosp + p_femur + 3.5 * std::sqrt(p_hosp * (1 - p_hosp) / n));

    // Onset outcomes are suppressed for prevalent baseline cases, so their
    // flag rate is strictly below the configured marginal event rate.
    const double dis_rate = static_cast<double>(disability_onset) / static_cast<double>(n);
    const double dem_rate = static_cast<double>(dementia_onset) / static_cast<double>(n);
    CHECK(dis_rate > 0.0);
    CHECK(dis_rate < configured("disability_onset") + 0.005);
    CHECK(dem_rate > 0.0);
    CHECK(dem_rate < configured("dementia_onset") + 0.005);
  }

  SUBCASE("demographics follow the configured pyramid") {
    std::size_t female = 0;
    double age_total = 0.0;
    for (const Subject& s : cohort.subjects) {
      female += s.sex == Sex::Female;
      age_total += s.age_years;
      REQUIRE(s.area_id.has_value());
      CHECK(*s.area_id >= 1);
      CHECK(*s.area_id <= spec.area_count);
      CHECK(s.age_years >= spec.age_start);
      CHECK(s.age_years < spec.age_start + static_cast<int>(spec.age_weights.size()));
    }
    CHECK(std::abs(prevalence_z(female, n, spec.female_share)) < 3.5);
    double weight_total = 0.0;
    double mean_age = 0.0;
    for (std::size_t k = 0; k < spec.age_weights.size(); ++k) {
      weight_total += spec.age_weights[k];
      mean_age += spec.age_weights[k] * (spec.age_start + static_cast<double>(k));
    }
    mean_age /= weight_total;
    CHECK(age_total / static_cast<double>(n) == doctest::Approx(mean_age).epsilon(0.01));
  }

  SUBCASE("the latent score is a strong oracle for every outcome") {
    for (int k = 0; k < kOutcomeCount; ++k) {
      const auto outcome = static_cast<Outcome>(k);
      std::vector<std::uint8_t> labels;
      labels.reserve(n);
      for (const Subject& s : cohort.subjects) {
        labels.push_back(outcome_flag(s.outcomes, outcome) ? 1 : 0);
      }
      CAPTURE(to_string(outcome));
      CHECK(auc(latent, labels) > 0.62);
    }
  }

  SUBCASE("baseline dementia is a subset of the host marker") {
    std::size_t host_index = data.names.size();
    for (std::size_t m = 0; m < data.names.size(); ++m) {
      if (data.names[m] == spec.dementia_host) host_index = m;
    }
    REQUIRE(host_index < data.names.size());
    const std::vector<std::uint8_t> host = data.column(host_index);
    std::size_t prevalent = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (cohort.subjects[i].outcomes.baseline_dementia) {
        ++prevalent;
        CHECK(host[i] > 0);
      }
    }
    double host_prev = 0.0;
    for (const SyntheticMarker& m : spec.markers) {
      if (m.name == spec.dementia_host) host_prev = m.prevalence;
    }
    CHECK(std::abs(prevalence_z(prevalent, n, host_prev * spec.dementia_share)) < 3.5);
  }
}

TEST_CASE("generated cohorts survive the CSV flow round trip") {
  SyntheticSpec spec = default_synthetic_spec();
  spec.n_subjects = 300;
  spec.seed = 55;
  const Cohort original = generate_synthetic_cohort(spec);

  TempDir dir;
  const FlowPaths paths = paths_in(dir);
  write_flows(original, paths);

  IngestStats stats;
  Cohort loaded = load_flows(paths, original.spec, RowPolicy::Abort, &stats);
  CHECK(stats.malformed_rows == 0);
  CHECK(stats.orphan_records == 0);
  CHECK(stats.subjects == original.size());
  link_outcomes(loaded, default_outcome_config());

  REQUIRE(loaded.subjects.size() == original.subjects.size());
  CHECK(loaded.spec == original.spec);
  for (std::size_t i = 0; i < loaded.subjects.size(); ++i) {
    CAPTURE(original.subjects[i].id);
    CHECK(loaded.subjects[i] == original.subjects[i]);
  }
}

TEST_CASE("synthetic spec JSON round trip and file loading") {
  const SyntheticSpec spec = default_synthetic_spec();
  const std::string text = synthetic_spec_to_json(spec);
  const SyntheticSpec parsed = parse_synthetic_spec(text);
  CHECK(synthetic_spec_to_json(parsed) == text);

  TempDir dir;
  {
    std::FILE* f = std::fopen(dir.file("spec.json").c_str(), "wb");
    REQUIRE(f != nullptr);
    std::fwrite(text.data(), 1, text.size(), f);
    std::fclose(f);
  }
  const SyntheticSpec loaded = load_synthetic_spec(dir.file("spec.json"));
  CHECK(synthetic_spec_to_json(loaded) == text);

  CHECK_THROWS_AS(parse_synthetic_spec("not json"), DataError);
  CHECK_THROWS_AS(parse_synthetic_spec("[1, 2]"), DataError);
  CHECK_THROWS_AS(load_synthetic_spec(dir.file("missing.json")), DataError);

  SUBCASE("the shipped default config matches the built-in defaults") {
    const SyntheticSpec shipped =
        load_synthetic_spec(std::string(FRAILTY_REPO_DIR) + "/configs/synthetic_default.json");
    CHECK(synthetic_spec_to_json(shipped) == text);
  }

  SUBCASE("partial documents inherit the defaults") {
    const SyntheticSpec partial = parse_synthetic_spec(R"({"n_subjects": 7, "seed": 9})");
    CHECK(partial.n_subjects == 7);
    CHECK(partial.seed == 9);
    CHECK(partial.markers.size() == spec.markers.size());
    CHECK(partial.outcomes.size() == spec.outcomes.size());
  }
}

TEST_CASE("synthetic spec validation rejects broken configurations") {
  const SyntheticSpec base = default_synthetic_spec();

  auto expect_rejected = [](SyntheticSpec spec) {
    CHECK_THROWS_AS(spec.validate(), DataError);
  };

  {
    SyntheticSpec s = base;
    s.female_share = 1.5;
    expect_rejected(s);
  }
  {
    SyntheticSpec s = base;
    s.area_count = 0;
    expect_rejected(s);
  }
  {
    SyntheticSpec s = base;
    s.age_weights.clear();
    expect_rejected(s);
  }
  {
    SyntheticSpec s = base;
    s.age_weights.assign(3, 0.0);
    expect_rejected(s);
  }
  {
    SyntheticSpec s = base;
    s.age_weights[0] = -1.0;
    expect_rejected(s);
  }
  {
    SyntheticSpec s = base;
    s.age_gamma = 1.0;
    expect_rejected(s);
  }
  {
    SyntheticSpec s = base;
    s.markers[0].prevalence = 0.0;
    expect_rejected(s);
  }
  {
    SyntheticSpec s = base;
    s.markers[0].loading = -0.5;
    expect_rejected(s);
  }
  {
    SyntheticSpec s = base;
    s.markers[0].templates.clear();
    expect_rejected(s);
  }
  {
    SyntheticSpec s = base;
    s.markers[0].templates[0].codes[0].position = 9;
    expect_rejected(s);
  }
  {
    SyntheticSpec s = base;
    s.markers[1].name = s.markers[0].name;
    expect_rejected(s);
  }
  {
    SyntheticSpec s = base;
    s.outcomes[0].name = "not_an_outcome";
    expect_rejected(s);
  }
  {
    SyntheticSpec s = base;
    s.outcomes[0].prevalence = 1.0;
    expect_rejected(s);
  }
  {
    SyntheticSpec s = base;
    s.outcomes.push_back(s.outcomes[0]);
    expect_rejected(s);
  }
  {
    SyntheticSpec s = base;
    s.hosp_mean = 0.0;
    expect_rejected(s);
  }
  {
    SyntheticSpec s = base;
    s.dementia_share = -0.1;
    expect_rejected(s);
  }
}
