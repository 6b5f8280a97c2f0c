#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "frailty/cohort.hpp"

namespace frailty {

// Record emitted into the baseline window when a marker fires (the date is
// drawn at generation time).
struct RecordTemplate {
  FlowKind flow = FlowKind::Exemption;
  std::vector<CodeEntry> codes;
};

// One dichotomous condition: fires with the configured marginal prevalence,
// loaded on the latent frailty score through a probit link.
struct SyntheticMarker {
  std::string name;
  double prevalence = 0.1;
  double loading = 1.0;  // 0 = pure noise, independent of the latent score
  std::vector<RecordTemplate> templates;  // one drawn uniformly per firing
};

// One adverse outcome: logistic in the latent score, intercept calibrated to
// the configured population prevalence.
struct SyntheticOutcome {
  std::string name;  // canonical outcome name ("death", "er_red_code", ...)
  double prevalence = 0.05;
  double beta = 1.0;
};

// Generator model. A subject's latent frailty is
//   L = gamma * z(age) + sqrt(1 - gamma^2) * N(0,1),
// so L has mean 0 and variance 1 exactly. Markers fire via probit thresholds
// calibrated against the age mixture (their marginal prevalence is exact up
// to Monte Carlo noise); baseline hospitalisation counts are Poisson with a
// log-rate linear in L; the six outcomes are Bernoulli-logistic in L and are
// materialized as outcome-year records, then run through the real outcome
// linkage.
struct SyntheticSpec {
  std::size_t n_subjects = 10000;
  std::uint64_t seed = 42;
  int outcome_year = 2016;
  double female_share = 0.55;
  int area_count = 10;

  // Age pyramid: weight of age_start + k for each weight entry.
  int age_start = 65;
  std::vector<double> age_weights;
  double age_gamma = 0.45;  // in [0, 1)

  std::vector<SyntheticMarker> markers;

  // Baseline hospitalisation counts (they feed the count marker).
  double hosp_mean = 0.55;    // marginal mean number of discharges
  double hosp_loading = 0.6;  // log-rate slope on L

  // Chance that a discharge record carries concomitant comorbidity codes
  // (inv_logit(base + slope * L) per record; codes avoid every marker range).
  double comorbidity_base = -2.0;
  double comorbidity_slope = 0.8;

  // Share of dementia_host carriers whose condition is dementia; they get a
  // baseline psychiatric F00 record, which marks them as prevalent cases.
  double dementia_share = 0.35;
  std::string dementia_host = "neurological_diseases";

  // Innocuous outpatient records per subject (Poisson rate).
  double outpatient_rate = 0.3;

  std::vector<SyntheticOutcome> outcomes;

  void validate() const;  // throws DataError
};

SyntheticSpec default_synthetic_spec();
SyntheticSpec parse_synthetic_spec(const std::string& json_text);
SyntheticSpec load_synthetic_spec(const std::string& path);
std::string synthetic_spec_to_json(const SyntheticSpec& spec);

// Deterministic in spec.seed (per-subject random streams). When latent_out is
// given it receives each subject's true frailty score, in cohort order, for
// oracle comparisons. Outcome flags are filled through link_outcomes with the
// default outcome configuration.
Cohort generate_synthetic_cohort(const SyntheticSpec& spec,
                                 std::vector<double>* latent_out = nullptr);

}  // namespace frailty
