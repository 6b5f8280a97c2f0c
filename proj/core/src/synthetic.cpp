#include "frailty/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "frailty/errors.hpp"
#include "frailty/flows.hpp"
#include "frailty/rng.hpp"
#include "frailty/stats.hpp"

namespace frailty {

namespace {

using nlohmann::json;

Outcome outcome_from_name(const std::string& name) {
  for (int i = 0; i < kOutcomeCount; ++i) {
    const auto o = static_cast<Outcome>(i);
    if (name == to_string(o)) return o;
  }
  throw DataError(fmt::format("unknown outcome '{}'", name));
}

struct AgeMixture {
  std::vector<double> weights;  // normalized
  std::vector<double> z;        // standardized score per age index
};

AgeMixture age_mixture(const SyntheticSpec& spec) {
  AgeMixture mix;
  double total = 0.0;
  for (double w : spec.age_weights) total += w;
  mix.weights.reserve(spec.age_weights.size());
  for (double w : spec.age_weights) mix.weights.push_back(w / total);
  double mean = 0.0;
  for (std::size_t k = 0; k < mix.weights.size(); ++k) {
    mean += mix.weights[k] * (spec.age_start + static_cast<double>(k));
  }
  double var = 0.0;
  for (std::size_t k = 0; k < mix.weights.size(); ++k) {
    const double d = spec.age_start + static_cast<double>(k) - mean;
    var += mix.weights[k] * d * d;
  }
  const double sd = std::sqrt(var);
  mix.z.reserve(mix.weights.size());
  for (std::size_t k = 0; k < mix.weights.size(); ++k) {
    const double a = spec.age_start + static_cast<double>(k);
    mix.z.push_back(sd > 0 ? (a - mean) / sd : 0.0);
  }
  return mix;
}

// Solves target = mean_a w_a f(x, z_a) for x by bisection; f must be strictly
// decreasing in x.
template <typename F>
double bisect_decreasing(const AgeMixture& mix, double target, F f) {
  double lo = -60.0;
  double hi = 60.0;
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    double value = 0.0;
    for (std::size_t a = 0; a < mix.weights.size(); ++a) {
      value += mix.weights[a] * f(mid, mix.z[a]);
    }
    if (value > target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Marker threshold tau: P(lambda * L + eps > tau) = prevalence, where
// L | age = N(gamma z_a, 1 - gamma^2) and eps = N(0, 1).
double marker_threshold(const AgeMixture& mix, double gamma, double loading,
                        double prevalence) {
  const double s =
      std::sqrt(loading * loading * (1.0 - gamma * gamma) + 1.0);
  return bisect_decreasing(mix, prevalence, [&](double tau, double z) {
    return normal_cdf((loading * gamma * z - tau) / s);
  });
}

// Outcome intercept c: E[inv_logit(c + beta * L)] = prevalence. The inner
// normal expectation uses Gauss-Hermite quadrature.
double outcome_intercept(const AgeMixture& mix, const GaussHermiteRule& gh,
                         double gamma, double beta, double prevalence) {
  const double resid = std::sqrt(2.0 * (1.0 - gamma * gamma));
  const double inv_sqrt_pi = 1.0 / std::sqrt(std::numbers::pi);
  // Decreasing in c would be false (it increases); flip the sign.
  return -bisect_decreasing(mix, prevalence, [&](double minus_c, double z) {
    double e = 0.0;
    for (std::size_t j = 0; j < gh.nodes.size(); ++j) {
      e += gh.weights[j] *
           inv_logit(-minus_c + beta * (gamma * z + resid * gh.nodes[j]));
    }
    return e * inv_sqrt_pi;
  });
}

Date random_baseline_date(Rng& rng, const CohortSpec& spec) {
  const int years = spec.baseline_end.year - spec.baseline_start.year + 1;
  const int year = spec.baseline_start.year + static_cast<int>(rng.bounded(years));
  const int month = 1 + static_cast<int>(rng.bounded(12));
  const int day = 1 + static_cast<int>(rng.bounded(28));
  return Date{year, month, day};
}

Date random_outcome_date(Rng& rng, int outcome_year) {
  const int month = 1 + static_cast<int>(rng.bounded(12));
  const int day = 1 + static_cast<int>(rng.bounded(28));
  return Date{outcome_year, month, day};
}

// Concomitant-diagnosis pool for discharge records: recognizable comorbidity
// codes that stay outside every marker's code ranges.
const std::vector<std::string>& comorbidity_codes() {
  static const std::vector<std::string> pool = {
      "410",   // myocardial infarction
      "430",   // subarachnoid haemorrhage
      "496",   // chronic airway obstruction
      "5712",  // alcoholic cirrhosis
      "2500",  // diabetes without complication
      "2504",  // diabetes with renal manifestations
      "582",   // chronic glomerulonephritis
      "5722",  // hepatic coma
      "042",   // HIV disease
      "7140",  // rheumatoid arthritis
      "531",   // gastric ulcer
      "4439",  // peripheral vascular disease
  };
  return pool;
}

// Primary diagnoses for generated discharges; also outside every marker range.
const std::vector<std::string>& innocuous_discharge_codes() {
  static const std::vector<std::string> pool = {"486", "401", "715", "5990"};
  return pool;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (outcome_year < 1900 || outcome_year > 3000) {
    throw DataError("synthetic spec: implausible outcome year");
  }
  if (female_share < 0.0 || female_share > 1.0) {
    throw DataError("synthetic spec: female_share must lie in [0, 1]");
  }
  if (area_count < 1) throw DataError("synthetic spec: area_count must be positive");
  if (age_weights.empty()) throw DataError("synthetic spec: age_weights is empty");
  double total = 0.0;
  for (double w : age_weights) {
    if (w < 0.0 || !std::isfinite(w)) {
      throw DataError("synthetic spec: age weights must be non-negative");
    }
    total += w;
  }
  if (total <= 0.0) throw DataError("synthetic spec: age weights sum to zero");
  if (age_gamma < 0.0 || age_gamma >= 1.0) {
    throw DataError("synthetic spec: age_gamma must lie in [0, 1)");
  }
  std::set<std::string> names;
  for (const SyntheticMarker& m : markers) {
    if (m.name.empty()) throw DataError("synthetic spec: marker with empty name");
    if (!names.insert(m.name).second) {
      throw DataError(fmt::format("synthetic spec: duplicate marker '{}'", m.name));
    }
    if (!(m.prevalence > 0.0) || !(m.prevalence < 1.0)) {
      throw DataError(fmt::format(
          "synthetic spec: marker '{}' needs a prevalence strictly inside (0, 1)",
          m.name));
    }
    if (m.loading < 0.0 || !std::isfinite(m.loading)) {
      throw DataError(fmt::format("synthetic spec: marker '{}' has a bad loading",
                                  m.name));
    }
    if (m.templates.empty()) {
      throw DataError(fmt::format("synthetic spec: marker '{}' has no record template",
                                  m.name));
    }
    for (const RecordTemplate& t : m.templates) {
      for (const CodeEntry& c : t.codes) {
        if (c.position < 0 || c.position >= max_diagnoses(t.flow)) {
          throw DataError(fmt::format(
              "synthetic spec: marker '{}' template holds a code at position {} "
              "but flow {} has {} slots",
              m.name, c.position, to_string(t.flow), max_diagnoses(t.flow)));
        }
      }
    }
  }
  if (!(hosp_mean > 0.0)) {
    throw DataError("synthetic spec: hosp_mean must be positive");
  }
  if (dementia_share < 0.0 || dementia_share > 1.0) {
    throw DataError("synthetic spec: dementia_share must lie in [0, 1]");
  }
  if (outpatient_rate < 0.0) {
    throw DataError("synthetic spec: outpatient_rate must be non-negative");
  }
  std::set<std::string> outcome_names;
  for (const SyntheticOutcome& o : outcomes) {
    outcome_from_name(o.name);
    if (!outcome_names.insert(o.name).second) {
      throw DataError(fmt::format("synthetic spec: duplicate outcome '{}'", o.name));
    }
    if (!(o.prevalence > 0.0) || !(o.prevalence < 1.0)) {
      throw DataError(fmt::format(
          "synthetic spec: outcome '{}' needs a prevalence strictly inside (0, 1)",
          o.name));
    }
    if (!std::isfinite(o.beta)) {
      throw DataError(fmt::format("synthetic spec: outcome '{}' has a bad slope",
                                  o.name));
    }
  }
}

Cohort generate_synthetic_cohort(const SyntheticSpec& spec,
                                 std::vector<double>* latent_out) {
  spec.validate();

  Cohort cohort;
  cohort.spec = CohortSpec::for_outcome_year(spec.outcome_year);
  if (latent_out) latent_out->clear();

  const AgeMixture mix = age_mixture(spec);
  const double gamma = spec.age_gamma;
  const double resid_sd = std::sqrt(1.0 - gamma * gamma);

  // Calibrated thresholds and intercepts (all deterministic).
  std::vector<double> marker_tau;
  marker_tau.reserve(spec.markers.size());
  for (const SyntheticMarker& m : spec.markers) {
    marker_tau.push_back(marker_threshold(mix, gamma, m.loading, m.prevalence));
  }
  double mgf = 0.0;  // E[exp(hosp_loading * L)] over the age mixture
  for (std::size_t a = 0; a < mix.weights.size(); ++a) {
    mgf += mix.weights[a] *
           std::exp(spec.hosp_loading * gamma * mix.z[a] +
                    0.5 * spec.hosp_loading * spec.hosp_loading * resid_sd * resid_sd);
  }
  const double hosp_intercept = std::log(spec.hosp_mean) - std::log(mgf);

  const GaussHermiteRule gh = gauss_hermite(64);
  std::vector<double> outcome_c(static_cast<std::size_t>(kOutcomeCount), 0.0);
  std::vector<double> outcome_beta(static_cast<std::size_t>(kOutcomeCount), 0.0);
  std::vector<bool> outcome_active(static_cast<std::size_t>(kOutcomeCount), false);
  for (const SyntheticOutcome& o : spec.outcomes) {
    const auto k = static_cast<std::size_t>(outcome_from_name(o.name));
    outcome_c[k] = outcome_intercept(mix, gh, gamma, o.beta, o.prevalence);
    outcome_beta[k] = o.beta;
    outcome_active[k] = true;
  }

  int dementia_host_index = -1;
  for (std::size_t m = 0; m < spec.markers.size(); ++m) {
    if (spec.markers[m].name == spec.dementia_host) {
      dementia_host_index = static_cast<int>(m);
    }
  }

  int disability_index = -1;
  for (std::size_t m = 0; m < spec.markers.size(); ++m) {
    if (spec.markers[m].name == "disability") disability_index = static_cast<int>(m);
  }

  const int id_width =
      spec.n_subjects > 0
          ? static_cast<int>(std::to_string(spec.n_subjects - 1).size())
          : 1;

  cohort.subjects.reserve(spec.n_subjects);
  for (std::size_t i = 0; i < spec.n_subjects; ++i) {
    Rng rng(derive_seed(spec.seed, i, 0xC0));
    Subject s;
    s.id = fmt::format("sub{:0{}}", i, id_width);
    s.sex = rng.bernoulli(spec.female_share) ? Sex::Female : Sex::Male;

    // Age from the configured pyramid.
    std::size_t age_index = mix.weights.size() - 1;
    {
      double u = rng.uniform();
      for (std::size_t k = 0; k < mix.weights.size(); ++k) {
        if (u < mix.weights[k]) {
          age_index = k;
          break;
        }
        u -= mix.weights[k];
      }
    }
    s.age_years = spec.age_start + static_cast<int>(age_index);
    s.area_id = static_cast<std::int32_t>(rng.bounded(spec.area_count)) + 1;

    const double latent = gamma * mix.z[age_index] + resid_sd * rng.normal();
    if (latent_out) latent_out->push_back(latent);

    // Dichotomous markers.
    std::vector<bool> fired(spec.markers.size(), false);
    for (std::size_t m = 0; m < spec.markers.size(); ++m) {
      const SyntheticMarker& marker = spec.markers[m];
      const double score = marker.loading * latent + rng.normal();
      if (score <= marker_tau[m]) continue;
      fired[m] = true;
      const RecordTemplate& tpl =
          marker.templates[rng.bounded(marker.templates.size())];
      FlowRecord r;
      r.flow = tpl.flow;
      r.codes = tpl.codes;
      r.date = random_baseline_date(rng, cohort.spec);
      s.baseline_records.push_back(std::move(r));
    }

    // Baseline dementia subtype of the host marker.
    bool baseline_dementia = false;
    {
      const bool coin = rng.bernoulli(spec.dementia_share);
      if (dementia_host_index >= 0 &&
          fired[static_cast<std::size_t>(dementia_host_index)] && coin) {
        baseline_dementia = true;
        FlowRecord r;
        r.flow = FlowKind::Psychiatry;
        r.codes = {{CodeSystem::Icd10, "F00", 0}};
        r.date = random_baseline_date(rng, cohort.spec);
        s.baseline_records.push_back(std::move(r));
      }
    }

    // Baseline hospitalisations: Poisson count of discharge records carrying
    // innocuous primary codes and occasional comorbidity codes.
    auto make_discharge = [&](Date date) {
      FlowRecord r;
      r.flow = FlowKind::HospitalDischarge;
      r.date = date;
      const auto& primaries = innocuous_discharge_codes();
      r.codes.push_back(
          {CodeSystem::Icd9Cm, primaries[rng.bounded(primaries.size())], 0});
      r.attributes.push_back(
          {"duration", std::to_string(1 + rng.bounded(20))});
      const double p_comorb =
          inv_logit(spec.comorbidity_base + spec.comorbidity_slope * latent);
      const auto& pool = comorbidity_codes();
      int position = 1;
      for (int c = 0; c < 2; ++c) {
        if (rng.bernoulli(p_comorb)) {
          r.codes.push_back(
              {CodeSystem::Icd9Cm, pool[rng.bounded(pool.size())], position++});
        }
      }
      return r;
    };
    const double hosp_rate =
        std::exp(hosp_intercept + spec.hosp_loading * latent);
    const int hosp_count = rng.poisson(std::min(hosp_rate, 100.0));
    for (int h = 0; h < hosp_count; ++h) {
      s.baseline_records.push_back(
          make_discharge(random_baseline_date(rng, cohort.spec)));
    }

    // Outpatient noise (matches nothing).
    const int visits = rng.poisson(spec.outpatient_rate);
    for (int v = 0; v < visits; ++v) {
      FlowRecord r;
      r.flow = FlowKind::Outpatient;
      r.date = random_baseline_date(rng, cohort.spec);
      r.codes = {{CodeSystem::ServiceCode, "8952", 0}};
      s.baseline_records.push_back(std::move(r));
    }

    // Outcomes in canonical order; the draws happen for every active outcome
    // so that record materialization never shifts the stream.
    const bool baseline_disability =
        disability_index >= 0 && fired[static_cast<std::size_t>(disability_index)];
    for (int k = 0; k < kOutcomeCount; ++k) {
      const double u = rng.uniform();
      if (!outcome_active[static_cast<std::size_t>(k)]) continue;
      const bool event =
          u < inv_logit(outcome_c[static_cast<std::size_t>(k)] +
                        outcome_beta[static_cast<std::size_t>(k)] * latent);
      if (!event) continue;
      switch (static_cast<Outcome>(k)) {
        case Outcome::Death:
          s.death_date = random_outcome_date(rng, spec.outcome_year);
          break;
        case Outcome::ErRedCode: {
          FlowRecord r;
          r.flow = FlowKind::ERAdmission;
          r.date = random_outcome_date(rng, spec.outcome_year);
          r.codes = {{CodeSystem::Icd9Cm, "460", 0}};
          r.attributes.push_back({"priority", "red"});
          s.outcome_records.push_back(std::move(r));
          break;
        }
        case Outcome::Hospitalisation:
          s.outcome_records.push_back(
              make_discharge(random_outcome_date(rng, spec.outcome_year)));
          break;
        case Outcome::DisabilityOnset: {
          if (baseline_disability) break;  // prevalent cases cannot onset
          FlowRecord r;
          r.flow = FlowKind::Exemption;
          r.date = random_outcome_date(rng, spec.outcome_year);
          r.codes = {{CodeSystem::ExemptionCode, "3C1", 0}};
          s.outcome_records.push_back(std::move(r));
          break;
        }
        case Outcome::DementiaOnset: {
          if (baseline_dementia) break;
          FlowRecord r;
          r.flow = FlowKind::Psychiatry;
          r.date = random_outcome_date(rng, spec.outcome_year);
          r.codes = {{CodeSystem::Icd10, "F00", 0}};
          s.outcome_records.push_back(std::move(r));
          break;
        }
        case Outcome::FemurFracture: {
          FlowRecord r;
          r.flow = FlowKind::HospitalDischarge;
          r.date = random_outcome_date(rng, spec.outcome_year);
          r.codes = {
              {CodeSystem::Icd9Cm, rng.bernoulli(0.5) ? "820" : "821", 0}};
          r.attributes.push_back({"duration", std::to_string(1 + rng.bounded(20))});
          s.outcome_records.push_back(std::move(r));
          break;
        }
      }
    }

    // Keep records grouped by flow (in flow-file order) so that writing the
    // cohort out as CSV flows and reading it back reproduces it exactly.
    const auto by_flow = [](const FlowRecord& a, const FlowRecord& b) {
      return static_cast<int>(a.flow) < static_cast<int>(b.flow);
    };
    std::stable_sort(s.baseline_records.begin(), s.baseline_records.end(), by_flow);
    std::stable_sort(s.outcome_records.begin(), s.outcome_records.end(), by_flow);

    cohort.subjects.push_back(std::move(s));
  }

  link_outcomes(cohort, default_outcome_config());
  return cohort;
}

// ---------------------------------------------------------------------------
// Default model and JSON form
// ---------------------------------------------------------------------------

namespace {

RecordTemplate exemption_template(const std::string& code) {
  return {FlowKind::Exemption, {{CodeSystem::ExemptionCode, code, 0}}};
}

RecordTemplate er_template(const std::string& icd9) {
  return {FlowKind::ERAdmission, {{CodeSystem::Icd9Cm, icd9, 0}}};
}

RecordTemplate pharma_template(const std::string& atc) {
  return {FlowKind::Pharmaceutical, {{CodeSystem::Atc, atc, 0}}};
}

}  // namespace

SyntheticSpec default_synthetic_spec() {
  SyntheticSpec spec;
  spec.age_weights.clear();
  for (int k = 0; k < 35; ++k) {  // ages 65..99, thinning with age
    spec.age_weights.push_back(std::exp(-0.075 * k));
  }

  spec.markers = {
      {"mental_disorders",
       0.22,
       0.8,
       {exemption_template("005"), er_template("296"), pharma_template("N05BA01")}},
      {"neurological_diseases",
       0.12,
       0.9,
       {exemption_template("011"), er_template("340"), pharma_template("N03AB02")}},
      {"cancer",
       0.14,
       0.5,
       {exemption_template("048"), er_template("174"), pharma_template("L01XA02")}},
      {"disability",
       0.18,
       1.1,
       {exemption_template("3C1"), RecordTemplate{FlowKind::HomeCare, {}}}},
      {"heart_failure",
       0.10,
       1.0,
       {exemption_template("021"), er_template("4280")}},
      {"kidney_failure",
       0.07,
       0.9,
       {exemption_template("023"), er_template("585")}},
  };

  spec.outcomes = {
      {"death", 0.053, 1.2},
      {"er_red_code", 0.042, 0.9},
      {"hospitalisation", 0.17, 0.8},
      {"disability_onset", 0.045, 1.3},
      {"dementia_onset", 0.026, 1.1},
      {"femur_fracture", 0.012, 0.9},
  };
  return spec;
}

namespace {

json template_to_json(const RecordTemplate& t) {
  json j;
  j["flow"] = to_string(t.flow);
  json codes = json::array();
  for (const CodeEntry& c : t.codes) {
    codes.push_back({{"system", to_string(c.system)},
                     {"code", c.code},
                     {"position", c.position}});
  }
  j["codes"] = std::move(codes);
  return j;
}

RecordTemplate template_from_json(const json& j, const std::string& where) {
  RecordTemplate t;
  if (!j.is_object() || !j.contains("flow")) {
    throw DataError(fmt::format("{}: record template needs a 'flow'", where));
  }
  t.flow = flow_kind_from_string(j.at("flow").get<std::string>());
  for (const json& c : j.value("codes", json::array())) {
    CodeEntry e;
    e.system = code_system_from_string(c.at("system").get<std::string>());
    e.code = c.at("code").get<std::string>();
    e.position = c.value("position", 0);
    t.codes.push_back(std::move(e));
  }
  return t;
}

}  // namespace

std::string synthetic_spec_to_json(const SyntheticSpec& spec) {
  json root;
  root["n_subjects"] = spec.n_subjects;
  root["seed"] = spec.seed;
  root["outcome_year"] = spec.outcome_year;
  root["female_share"] = spec.female_share;
  root["area_count"] = spec.area_count;
  root["age_start"] = spec.age_start;
  root["age_weights"] = spec.age_weights;
  root["age_gamma"] = spec.age_gamma;
  json markers = json::array();
  for (const SyntheticMarker& m : spec.markers) {
    json templates = json::array();
    for (const RecordTemplate& t : m.templates) templates.push_back(template_to_json(t));
    markers.push_back({{"name", m.name},
                       {"prevalence", m.prevalence},
                       {"loading", m.loading},
                       {"templates", std::move(templates)}});
  }
  root["markers"] = std::move(markers);
  root["hosp_mean"] = spec.hosp_mean;
  root["hosp_loading"] = spec.hosp_loading;
  root["comorbidity_base"] = spec.comorbidity_base;
  root["comorbidity_slope"] = spec.comorbidity_slope;
  root["dementia_share"] = spec.dementia_share;
  root["dementia_host"] = spec.dementia_host;
  root["outpatient_rate"] = spec.outpatient_rate;
  json outcomes = json::array();
  for (const SyntheticOutcome& o : spec.outcomes) {
    outcomes.push_back(
        {{"name", o.name}, {"prevalence", o.prevalence}, {"beta", o.beta}});
  }
  root["outcomes"] = std::move(outcomes);
  return root.dump(2) + "\n";
}

SyntheticSpec parse_synthetic_spec(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(fmt::format("synthetic spec is not valid JSON: {}", e.what()));
  }
  if (!root.is_object()) throw DataError("synthetic spec must be a JSON object");
  SyntheticSpec spec = default_synthetic_spec();
  spec.n_subjects = root.value("n_subjects", spec.n_subjects);
  spec.seed = root.value("seed", spec.seed);
  spec.outcome_year = root.value("outcome_year", spec.outcome_year);
  spec.female_share = root.value("female_share", spec.female_share);
  spec.area_count = root.value("area_count", spec.area_count);
  spec.age_start = root.value("age_start", spec.age_start);
  if (root.contains("age_weights")) {
    spec.age_weights = root.at("age_weights").get<std::vector<double>>();
  }
  spec.age_gamma = root.value("age_gamma", spec.age_gamma);
  if (root.contains("markers")) {
    spec.markers.clear();
    for (const json& m : root.at("markers")) {
      SyntheticMarker marker;
      marker.name = m.value("name", std::string());
      marker.prevalence = m.value("prevalence", 0.1);
      marker.loading = m.value("loading", 1.0);
      const std::string where = fmt::format("synthetic marker '{}'", marker.name);
      for (const json& t : m.value("templates", json::array())) {
        marker.templates.push_back(template_from_json(t, where));
      }
      spec.markers.push_back(std::move(marker));
    }
  }
  spec.hosp_mean = root.value("hosp_mean", spec.hosp_mean);
  spec.hosp_loading = root.value("hosp_loading", spec.hosp_loading);
  spec.comorbidity_base = root.value("comorbidity_base", spec.comorbidity_base);
  spec.comorbidity_slope = root.value("comorbidity_slope", spec.comorbidity_slope);
  spec.dementia_share = root.value("dementia_share", spec.dementia_share);
  spec.dementia_host = root.value("dementia_host", spec.dementia_host);
  spec.outpatient_rate = root.value("outpatient_rate", spec.outpatient_rate);
  if (root.contains("outcomes")) {
    spec.outcomes.clear();
    for (const json& o : root.at("outcomes")) {
      SyntheticOutcome outcome;
      outcome.name = o.value("name", std::string());
      outcome.prevalence = o.value("prevalence", 0.05);
      outcome.beta = o.value("beta", 1.0);
      spec.outcomes.push_back(std::move(outcome));
    }
  }
  spec.validate();
  return spec;
}

SyntheticSpec load_synthetic_spec(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open synthetic spec '{}'", path));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_synthetic_spec(buffer.str());
}

}  // namespace frailty
