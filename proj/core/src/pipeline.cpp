#include "frailty/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "frailty/charlson.hpp"
#include "frailty/csv.hpp"
#include "frailty/deprivation.hpp"
#include "frailty/errors.hpp"
#include "frailty/rng.hpp"
#include "frailty/robustness.hpp"
#include "frailty/selection.hpp"
#include "frailty/stability.hpp"
#include "frailty/synthetic.hpp"

namespace frailty {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Seed stream tags: every stage draws its randomness from an independent
// stream derived from the master seed, so stages can be rerun in isolation.
constexpr std::uint64_t kSeedDiscretize = 2;
constexpr std::uint64_t kSeedScreen = 3;
constexpr std::uint64_t kSeedSelect = 4;
constexpr std::uint64_t kSeedScore = 5;
constexpr std::uint64_t kSeedRobustness = 6;
constexpr std::uint64_t kSeedSecondCohort = 7;

constexpr int kArtifactVersion = 1;

// --- small utilities --------------------------------------------------------

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot read '{}'", path));
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const std::string& path, const std::string& text) {
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path));
  out << text;
  if (!out) throw DataError(fmt::format("write failed for '{}'", path));
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string content_hash(const std::string& text) {
  return fmt::format("{:016x}", fnv1a64(text));
}

std::string file_hash(const std::string& path) { return content_hash(slurp(path)); }

std::string num(double v) { return fmt::format("{}", v); }

Outcome outcome_from_label(const std::string& name) {
  for (int k = 0; k < kOutcomeCount; ++k) {
    const auto o = static_cast<Outcome>(k);
    if (name == to_string(o)) return o;
  }
  throw DataError(fmt::format("unknown outcome '{}'", name));
}

// --- config JSON ------------------------------------------------------------

void check_keys(const json& obj, const char* where,
                std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* k : allowed) {
      if (item.key() == k) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw DataError(fmt::format("pipeline config: unknown key '{}' in {}", item.key(), where));
    }
  }
}

const json* field(const json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return nullptr;
  return &*it;
}

double get_double(const json& obj, const char* key, double fallback, const char* where) {
  const json* v = field(obj, key);
  if (!v) return fallback;
  if (!v->is_number()) {
    throw DataError(fmt::format("pipeline config: {}.{} must be a number", where, key));
  }
  return v->get<double>();
}

std::int64_t get_int(const json& obj, const char* key, std::int64_t fallback,
                     const char* where) {
  const json* v = field(obj, key);
  if (!v) return fallback;
  if (!v->is_number_integer()) {
    throw DataError(fmt::format("pipeline config: {}.{} must be an integer", where, key));
  }
  return v->get<std::int64_t>();
}

bool get_bool(const json& obj, const char* key, bool fallback, const char* where) {
  const json* v = field(obj, key);
  if (!v) return fallback;
  if (!v->is_boolean()) {
    throw DataError(fmt::format("pipeline config: {}.{} must be a boolean", where, key));
  }
  return v->get<bool>();
}

std::string get_string(const json& obj, const char* key, std::string fallback,
                       const char* where) {
  const json* v = field(obj, key);
  if (!v) return fallback;
  if (!v->is_string()) {
    throw DataError(fmt::format("pipeline config: {}.{} must be a string", where, key));
  }
  return v->get<std::string>();
}

std::vector<std::string> get_string_list(const json& obj, const char* key,
                                         std::vector<std::string> fallback,
                                         const char* where) {
  const json* v = field(obj, key);
  if (!v) return fallback;
  if (!v->is_array()) {
    throw DataError(fmt::format("pipeline config: {}.{} must be an array of strings", where, key));
  }
  std::vector<std::string> out;
  for (const json& item : *v) {
    if (!item.is_string()) {
      throw DataError(
          fmt::format("pipeline config: {}.{} must be an array of strings", where, key));
    }
    out.push_back(item.get<std::string>());
  }
  return out;
}

RankOptions parse_rank(const json& obj, RankOptions base, const char* where) {
  base.method = rank_method_from_string(
      get_string(obj, "method", to_string(base.method), where));
  base.samples = static_cast<std::uint64_t>(
      get_int(obj, "samples", static_cast<std::int64_t>(base.samples), where));
  base.exact_max_subjects = static_cast<int>(
      get_int(obj, "exact_max_subjects", base.exact_max_subjects, where));
  return base;
}

json rank_to_json(const RankOptions& rank) {
  return json{{"method", to_string(rank.method)},
              {"samples", rank.samples},
              {"exact_max_subjects", rank.exact_max_subjects}};
}

const char* to_string(ProtectiveRule rule) {
  return rule == ProtectiveRule::PointEstimate ? "point_estimate" : "ci_excludes_one";
}

ProtectiveRule protective_rule_from_string(const std::string& name) {
  if (name == "point_estimate") return ProtectiveRule::PointEstimate;
  if (name == "ci_excludes_one") return ProtectiveRule::CiExcludesOne;
  throw DataError(fmt::format("unknown protective rule '{}'", name));
}

const std::set<std::string>& known_scenarios() {
  static const std::set<std::string> names = {"second_cohort", "fold_exclusion",
                                              "population_perturbation"};
  return names;
}

}  // namespace

const char* to_string(Stage stage) {
  switch (stage) {
    case Stage::Cohort: return "cohort";
    case Stage::Markers: return "markers";
    case Stage::Screen: return "screen";
    case Stage::Select: return "select";
    case Stage::Score: return "score";
    case Stage::Robustness: return "robustness";
    case Stage::Analytics: return "analytics";
  }
  return "?";
}

Stage stage_from_string(const std::string& name) {
  if (name == "cohort" || name == "synth" || name == "ingest") return Stage::Cohort;
  if (name == "markers") return Stage::Markers;
  if (name == "screen") return Stage::Screen;
  if (name == "select") return Stage::Select;
  if (name == "score") return Stage::Score;
  if (name == "robustness") return Stage::Robustness;
  if (name == "analytics") return Stage::Analytics;
  throw DataError(fmt::format(
      "unknown stage '{}'; valid stages: synth, ingest, markers, screen, select, "
      "score, robustness, analytics",
      name));
}

PipelineConfig parse_pipeline_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw DataError(fmt::format("pipeline config is not valid JSON: {}", e.what()));
  }
  if (!doc.is_object()) throw DataError("pipeline config must be a JSON object");
  check_keys(doc, "the top level",
             {"seed", "output_dir", "threads", "cohort", "markers", "screen", "select",
              "score", "robustness", "analytics"});
  if (!field(doc, "seed")) {
    throw DataError("pipeline config: 'seed' is required");
  }

  PipelineConfig c;
  c.seed = static_cast<std::uint64_t>(get_int(doc, "seed", 0, "the top level"));
  c.output_dir = get_string(doc, "output_dir", c.output_dir, "the top level");
  c.threads = static_cast<int>(get_int(doc, "threads", c.threads, "the top level"));

  if (const json* o = field(doc, "cohort")) {
    check_keys(*o, "cohort",
               {"source", "synthetic_spec", "n_subjects", "flows", "outcome_year",
                "min_age", "row_policy", "outcome_config"});
    const std::string source = get_string(*o, "source", "synthetic", "cohort");
    if (source == "synthetic") {
      c.cohort.source = CohortSource::Synthetic;
    } else if (source == "flows") {
      c.cohort.source = CohortSource::Flows;
    } else {
      throw DataError(fmt::format(
          "pipeline config: cohort.source must be 'synthetic' or 'flows', got '{}'", source));
    }
    c.cohort.synthetic_spec =
        get_string(*o, "synthetic_spec", c.cohort.synthetic_spec, "cohort");
    if (field(*o, "n_subjects")) {
      c.cohort.n_subjects =
          static_cast<std::size_t>(get_int(*o, "n_subjects", 0, "cohort"));
    }
    if (const json* f = field(*o, "flows")) {
      check_keys(*f, "cohort.flows",
                 {"registry", "discharge", "er", "psychiatry", "home_care", "exemption",
                  "pharma", "outpatient"});
      c.cohort.flows.registry = get_string(*f, "registry", "", "cohort.flows");
      c.cohort.flows.discharge = get_string(*f, "discharge", "", "cohort.flows");
      c.cohort.flows.er = get_string(*f, "er", "", "cohort.flows");
      c.cohort.flows.psychiatry = get_string(*f, "psychiatry", "", "cohort.flows");
      c.cohort.flows.home_care = get_string(*f, "home_care", "", "cohort.flows");
      c.cohort.flows.exemption = get_string(*f, "exemption", "", "cohort.flows");
      c.cohort.flows.pharma = get_string(*f, "pharma", "", "cohort.flows");
      c.cohort.flows.outpatient = get_string(*f, "outpatient", "", "cohort.flows");
    }
    c.cohort.outcome_year =
        static_cast<int>(get_int(*o, "outcome_year", c.cohort.outcome_year, "cohort"));
    c.cohort.min_age = static_cast<int>(get_int(*o, "min_age", c.cohort.min_age, "cohort"));
    const std::string policy = get_string(
        *o, "row_policy", c.cohort.row_policy == RowPolicy::Abort ? "abort" : "skip",
        "cohort");
    if (policy == "skip") {
      c.cohort.row_policy = RowPolicy::SkipAndLog;
    } else if (policy == "abort") {
      c.cohort.row_policy = RowPolicy::Abort;
    } else {
      throw DataError(fmt::format(
          "pipeline config: cohort.row_policy must be 'skip' or 'abort', got '{}'", policy));
    }
    c.cohort.outcome_config =
        get_string(*o, "outcome_config", c.cohort.outcome_config, "cohort");
  }

  if (const json* o = field(doc, "markers")) {
    check_keys(*o, "markers",
               {"config", "discretize", "discretize_subsamples", "discretize_max_cuts"});
    c.markers.config = get_string(*o, "config", c.markers.config, "markers");
    c.markers.discretize = get_bool(*o, "discretize", c.markers.discretize, "markers");
    c.markers.discretize_subsamples = static_cast<int>(
        get_int(*o, "discretize_subsamples", c.markers.discretize_subsamples, "markers"));
    c.markers.discretize_max_cuts = static_cast<std::size_t>(get_int(
        *o, "discretize_max_cuts",
        static_cast<std::int64_t>(c.markers.discretize_max_cuts), "markers"));
  }

  if (const json* o = field(doc, "screen")) {
    check_keys(*o, "screen",
               {"prevalence_threshold", "protective_rule", "min_protective", "n_models",
                "vote_share", "min_outcomes", "min_cases_warning"});
    c.screen.prevalence_threshold =
        get_double(*o, "prevalence_threshold", c.screen.prevalence_threshold, "screen");
    c.screen.protective_rule = protective_rule_from_string(
        get_string(*o, "protective_rule", to_string(c.screen.protective_rule), "screen"));
    c.screen.min_protective =
        static_cast<int>(get_int(*o, "min_protective", c.screen.min_protective, "screen"));
    c.screen.n_models = static_cast<int>(get_int(*o, "n_models", c.screen.n_models, "screen"));
    c.screen.vote_share = get_double(*o, "vote_share", c.screen.vote_share, "screen");
    c.screen.min_outcomes =
        static_cast<int>(get_int(*o, "min_outcomes", c.screen.min_outcomes, "screen"));
    c.screen.min_cases_warning = static_cast<int>(
        get_int(*o, "min_cases_warning", c.screen.min_cases_warning, "screen"));
  }

  if (const json* o = field(doc, "select")) {
    check_keys(*o, "select",
               {"method", "samples", "exact_max_subjects", "min_improvement", "max_markers"});
    c.select.rank = parse_rank(*o, c.select.rank, "select");
    c.select.min_improvement =
        get_double(*o, "min_improvement", c.select.min_improvement, "select");
    c.select.max_markers = static_cast<std::size_t>(get_int(
        *o, "max_markers", static_cast<std::int64_t>(c.select.max_markers), "select"));
  }

  if (const json* o = field(doc, "score")) {
    check_keys(*o, "score", {"method", "samples", "exact_max_subjects"});
    c.score.rank = parse_rank(*o, c.score.rank, "score");
  }

  if (const json* o = field(doc, "robustness")) {
    check_keys(*o, "robustness",
               {"scenarios", "folds", "repetitions", "keep_share", "second_synthetic_spec"});
    c.robustness.scenarios =
        get_string_list(*o, "scenarios", c.robustness.scenarios, "robustness");
    c.robustness.folds =
        static_cast<int>(get_int(*o, "folds", c.robustness.folds, "robustness"));
    c.robustness.repetitions =
        static_cast<int>(get_int(*o, "repetitions", c.robustness.repetitions, "robustness"));
    c.robustness.keep_share =
        get_double(*o, "keep_share", c.robustness.keep_share, "robustness");
    c.robustness.second_synthetic_spec = get_string(
        *o, "second_synthetic_spec", c.robustness.second_synthetic_spec, "robustness");
  }

  if (const json* o = field(doc, "analytics")) {
    check_keys(*o, "analytics",
               {"reports", "deyo_map", "deprivation_table", "sex_stratified",
                "overlap_baseline_disability_only"});
    c.analytics.reports = get_string_list(*o, "reports", c.analytics.reports, "analytics");
    c.analytics.deyo_map = get_string(*o, "deyo_map", c.analytics.deyo_map, "analytics");
    c.analytics.deprivation_table =
        get_string(*o, "deprivation_table", c.analytics.deprivation_table, "analytics");
    c.analytics.sex_stratified =
        get_bool(*o, "sex_stratified", c.analytics.sex_stratified, "analytics");
    c.analytics.overlap_baseline_disability_only =
        get_bool(*o, "overlap_baseline_disability_only",
                 c.analytics.overlap_baseline_disability_only, "analytics");
  }

  return c;
}

PipelineConfig load_pipeline_config(const std::string& path) {
  return parse_pipeline_config(slurp(path));
}

std::string pipeline_config_to_json(const PipelineConfig& c) {
  json doc;
  doc["seed"] = c.seed;
  doc["output_dir"] = c.output_dir;
  doc["threads"] = c.threads;

  json cohort;
  cohort["source"] = c.cohort.source == CohortSource::Synthetic ? "synthetic" : "flows";
  cohort["synthetic_spec"] = c.cohort.synthetic_spec;
  if (c.cohort.n_subjects) cohort["n_subjects"] = *c.cohort.n_subjects;
  cohort["flows"] = json{{"registry", c.cohort.flows.registry},
                         {"discharge", c.cohort.flows.discharge},
                         {"er", c.cohort.flows.er},
                         {"psychiatry", c.cohort.flows.psychiatry},
                         {"home_care", c.cohort.flows.home_care},
                         {"exemption", c.cohort.flows.exemption},
                         {"pharma", c.cohort.flows.pharma},
                         {"outpatient", c.cohort.flows.outpatient}};
  cohort["outcome_year"] = c.cohort.outcome_year;
  cohort["min_age"] = c.cohort.min_age;
  cohort["row_policy"] = c.cohort.row_policy == RowPolicy::Abort ? "abort" : "skip";
  cohort["outcome_config"] = c.cohort.outcome_config;
  doc["cohort"] = cohort;

  doc["markers"] = json{{"config", c.markers.config},
                        {"discretize", c.markers.discretize},
                        {"discretize_subsamples", c.markers.discretize_subsamples},
                        {"discretize_max_cuts", c.markers.discretize_max_cuts}};
  doc["screen"] = json{{"prevalence_threshold", c.screen.prevalence_threshold},
                       {"protective_rule", to_string(c.screen.protective_rule)},
                       {"min_protective", c.screen.min_protective},
                       {"n_models", c.screen.n_models},
                       {"vote_share", c.screen.vote_share},
                       {"min_outcomes", c.screen.min_outcomes},
                       {"min_cases_warning", c.screen.min_cases_warning}};
  json select = rank_to_json(c.select.rank);
  select["min_improvement"] = c.select.min_improvement;
  select["max_markers"] = c.select.max_markers;
  doc["select"] = select;
  doc["score"] = rank_to_json(c.score.rank);
  doc["robustness"] = json{{"scenarios", c.robustness.scenarios},
                           {"folds", c.robustness.folds},
                           {"repetitions", c.robustness.repetitions},
                           {"keep_share", c.robustness.keep_share},
                           {"second_synthetic_spec", c.robustness.second_synthetic_spec}};
  doc["analytics"] = json{
      {"reports", c.analytics.reports},
      {"deyo_map", c.analytics.deyo_map},
      {"deprivation_table", c.analytics.deprivation_table},
      {"sex_stratified", c.analytics.sex_stratified},
      {"overlap_baseline_disability_only", c.analytics.overlap_baseline_disability_only}};
  return doc.dump(2) + "\n";
}

void PipelineConfig::validate() const {
  auto require_file = [](const std::string& path, const char* what) {
    if (!path.empty() && !fs::exists(path)) {
      throw DataError(fmt::format("pipeline config: {} '{}' does not exist", what, path));
    }
  };

  if (cohort.source == CohortSource::Synthetic) {
    require_file(cohort.synthetic_spec, "synthetic spec");
  } else {
    if (cohort.flows.registry.empty()) {
      throw DataError("pipeline config: flow ingestion needs cohort.flows.registry");
    }
    for (const std::string* p :
         {&cohort.flows.registry, &cohort.flows.discharge, &cohort.flows.er,
          &cohort.flows.psychiatry, &cohort.flows.home_care, &cohort.flows.exemption,
          &cohort.flows.pharma, &cohort.flows.outpatient}) {
      require_file(*p, "flow file");
    }
    if (cohort.outcome_year < 1900 || cohort.outcome_year > 2100) {
      throw DataError("pipeline config: cohort.outcome_year out of range");
    }
    if (cohort.min_age < 0) throw DataError("pipeline config: cohort.min_age must be >= 0");
  }
  require_file(cohort.outcome_config, "outcome config");
  require_file(markers.config, "marker catalog");
  if (markers.discretize_subsamples < 1) {
    throw DataError("pipeline config: markers.discretize_subsamples must be >= 1");
  }
  if (markers.discretize_max_cuts < 1) {
    throw DataError("pipeline config: markers.discretize_max_cuts must be >= 1");
  }
  if (screen.prevalence_threshold < 0.0 || screen.prevalence_threshold > 1.0) {
    throw DataError("pipeline config: screen.prevalence_threshold must be in [0, 1]");
  }
  if (screen.min_protective < 1) {
    throw DataError("pipeline config: screen.min_protective must be >= 1");
  }
  if (screen.n_models < 1) throw DataError("pipeline config: screen.n_models must be >= 1");
  if (screen.vote_share <= 0.0 || screen.vote_share > 1.0) {
    throw DataError("pipeline config: screen.vote_share must be in (0, 1]");
  }
  if (screen.min_outcomes < 1) {
    throw DataError("pipeline config: screen.min_outcomes must be >= 1");
  }
  for (const RankOptions* r : {&select.rank, &score.rank}) {
    if (r->method == RankMethod::MonteCarlo && r->samples == 0) {
      throw DataError("pipeline config: montecarlo ranking needs samples >= 1");
    }
    if (r->exact_max_subjects < 1) {
      throw DataError("pipeline config: exact_max_subjects must be >= 1");
    }
  }
  if (select.min_improvement < 0.0) {
    throw DataError("pipeline config: select.min_improvement must be >= 0");
  }
  for (const std::string& s : robustness.scenarios) {
    if (known_scenarios().count(s) == 0) {
      throw DataError(fmt::format(
          "pipeline config: unknown robustness scenario '{}'; valid: second_cohort, "
          "fold_exclusion, population_perturbation",
          s));
    }
  }
  if (robustness.folds < 2) throw DataError("pipeline config: robustness.folds must be >= 2");
  if (robustness.repetitions < 1) {
    throw DataError("pipeline config: robustness.repetitions must be >= 1");
  }
  if (robustness.keep_share <= 0.0 || robustness.keep_share > 1.0) {
    throw DataError("pipeline config: robustness.keep_share must be in (0, 1]");
  }
  require_file(robustness.second_synthetic_spec, "second synthetic spec");
  for (const std::string& id : analytics.reports) {
    if (id != "all" && !is_report_id(id)) {
      throw DataError(fmt::format("pipeline config: unknown report id '{}'", id));
    }
  }
  require_file(analytics.deyo_map, "comorbidity weight table");
  require_file(analytics.deprivation_table, "deprivation factor table");
}

std::string resolve_output_dir(const PipelineConfig& config) {
  if (!config.output_dir.empty()) return config.output_dir;
  if (const char* env = std::getenv("FRAILTY_OUT_DIR"); env && *env) return env;
  return "frailty_out";
}

std::vector<Stage> default_stages() {
  return {Stage::Cohort, Stage::Markers, Stage::Screen,
          Stage::Select, Stage::Score,   Stage::Analytics};
}

namespace {

// --- effective (resolved) inputs -------------------------------------------

SyntheticSpec effective_synth_spec(const PipelineConfig& c) {
  SyntheticSpec spec = c.cohort.synthetic_spec.empty()
                           ? default_synthetic_spec()
                           : load_synthetic_spec(c.cohort.synthetic_spec);
  spec.seed = c.seed;
  if (c.cohort.n_subjects) spec.n_subjects = *c.cohort.n_subjects;
  return spec;
}

OutcomeConfig effective_outcome_config(const PipelineConfig& c) {
  return c.cohort.outcome_config.empty() ? default_outcome_config()
                                         : load_outcome_config(c.cohort.outcome_config);
}

MarkerConfig effective_marker_catalog(const PipelineConfig& c) {
  return c.markers.config.empty() ? default_marker_config()
                                  : load_marker_config(c.markers.config);
}

DeyoMap effective_deyo_map(const PipelineConfig& c) {
  return c.analytics.deyo_map.empty() ? default_deyo_map()
                                      : load_deyo_map(c.analytics.deyo_map);
}

// --- stage fingerprints ------------------------------------------------------

json select_fp_fields(const PipelineConfig& c) {
  json j = rank_to_json(c.select.rank);
  j["min_improvement"] = c.select.min_improvement;
  j["max_markers"] = c.select.max_markers;
  return j;
}

std::string stage_fp(Stage stage, const PipelineConfig& c, const json& manifest);

json stage_fp_inputs(Stage stage, const PipelineConfig& c, const json& manifest) {
  json j;
  switch (stage) {
    case Stage::Cohort: {
      j["seed"] = c.seed;
      j["outcomes"] = json::parse(outcome_config_to_json(effective_outcome_config(c)));
      if (c.cohort.source == CohortSource::Synthetic) {
        j["mode"] = "synth";
        j["spec"] = json::parse(synthetic_spec_to_json(effective_synth_spec(c)));
      } else {
        j["mode"] = "ingest";
        json files;
        const FlowPaths& f = c.cohort.flows;
        for (const auto& [name, path] :
             std::initializer_list<std::pair<const char*, const std::string*>>{
                 {"registry", &f.registry},
                 {"discharge", &f.discharge},
                 {"er", &f.er},
                 {"psychiatry", &f.psychiatry},
                 {"home_care", &f.home_care},
                 {"exemption", &f.exemption},
                 {"pharma", &f.pharma},
                 {"outpatient", &f.outpatient}}) {
          files[name] = path->empty() ? "" : file_hash(*path);
        }
        j["files"] = files;
        j["outcome_year"] = c.cohort.outcome_year;
        j["min_age"] = c.cohort.min_age;
        j["row_policy"] = c.cohort.row_policy == RowPolicy::Abort ? "abort" : "skip";
      }
      break;
    }
    case Stage::Markers: {
      j["upstream"] = stage_fp(Stage::Cohort, c, manifest);
      j["catalog"] = content_hash(marker_config_to_json(effective_marker_catalog(c)));
      j["discretize"] = json{{"enabled", c.markers.discretize},
                             {"subsamples", c.markers.discretize_subsamples},
                             {"max_cuts", c.markers.discretize_max_cuts}};
      break;
    }
    case Stage::Screen: {
      j["upstream"] = stage_fp(Stage::Markers, c, manifest);
      j["prevalence_threshold"] = c.screen.prevalence_threshold;
      j["protective_rule"] = to_string(c.screen.protective_rule);
      j["min_protective"] = c.screen.min_protective;
      j["n_models"] = c.screen.n_models;
      j["vote_share"] = c.screen.vote_share;
      j["min_outcomes"] = c.screen.min_outcomes;
      j["min_cases_warning"] = c.screen.min_cases_warning;
      break;
    }
    case Stage::Select: {
      j["upstream"] = stage_fp(Stage::Screen, c, manifest);
      j["selection"] = select_fp_fields(c);
      break;
    }
    case Stage::Score: {
      j["upstream"] = stage_fp(Stage::Select, c, manifest);
      j["rank"] = rank_to_json(c.score.rank);
      break;
    }
    case Stage::Robustness: {
      j["upstream"] = stage_fp(Stage::Screen, c, manifest);
      j["selection"] = select_fp_fields(c);
      j["scenarios"] = c.robustness.scenarios;
      j["folds"] = c.robustness.folds;
      j["repetitions"] = c.robustness.repetitions;
      j["keep_share"] = c.robustness.keep_share;
      if (c.robustness.second_synthetic_spec.empty()) {
        j["second"] = nullptr;
      } else {
        j["second"] = file_hash(c.robustness.second_synthetic_spec);
      }
      break;
    }
    case Stage::Analytics: {
      j["upstream"] = stage_fp(Stage::Score, c, manifest);
      // The robustness artifact is optional input: bind to whatever version
      // is currently on disk so a robustness rerun invalidates the reports.
      const json* entry = nullptr;
      if (manifest.contains("stages")) {
        const json& stages = manifest.at("stages");
        if (stages.contains("robustness")) entry = &stages.at("robustness");
      }
      j["robustness"] = entry ? json((*entry).value("fingerprint", "")) : json(nullptr);
      j["reports"] = c.analytics.reports;
      j["deyo"] = c.analytics.deyo_map.empty() ? "builtin" : file_hash(c.analytics.deyo_map);
      if (c.analytics.deprivation_table.empty()) {
        j["deprivation"] = nullptr;
      } else {
        j["deprivation"] = file_hash(c.analytics.deprivation_table);
      }
      j["sex_stratified"] = c.analytics.sex_stratified;
      j["overlap_baseline_disability_only"] = c.analytics.overlap_baseline_disability_only;
      break;
    }
  }
  return j;
}

std::string stage_fp(Stage stage, const PipelineConfig& c, const json& manifest) {
  return content_hash(stage_fp_inputs(stage, c, manifest).dump());
}

// --- artifact paths and the manifest ----------------------------------------

std::string join(const std::string& dir, const std::string& rel) {
  return (fs::path(dir) / rel).string();
}

std::vector<std::string> artifact_list(Stage stage, const PipelineConfig& c) {
  switch (stage) {
    case Stage::Cohort:
      if (c.cohort.source == CohortSource::Synthetic) return {"cohort.ndjson", "latent.csv"};
      return {"cohort.ndjson"};
    case Stage::Markers: return {"markers.csv", "markers_meta.json"};
    case Stage::Screen: return {"screen.json"};
    case Stage::Select: return {"selection.json"};
    case Stage::Score: return {"scores.csv", "score_meta.json"};
    case Stage::Robustness: return {"robustness.json", "inclusion_matrix.csv"};
    case Stage::Analytics: return {"analytics_meta.json"};  // plus the report files
  }
  return {};
}

json load_manifest(const std::string& out) {
  const std::string path = join(out, "manifest.json");
  if (!fs::exists(path)) return json{{"version", 1}, {"stages", json::object()}};
  try {
    json doc = json::parse(slurp(path));
    if (!doc.is_object() || !doc.contains("stages") || !doc.at("stages").is_object()) {
      throw DataError(fmt::format("manifest '{}' is malformed", path));
    }
    return doc;
  } catch (const json::exception& e) {
    throw DataError(fmt::format("manifest '{}' is malformed: {}", path, e.what()));
  }
}

void save_manifest(const std::string& out, const json& manifest) {
  write_text(join(out, "manifest.json"), manifest.dump(2) + "\n");
}

bool stage_up_to_date(const json& manifest, const std::string& out, Stage stage,
                      const std::string& expected_fp) {
  const json& stages = manifest.at("stages");
  const char* name = to_string(stage);
  if (!stages.contains(name)) return false;
  const json& entry = stages.at(name);
  if (entry.value("fingerprint", "") != expected_fp) return false;
  for (const json& rel : entry.value("artifacts", json::array())) {
    if (!rel.is_string() || !fs::exists(join(out, rel.get<std::string>()))) return false;
  }
  return true;
}

void require_stage(const json& manifest, const std::string& out, Stage needed,
                   const std::string& expected_fp, const char* requester) {
  const json& stages = manifest.at("stages");
  const char* name = to_string(needed);
  if (!stages.contains(name)) {
    throw DependencyError(fmt::format(
        "'{}' requires the '{}' artifact; run the {} stage first", requester, name, name));
  }
  const json& entry = stages.at(name);
  if (entry.value("fingerprint", "") != expected_fp) {
    throw DependencyError(fmt::format(
        "the '{}' artifact is stale: the configuration changed since it was written; "
        "rerun the {} stage",
        name, name));
  }
  for (const json& rel : entry.value("artifacts", json::array())) {
    const std::string path = rel.is_string() ? rel.get<std::string>() : std::string();
    if (path.empty() || !fs::exists(join(out, path))) {
      throw DependencyError(fmt::format(
          "the '{}' artifact file '{}' is missing; rerun the {} stage", name, path, name));
    }
  }
}

// --- evaluation (de)serialization -------------------------------------------

json eval_to_json(const SubsetEvaluation& eval, const std::vector<std::string>& names) {
  json j;
  json markers = json::array();
  for (std::size_t m : eval.markers) markers.push_back(names.at(m));
  j["markers"] = markers;
  j["mean_auc"] = eval.mean_auc;
  j["n_profiles"] = eval.n_profiles;
  j["n_subjects"] = eval.n_subjects;
  json outs = json::array();
  for (const OutcomeAuc& o : eval.outcomes) {
    json e;
    e["outcome"] = to_string(o.outcome);
    e["included"] = o.included;
    e["restricted"] = o.restricted;
    e["eval_subjects"] = o.eval_subjects;
    e["cases"] = o.cases;
    if (o.included) {
      e["auc"] = o.result.auc;
      e["variance"] = o.result.variance;
      e["ci_lo"] = o.result.ci_lo;
      e["ci_hi"] = o.result.ci_hi;
      e["level"] = o.result.level;
      e["degenerate"] = o.result.degenerate;
    }
    outs.push_back(e);
  }
  j["outcomes"] = outs;
  return j;
}

std::size_t marker_index_of(const MarkerData& data, const std::string& name,
                            const char* where) {
  const auto it = std::find(data.names.begin(), data.names.end(), name);
  if (it == data.names.end()) {
    throw DataError(fmt::format("{} references unknown marker '{}'", where, name));
  }
  return static_cast<std::size_t>(it - data.names.begin());
}

SubsetEvaluation eval_from_json(const json& j, const MarkerData& data, const char* where) {
  SubsetEvaluation eval;
  for (const json& name : j.at("markers")) {
    eval.markers.push_back(marker_index_of(data, name.get<std::string>(), where));
  }
  std::sort(eval.markers.begin(), eval.markers.end());
  eval.mean_auc = j.at("mean_auc").get<double>();
  eval.n_profiles = j.at("n_profiles").get<std::size_t>();
  eval.n_subjects = j.at("n_subjects").get<std::size_t>();
  for (const json& e : j.at("outcomes")) {
    OutcomeAuc o;
    o.outcome = outcome_from_label(e.at("outcome").get<std::string>());
    o.included = e.at("included").get<bool>();
    o.restricted = e.at("restricted").get<bool>();
    o.eval_subjects = e.at("eval_subjects").get<std::size_t>();
    o.cases = e.at("cases").get<std::size_t>();
    if (o.included) {
      o.result.auc = e.at("auc").get<double>();
      o.result.variance = e.at("variance").get<double>();
      o.result.ci_lo = e.at("ci_lo").get<double>();
      o.result.ci_hi = e.at("ci_hi").get<double>();
      o.result.level = e.at("level").get<double>();
      o.result.degenerate = e.at("degenerate").get<bool>();
    }
    eval.outcomes.push_back(o);
  }
  return eval;
}

// --- execution context and artifact loaders ---------------------------------

struct Ctx {
  const PipelineConfig& config;
  std::string out;
  int threads = 1;
  json* manifest = nullptr;

  std::optional<Cohort> cohort;
  std::optional<MarkerData> markers;
};

const Cohort& load_cohort(Ctx& ctx) {
  if (!ctx.cohort) ctx.cohort = read_cohort_ndjson(join(ctx.out, "cohort.ndjson"));
  return *ctx.cohort;
}

const MarkerData& load_markers(Ctx& ctx) {
  if (ctx.markers) return *ctx.markers;
  const Cohort& cohort = load_cohort(ctx);

  json meta;
  try {
    meta = json::parse(slurp(join(ctx.out, "markers_meta.json")));
  } catch (const json::exception& e) {
    throw DataError(fmt::format("markers_meta.json is malformed: {}", e.what()));
  }
  MarkerData data;
  for (const json& n : meta.at("names")) data.names.push_back(n.get<std::string>());
  for (const json& n : meta.at("level_counts")) {
    data.level_counts.push_back(n.get<std::uint8_t>());
  }

  CsvReader reader(join(ctx.out, "markers.csv"));
  const std::size_t id_col = reader.require_column("subject_id");
  std::vector<std::size_t> cols;
  for (const std::string& name : data.names) cols.push_back(reader.require_column(name));

  std::vector<std::string> row;
  std::size_t i = 0;
  while (reader.next(row)) {
    if (i >= cohort.size() || row[id_col] != cohort.subjects[i].id) {
      throw DataError("markers.csv does not align with cohort.ndjson; rerun the markers stage");
    }
    Profile p(cols.size());
    for (std::size_t k = 0; k < cols.size(); ++k) {
      int level = 0;
      try {
        level = std::stoi(row[cols[k]]);
      } catch (const std::exception&) {
        throw DataError(fmt::format("markers.csv line {}: bad level '{}'",
                                    reader.line_number(), row[cols[k]]));
      }
      if (level < 0 || level >= static_cast<int>(data.level_counts[k])) {
        throw DataError(fmt::format("markers.csv line {}: level {} out of range",
                                    reader.line_number(), level));
      }
      p[k] = static_cast<std::uint8_t>(level);
    }
    data.profiles.push_back(std::move(p));
    ++i;
  }
  if (i != cohort.size()) {
    throw DataError("markers.csv does not align with cohort.ndjson; rerun the markers stage");
  }
  ctx.markers = std::move(data);
  return *ctx.markers;
}

json load_json_artifact(const Ctx& ctx, const char* rel) {
  try {
    return json::parse(slurp(join(ctx.out, rel)));
  } catch (const json::exception& e) {
    throw DataError(fmt::format("{} is malformed: {}", rel, e.what()));
  }
}

std::vector<std::size_t> load_core_candidates(Ctx& ctx) {
  const json doc = load_json_artifact(ctx, "screen.json");
  const MarkerData& data = load_markers(ctx);
  std::vector<std::size_t> out;
  for (const json& name : doc.at("core_set")) {
    out.push_back(marker_index_of(data, name.get<std::string>(), "screen.json"));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::size_t> load_selected_markers(Ctx& ctx) {
  const json doc = load_json_artifact(ctx, "selection.json");
  const MarkerData& data = load_markers(ctx);
  std::vector<std::size_t> out;
  for (const json& name : doc.at("selected")) {
    out.push_back(marker_index_of(data, name.get<std::string>(), "selection.json"));
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct ScoresArtifact {
  std::vector<double> fi;
  std::vector<std::uint32_t> subject_profile;
};

ScoresArtifact load_scores(Ctx& ctx) {
  const Cohort& cohort = load_cohort(ctx);
  CsvReader reader(join(ctx.out, "scores.csv"));
  const std::size_t id_col = reader.require_column("subject_id");
  const std::size_t profile_col = reader.require_column("profile");
  const std::size_t fi_col = reader.require_column("fi");
  ScoresArtifact scores;
  std::vector<std::string> row;
  std::size_t i = 0;
  while (reader.next(row)) {
    if (i >= cohort.size() || row[id_col] != cohort.subjects[i].id) {
      throw DataError("scores.csv does not align with cohort.ndjson; rerun the score stage");
    }
    try {
      scores.subject_profile.push_back(
          static_cast<std::uint32_t>(std::stoul(row[profile_col])));
      std::size_t used = 0;
      const double v = std::stod(row[fi_col], &used);
      if (used != row[fi_col].size()) throw std::invalid_argument(row[fi_col]);
      scores.fi.push_back(v);
    } catch (const std::exception&) {
      throw DataError(fmt::format("scores.csv line {}: malformed row", reader.line_number()));
    }
    ++i;
  }
  if (i != cohort.size()) {
    throw DataError("scores.csv does not align with cohort.ndjson; rerun the score stage");
  }
  return scores;
}

InclusionMatrix load_inclusion_matrix(const Ctx& ctx) {
  const json doc = load_json_artifact(ctx, "robustness.json");
  const json& m = doc.at("inclusion");
  InclusionMatrix matrix;
  for (const json& v : m.at("variables")) matrix.variables.push_back(v.get<std::string>());
  for (const json& r : m.at("runs")) matrix.runs.push_back(r.get<std::string>());
  for (const json& row : m.at("included")) {
    std::vector<std::uint8_t> bits;
    for (const json& cell : row) bits.push_back(cell.get<int>() != 0 ? 1 : 0);
    matrix.included.push_back(std::move(bits));
  }
  for (const json& v : m.at("mean_auc")) matrix.mean_auc.push_back(v.get<double>());
  return matrix;
}

// --- stage runners ------------------------------------------------------------

struct StageRun {
  std::size_t rows = 0;
  std::vector<std::string> artifacts;  // relative to the output directory
  std::vector<std::string> warnings;
};

std::vector<OutcomeResponse> outcome_responses(const Cohort& cohort) {
  const std::size_t n = cohort.size();
  std::vector<OutcomeResponse> out;
  out.reserve(kOutcomeCount);
  for (int k = 0; k < kOutcomeCount; ++k) {
    const auto outcome = static_cast<Outcome>(k);
    OutcomeResponse r;
    r.name = to_string(outcome);
    r.label.resize(n);
    r.eligible.assign(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
      const OutcomeVector& v = cohort.subjects[i].outcomes;
      r.label[i] = outcome_flag(v, outcome) ? 1 : 0;
      if (outcome_is_incidence(outcome) && outcome_baseline_flag(v, outcome)) {
        r.eligible[i] = 0;
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

StageRun run_cohort_stage(Ctx& ctx) {
  const PipelineConfig& c = ctx.config;
  StageRun run;
  Cohort cohort;

  if (c.cohort.source == CohortSource::Synthetic) {
    const SyntheticSpec spec = effective_synth_spec(c);
    std::vector<double> latent;
    cohort = generate_synthetic_cohort(spec, &latent);
    if (!c.cohort.outcome_config.empty()) {
      link_outcomes(cohort, effective_outcome_config(c));
    }
    std::string csv = "subject_id,latent\n";
    for (std::size_t i = 0; i < cohort.size(); ++i) {
      csv += fmt::format("{},{}\n", csv_escape(cohort.subjects[i].id), num(latent[i]));
    }
    write_text(join(ctx.out, "latent.csv"), csv);
    run.artifacts = {"cohort.ndjson", "latent.csv"};
  } else {
    IngestStats stats;
    cohort = load_flows(c.cohort.flows,
                        CohortSpec::for_outcome_year(c.cohort.outcome_year, c.cohort.min_age),
                        c.cohort.row_policy, &stats);
    link_outcomes(cohort, effective_outcome_config(c));
    if (stats.malformed_rows > 0) {
      run.warnings.push_back(
          fmt::format("{} malformed rows skipped", stats.malformed_rows));
      for (std::size_t i = 0; i < stats.row_errors.size() && i < 10; ++i) {
        run.warnings.push_back(stats.row_errors[i]);
      }
    }
    if (stats.orphan_records > 0) {
      run.warnings.push_back(fmt::format(
          "{} clinical rows had no registry match and were dropped", stats.orphan_records));
    }
    run.artifacts = {"cohort.ndjson"};
  }

  const ValidationReport report = validate_cohort(cohort);
  if (!report.clean()) {
    run.warnings.push_back(
        fmt::format("{} cohort validation violations", report.violations.size()));
    for (std::size_t i = 0; i < report.violations.size() && i < 5; ++i) {
      const auto& v = report.violations[i];
      run.warnings.push_back(fmt::format("{}: {} ({})", v.subject, v.rule, v.detail));
    }
  }

  write_cohort_ndjson(cohort, join(ctx.out, "cohort.ndjson"));
  run.rows = cohort.size();
  ctx.cohort = std::move(cohort);
  ctx.markers.reset();
  return run;
}

StageRun run_markers_stage(Ctx& ctx) {
  const PipelineConfig& c = ctx.config;
  const Cohort& cohort = load_cohort(ctx);
  MarkerConfig catalog = effective_marker_catalog(c);
  MarkerData data = extract_markers(cohort, catalog);

  StageRun run;
  json discretize_meta = json::array();
  if (c.markers.discretize && !data.count_marker_index.empty()) {
    std::vector<OutcomeVector> outcomes;
    outcomes.reserve(cohort.size());
    for (const Subject& s : cohort.subjects) outcomes.push_back(s.outcomes);

    bool changed = false;
    for (std::size_t row = 0; row < data.count_marker_index.size(); ++row) {
      const std::size_t idx = data.count_marker_index[row];
      DiscretizeOptions opts;
      opts.n_subsamples = c.markers.discretize_subsamples;
      opts.max_cuts = c.markers.discretize_max_cuts;
      opts.seed = derive_seed(c.seed, kSeedDiscretize, row);
      const DiscretizeResult result = discretize_counts(data.raw_counts[row], outcomes, opts);
      for (const std::string& w : result.warnings) {
        run.warnings.push_back(fmt::format("{}: {}", catalog.markers[idx].name, w));
      }
      json entry;
      entry["marker"] = catalog.markers[idx].name;
      entry["cuts"] = result.cuts;
      json votes = json::array();
      for (const ThresholdVote& v : result.votes) {
        votes.push_back(json{{"threshold", v.threshold}, {"votes", v.votes}});
      }
      entry["votes"] = votes;
      entry["degenerate"] = result.degenerate;
      discretize_meta.push_back(entry);
      if (result.cuts != catalog.markers[idx].count_cuts) {
        catalog.markers[idx].count_cuts = result.cuts;
        catalog.markers[idx].level_labels.clear();  // regenerate for the new cuts
        changed = true;
      }
    }
    if (changed) data = extract_markers(cohort, catalog);
  }

  std::string csv = "subject_id";
  for (const std::string& name : data.names) csv += fmt::format(",{}", csv_escape(name));
  csv += "\n";
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    csv += csv_escape(cohort.subjects[i].id);
    for (std::size_t k = 0; k < data.names.size(); ++k) {
      csv += fmt::format(",{}", static_cast<int>(data.profiles[i][k]));
    }
    csv += "\n";
  }
  write_text(join(ctx.out, "markers.csv"), csv);

  json meta;
  meta["version"] = kArtifactVersion;
  meta["names"] = data.names;
  meta["level_counts"] = data.level_counts;
  meta["catalog"] = json::parse(marker_config_to_json(catalog));
  meta["discretize"] = json{{"enabled", c.markers.discretize}, {"markers", discretize_meta}};
  meta["skipped_drafts"] = catalog.skipped_drafts;
  meta["non_numeric_codes"] = data.diagnostics.non_numeric_codes;
  write_text(join(ctx.out, "markers_meta.json"), meta.dump(2) + "\n");
  if (!data.diagnostics.non_numeric_codes.empty()) {
    run.warnings.push_back(fmt::format("{} codes had no usable digits under a range rule",
                                       data.diagnostics.non_numeric_codes.size()));
  }

  run.rows = cohort.size();
  run.artifacts = {"markers.csv", "markers_meta.json"};
  ctx.markers = std::move(data);
  return run;
}

StageRun run_screen_stage(Ctx& ctx) {
  const PipelineConfig& c = ctx.config;
  const Cohort& cohort = load_cohort(ctx);
  const MarkerData& data = load_markers(ctx);

  std::vector<std::vector<std::uint8_t>> columns;
  columns.reserve(data.names.size());
  for (std::size_t m = 0; m < data.names.size(); ++m) columns.push_back(data.column(m));

  const std::vector<PrevalenceDecision> prevalence =
      prevalence_screen(columns, data.names, c.screen.prevalence_threshold);

  std::vector<std::vector<std::uint8_t>> columns1;
  std::vector<std::string> names1;
  for (std::size_t m = 0; m < prevalence.size(); ++m) {
    if (prevalence[m].kept) {
      columns1.push_back(columns[m]);
      names1.push_back(data.names[m]);
    }
  }

  const std::vector<OutcomeResponse> outcomes = outcome_responses(cohort);
  const OddsRatioMatrix matrix = odds_ratio_matrix(columns1, names1, outcomes);
  const std::vector<ProtectiveDecision> protective =
      protective_screen(matrix, c.screen.protective_rule, c.screen.min_protective);

  std::vector<std::vector<std::uint8_t>> columns2;
  std::vector<std::string> names2;
  for (std::size_t m = 0; m < protective.size(); ++m) {
    if (protective[m].kept) {
      columns2.push_back(columns1[m]);
      names2.push_back(names1[m]);
    }
  }

  VoteOptions vote_options;
  vote_options.n_models = c.screen.n_models;
  vote_options.vote_share = c.screen.vote_share;
  vote_options.min_outcomes = c.screen.min_outcomes;
  vote_options.min_cases_warning = c.screen.min_cases_warning;
  vote_options.seed = derive_seed(c.seed, kSeedScreen);
  vote_options.threads = ctx.threads;
  const VoteSelection votes = vote_select(columns2, names2, outcomes, vote_options);

  json doc;
  doc["version"] = kArtifactVersion;
  json prev = json::array();
  for (const PrevalenceDecision& d : prevalence) {
    prev.push_back(json{{"name", d.name}, {"prevalence", d.prevalence}, {"kept", d.kept}});
  }
  doc["prevalence"] = prev;
  json ors;
  ors["variables"] = matrix.variables;
  ors["outcomes"] = matrix.outcomes;
  json cells = json::array();
  for (const auto& row : matrix.cells) {
    json r = json::array();
    for (const OddsRatioResult& cell : row) {
      r.push_back(json{{"value", cell.value},
                       {"ci_lo", cell.ci_lo},
                       {"ci_hi", cell.ci_hi},
                       {"estimable", cell.estimable},
                       {"corrected", cell.corrected}});
    }
    cells.push_back(r);
  }
  ors["cells"] = cells;
  doc["odds_ratios"] = ors;
  json prot = json::array();
  for (const ProtectiveDecision& d : protective) {
    prot.push_back(json{{"name", d.name},
                        {"protective_outcomes", d.protective_outcomes},
                        {"kept", d.kept}});
  }
  doc["protective"] = prot;
  doc["votes"] = json{{"variables", votes.table.variables},
                      {"outcomes", votes.table.outcomes},
                      {"counts", votes.table.counts},
                      {"n_models", c.screen.n_models},
                      {"vote_share", c.screen.vote_share},
                      {"min_outcomes", c.screen.min_outcomes}};
  doc["core_set"] = votes.core_set;
  doc["warnings"] = votes.warnings;
  write_text(join(ctx.out, "screen.json"), doc.dump(2) + "\n");

  StageRun run;
  run.rows = votes.core_set.size();
  run.artifacts = {"screen.json"};
  run.warnings = votes.warnings;
  return run;
}

StageRun run_select_stage(Ctx& ctx) {
  const PipelineConfig& c = ctx.config;
  const Cohort& cohort = load_cohort(ctx);
  const std::vector<std::size_t> candidates = load_core_candidates(ctx);
  const MarkerData& data = load_markers(ctx);

  SelectionOptions options;
  options.rank = c.select.rank;
  options.rank.seed = derive_seed(c.seed, kSeedSelect);
  options.rank.threads = ctx.threads;
  options.min_improvement = c.select.min_improvement;
  options.max_markers = c.select.max_markers;

  const SelectionResult result = forward_select(cohort, data, candidates, options);

  json doc;
  doc["version"] = kArtifactVersion;
  doc["selected"] = result.selected_names;
  doc["stop_reason"] = result.stop_reason;
  doc["warnings"] = result.warnings;
  doc["final_evaluation"] = eval_to_json(result.final_evaluation, data.names);
  json trials = json::array();
  for (const SelectionTrial& t : result.trials) {
    json entry;
    entry["step"] = t.step;
    json cand = json::array();
    for (std::size_t m : t.candidate) cand.push_back(data.names.at(m));
    entry["candidate"] = cand;
    entry["accepted"] = t.accepted;
    entry["evaluation"] = eval_to_json(t.evaluation, data.names);
    trials.push_back(entry);
  }
  doc["trials"] = trials;
  write_text(join(ctx.out, "selection.json"), doc.dump(2) + "\n");

  StageRun run;
  run.rows = result.selected.size();
  run.artifacts = {"selection.json"};
  run.warnings = result.warnings;
  return run;
}

StageRun run_score_stage(Ctx& ctx) {
  const PipelineConfig& c = ctx.config;
  const Cohort& cohort = load_cohort(ctx);
  const std::vector<std::size_t> selected = load_selected_markers(ctx);
  const MarkerData& data = load_markers(ctx);

  RankOptions rank = c.score.rank;
  rank.seed = derive_seed(c.seed, kSeedScore);
  rank.threads = ctx.threads;

  StageRun run;
  const FrailtyScore score = score_markers(data, selected, rank);
  const SubsetEvaluation eval =
      evaluate_frailty_score(cohort, score, selected, nullptr, &run.warnings);

  std::string csv = "subject_id,profile,fi\n";
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    csv += fmt::format("{},{},{}\n", csv_escape(cohort.subjects[i].id),
                       score.poset.subject_profile[i], num(score.fi[i]));
  }
  write_text(join(ctx.out, "scores.csv"), csv);

  json meta;
  meta["version"] = kArtifactVersion;
  json names = json::array();
  for (std::size_t m : selected) names.push_back(data.names.at(m));
  meta["markers"] = names;
  meta["rank"] = rank_to_json(rank);
  meta["seed"] = rank.seed;
  meta["n_profiles"] = score.poset.size();
  meta["n_subjects"] = cohort.size();
  meta["mean_auc"] = eval.mean_auc;
  meta["evaluation"] = eval_to_json(eval, data.names);
  meta["warnings"] = run.warnings;
  write_text(join(ctx.out, "score_meta.json"), meta.dump(2) + "\n");

  run.rows = cohort.size();
  run.artifacts = {"scores.csv", "score_meta.json"};
  return run;
}

StageRun run_robustness_stage(Ctx& ctx) {
  const PipelineConfig& c = ctx.config;
  const Cohort& cohort = load_cohort(ctx);
  const std::vector<std::size_t> candidates = load_core_candidates(ctx);
  const MarkerData& data = load_markers(ctx);

  RobustnessOptions options;
  options.selection.rank = c.select.rank;
  options.selection.rank.seed = derive_seed(c.seed, kSeedSelect);
  options.selection.rank.threads = ctx.threads;
  options.selection.min_improvement = c.select.min_improvement;
  options.selection.max_markers = c.select.max_markers;
  options.folds = c.robustness.folds;
  options.repetitions = c.robustness.repetitions;
  options.keep_share = c.robustness.keep_share;
  options.seed = derive_seed(c.seed, kSeedRobustness);

  std::vector<RobustnessRun> runs;
  std::vector<std::string> scenario_of_run;
  auto absorb = [&](std::vector<RobustnessRun> more, const std::string& scenario) {
    for (RobustnessRun& r : more) {
      runs.push_back(std::move(r));
      scenario_of_run.push_back(scenario);
    }
  };

  for (const std::string& scenario : c.robustness.scenarios) {
    if (scenario == "second_cohort") {
      if (c.robustness.second_synthetic_spec.empty()) {
        absorb(robustness_second_cohort(cohort, data, cohort, data, candidates, options),
               scenario);
      } else {
        SyntheticSpec spec2 = load_synthetic_spec(c.robustness.second_synthetic_spec);
        spec2.seed = derive_seed(c.seed, kSeedSecondCohort);
        Cohort cohort2 = generate_synthetic_cohort(spec2);
        if (!c.cohort.outcome_config.empty()) {
          link_outcomes(cohort2, effective_outcome_config(c));
        }
        // Reuse the primary cohort's fitted catalog so both cohorts share
        // marker definitions (including refitted count cuts).
        const json meta = load_json_artifact(ctx, "markers_meta.json");
        const MarkerConfig catalog = parse_marker_config(meta.at("catalog").dump());
        const MarkerData data2 = extract_markers(cohort2, catalog);
        absorb(robustness_second_cohort(cohort, data, cohort2, data2, candidates, options),
               scenario);
      }
    } else if (scenario == "fold_exclusion") {
      absorb(robustness_fold_exclusion(cohort, data, candidates, options), scenario);
    } else if (scenario == "population_perturbation") {
      absorb(robustness_population_perturbation(cohort, data, candidates, options), scenario);
    } else {
      throw DataError(fmt::format("unknown robustness scenario '{}'", scenario));
    }
  }

  const InclusionMatrix matrix = inclusion_matrix(runs, data, candidates);

  json doc;
  doc["version"] = kArtifactVersion;
  doc["scenarios"] = c.robustness.scenarios;
  json run_list = json::array();
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const RobustnessRun& r = runs[i];
    json entry;
    entry["label"] = r.label;
    entry["scenario"] = scenario_of_run[i];
    entry["population"] = r.population;
    entry["selected"] = r.selection.selected_names;
    entry["mean_auc"] = r.selection.final_evaluation.mean_auc;
    entry["stop_reason"] = r.selection.stop_reason;
    json samples = json::array();
    for (const auto& [step, size] : r.step_samples) {
      samples.push_back(json::array({step, size}));
    }
    entry["step_samples"] = samples;
    run_list.push_back(entry);
  }
  doc["runs"] = run_list;
  doc["inclusion"] = json{{"variables", matrix.variables},
                          {"runs", matrix.runs},
                          {"included", matrix.included},
                          {"mean_auc", matrix.mean_auc}};
  write_text(join(ctx.out, "robustness.json"), doc.dump(2) + "\n");

  std::string csv = "variable";
  for (const std::string& label : matrix.runs) csv += fmt::format(",{}", csv_escape(label));
  csv += "\n";
  for (std::size_t v = 0; v < matrix.variables.size(); ++v) {
    csv += csv_escape(matrix.variables[v]);
    for (std::size_t r = 0; r < matrix.runs.size(); ++r) {
      csv += fmt::format(",{}", matrix.included[v][r] ? 1 : 0);
    }
    csv += "\n";
  }
  csv += "mean_auc";
  for (double auc : matrix.mean_auc) csv += fmt::format(",{}", num(auc));
  csv += "\n";
  write_text(join(ctx.out, "inclusion_matrix.csv"), csv);

  StageRun run;
  run.rows = runs.size();
  run.artifacts = {"robustness.json", "inclusion_matrix.csv"};
  return run;
}

// Everything the report emitters need, loaded from the artifacts. Owns the
// storage the ReportInputs views point into.
struct ReportBundle {
  std::vector<std::size_t> selected;
  ScoresArtifact scores;
  SubsetEvaluation final_evaluation;
  std::vector<CharlsonResult> charlson;
  std::optional<InclusionMatrix> robustness;
  std::optional<DeprivationIndex> deprivation;
  std::optional<DeprivationAssignment> deprivation_assignment;
  std::optional<SexStratifiedReport> sex_report;
};

// `need_sex` lets the report command skip the expensive sex-stratified
// recomputation when no requested report uses it.
ReportBundle build_report_bundle(Ctx& ctx, bool need_sex) {
  const PipelineConfig& c = ctx.config;
  const Cohort& cohort = load_cohort(ctx);
  ReportBundle b;
  b.selected = load_selected_markers(ctx);
  const MarkerData& data = load_markers(ctx);
  b.scores = load_scores(ctx);

  const json meta = load_json_artifact(ctx, "score_meta.json");
  b.final_evaluation = eval_from_json(meta.at("evaluation"), data, "score_meta.json");

  b.charlson = charlson_scores(cohort, effective_deyo_map(c));

  if (!c.analytics.deprivation_table.empty()) {
    const DeprivationTable table = load_deprivation_table(c.analytics.deprivation_table);
    b.deprivation = deprivation_index(table);
    b.deprivation_assignment = assign_deprivation(cohort, *b.deprivation);
  }

  if (need_sex && c.analytics.sex_stratified) {
    RankOptions rank = c.score.rank;
    rank.seed = derive_seed(c.seed, kSeedScore);
    rank.threads = ctx.threads;
    b.sex_report = sex_stratified_fi(cohort, data, b.selected, b.scores.fi, rank);
  }

  if (ctx.manifest && ctx.manifest->at("stages").contains("robustness") &&
      fs::exists(join(ctx.out, "robustness.json"))) {
    b.robustness = load_inclusion_matrix(ctx);
  }
  return b;
}

ReportInputs report_inputs_of(const Ctx& ctx, const ReportBundle& b) {
  ReportInputs in;
  in.cohort = &*ctx.cohort;
  in.markers = &*ctx.markers;
  in.selected = &b.selected;
  in.fi = &b.scores.fi;
  in.subject_profile = &b.scores.subject_profile;
  in.final_evaluation = &b.final_evaluation;
  in.charlson = &b.charlson;
  if (b.robustness) in.robustness = &*b.robustness;
  if (b.deprivation) in.deprivation = &*b.deprivation;
  if (b.deprivation_assignment) in.deprivation_assignment = &*b.deprivation_assignment;
  if (b.sex_report) in.sex_report = &*b.sex_report;
  in.overlap_baseline_disability_only = ctx.config.analytics.overlap_baseline_disability_only;
  return in;
}

std::string relative_to(const std::string& out, const std::string& path) {
  return fs::path(path).lexically_relative(out).generic_string();
}

StageRun run_analytics_stage(Ctx& ctx) {
  const PipelineConfig& c = ctx.config;
  const bool want_all = std::find(c.analytics.reports.begin(), c.analytics.reports.end(),
                                  std::string("all")) != c.analytics.reports.end();
  bool need_sex = want_all;
  for (const std::string& id : c.analytics.reports) {
    if (id == "sex_stratified_auc" || id == "table9") need_sex = true;
  }

  const ReportBundle bundle = build_report_bundle(ctx, need_sex);
  const ReportInputs inputs = report_inputs_of(ctx, bundle);
  const std::string reports_dir = join(ctx.out, "reports");

  std::vector<EmittedReport> emitted;
  std::vector<std::string> skipped;
  if (want_all) {
    emitted = emit_all_reports(inputs, reports_dir, &skipped);
  } else {
    for (const std::string& id : c.analytics.reports) {
      emitted.push_back(emit_report(inputs, id, reports_dir));
    }
  }

  StageRun run;
  json meta;
  meta["version"] = kArtifactVersion;
  json files = json::array();
  for (const EmittedReport& r : emitted) {
    const std::string csv_rel = relative_to(ctx.out, r.csv_path);
    const std::string txt_rel = relative_to(ctx.out, r.text_path);
    files.push_back(json{{"id", r.id}, {"csv", csv_rel}, {"text", txt_rel}});
    run.artifacts.push_back(csv_rel);
    run.artifacts.push_back(txt_rel);
  }
  meta["emitted"] = files;
  meta["skipped"] = skipped;
  write_text(join(ctx.out, "analytics_meta.json"), meta.dump(2) + "\n");
  run.artifacts.insert(run.artifacts.begin(), "analytics_meta.json");

  for (const std::string& s : skipped) run.warnings.push_back(fmt::format("skipped {}", s));
  run.rows = emitted.size();
  return run;
}

std::vector<Stage> dependencies_of(Stage stage) {
  switch (stage) {
    case Stage::Cohort: return {};
    case Stage::Markers: return {Stage::Cohort};
    case Stage::Screen: return {Stage::Cohort, Stage::Markers};
    case Stage::Select: return {Stage::Cohort, Stage::Markers, Stage::Screen};
    case Stage::Score: return {Stage::Cohort, Stage::Markers, Stage::Select};
    case Stage::Robustness: return {Stage::Cohort, Stage::Markers, Stage::Screen};
    case Stage::Analytics:
      return {Stage::Cohort, Stage::Markers, Stage::Select, Stage::Score};
  }
  return {};
}

int stage_order(Stage stage) { return static_cast<int>(stage); }

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& config, const std::vector<Stage>& stages,
                            const RunOptions& options) {
  config.validate();

  PipelineResult result;
  result.out_dir = resolve_output_dir(config);
  fs::create_directories(result.out_dir);

  std::vector<Stage> ordered = stages;
  std::sort(ordered.begin(), ordered.end(),
            [](Stage a, Stage b) { return stage_order(a) < stage_order(b); });
  ordered.erase(std::unique(ordered.begin(), ordered.end()), ordered.end());
  if (ordered.empty()) throw DataError("no pipeline stages requested");

  json manifest = load_manifest(result.out_dir);

  Ctx ctx{config, result.out_dir,
          options.threads > 0 ? options.threads : config.threads, &manifest};

  for (Stage stage : ordered) {
    const std::string fp = stage_fp(stage, config, manifest);

    for (Stage dep : dependencies_of(stage)) {
      require_stage(manifest, result.out_dir, dep, stage_fp(dep, config, manifest),
                    to_string(stage));
    }

    StageReport report;
    report.stage = stage;
    if (!options.force && stage_up_to_date(manifest, result.out_dir, stage, fp)) {
      const json& entry = manifest.at("stages").at(to_string(stage));
      report.executed = false;
      report.rows = entry.value("rows", std::size_t{0});
      for (const json& rel : entry.value("artifacts", json::array())) {
        report.artifacts.push_back(rel.get<std::string>());
      }
      result.stages.push_back(std::move(report));
      continue;
    }

    const auto t0 = std::chrono::steady_clock::now();
    StageRun run;
    switch (stage) {
      case Stage::Cohort: run = run_cohort_stage(ctx); break;
      case Stage::Markers: run = run_markers_stage(ctx); break;
      case Stage::Screen: run = run_screen_stage(ctx); break;
      case Stage::Select: run = run_select_stage(ctx); break;
      case Stage::Score: run = run_score_stage(ctx); break;
      case Stage::Robustness: run = run_robustness_stage(ctx); break;
      case Stage::Analytics: run = run_analytics_stage(ctx); break;
    }
    const auto t1 = std::chrono::steady_clock::now();
    const double elapsed =
        std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(t1 - t0).count();

    json entry;
    entry["fingerprint"] = fp;
    entry["inputs"] = stage_fp_inputs(stage, config, manifest);
    entry["seed"] = config.seed;
    entry["threads"] = ctx.threads;
    entry["rows"] = run.rows;
    entry["elapsed_ms"] = elapsed;
    entry["artifacts"] = run.artifacts;
    manifest["stages"][to_string(stage)] = entry;
    save_manifest(result.out_dir, manifest);

    report.executed = true;
    report.rows = run.rows;
    report.elapsed_ms = elapsed;
    report.artifacts = run.artifacts;
    report.warnings = run.warnings;
    result.stages.push_back(std::move(report));
  }

  return result;
}

std::vector<EmittedReport> emit_reports(const PipelineConfig& config,
                                        const std::vector<std::string>& which,
                                        const RunOptions& options) {
  config.validate();
  if (which.empty()) throw DataError("no reports requested");
  for (const std::string& id : which) {
    if (id != "all" && !is_report_id(id)) {
      std::string valid;
      for (const std::string& v : report_ids()) {
        if (!valid.empty()) valid += ", ";
        valid += v;
      }
      throw DataError(fmt::format("unknown report '{}'; valid ids: {}", id, valid));
    }
  }

  const std::string out = resolve_output_dir(config);
  json manifest = load_manifest(out);
  Ctx ctx{config, out, options.threads > 0 ? options.threads : config.threads, &manifest};

  // Presence check only: reports may be emitted from artifacts produced by an
  // earlier configuration, so no staleness comparison here.
  const json& stages = manifest.at("stages");
  for (Stage needed : {Stage::Cohort, Stage::Markers, Stage::Select, Stage::Score}) {
    const char* name = to_string(needed);
    if (!stages.contains(name)) {
      throw DependencyError(fmt::format(
          "'report' requires the '{}' artifact; run the {} stage first", name, name));
    }
    for (const json& rel : stages.at(name).value("artifacts", json::array())) {
      const std::string path = rel.is_string() ? rel.get<std::string>() : std::string();
      if (path.empty() || !fs::exists(join(out, path))) {
        throw DependencyError(fmt::format(
            "the '{}' artifact file '{}' is missing; rerun the {} stage", name, path, name));
      }
    }
  }

  const bool want_all =
      std::find(which.begin(), which.end(), std::string("all")) != which.end();
  bool need_sex = want_all;
  for (const std::string& id : which) {
    if (id == "sex_stratified_auc" || id == "table9") need_sex = true;
  }

  const ReportBundle bundle = build_report_bundle(ctx, need_sex);
  const ReportInputs inputs = report_inputs_of(ctx, bundle);
  const std::string reports_dir = join(out, "reports");

  std::vector<EmittedReport> emitted;
  if (want_all) {
    emitted = emit_all_reports(inputs, reports_dir);
  } else {
    for (const std::string& id : which) {
      emitted.push_back(emit_report(inputs, id, reports_dir));
    }
  }
  return emitted;
}

}  // namespace frailty
