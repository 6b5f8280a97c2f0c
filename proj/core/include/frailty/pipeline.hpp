#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "frailty/average_rank.hpp"
#include "frailty/discretize.hpp"
#include "frailty/flows.hpp"
#include "frailty/reports.hpp"
#include "frailty/screening.hpp"

namespace frailty {

// The staged pipeline. Every stage persists one artifact set under the
// output directory and records a fingerprint of everything that went into it
// in manifest.json; a stage whose fingerprint and artifacts are unchanged is
// skipped on rerun unless forced.
enum class Stage : std::uint8_t {
  Cohort,      // synthesize or ingest the study population
  Markers,     // extract ordinal marker profiles
  Screen,      // variable screening (prevalence, protective, votes)
  Select,      // greedy forward selection of the final marker set
  Score,       // frailty index for every subject
  Robustness,  // selection reruns under perturbed designs
  Analytics,   // stratification tables and figure data
};

const char* to_string(Stage stage);
// Accepts the stage names plus the cohort-stage command aliases
// "synth" and "ingest"; throws DataError on unknown names.
Stage stage_from_string(const std::string& name);

enum class CohortSource { Synthetic, Flows };

struct CohortStageConfig {
  CohortSource source = CohortSource::Synthetic;
  // Synthetic mode. Path to a generator spec (empty = built-in defaults);
  // the spec's own seed is replaced by the pipeline seed, and `n_subjects`
  // overrides the spec's size when set.
  std::string synthetic_spec;
  std::optional<std::size_t> n_subjects;
  // Flow-file mode.
  FlowPaths flows;
  int outcome_year = 2016;
  int min_age = 65;
  RowPolicy row_policy = RowPolicy::SkipAndLog;
  // Outcome linkage rules (empty = built-in defaults).
  std::string outcome_config;
};

struct MarkerStageConfig {
  std::string config;  // marker catalog path; empty = built-in default
  // Refit the cut points of count markers on the data (supervised
  // discretization); the fitted cuts replace the catalog's.
  bool discretize = true;
  int discretize_subsamples = 10;
  std::size_t discretize_max_cuts = 2;
};

struct ScreenStageConfig {
  double prevalence_threshold = 0.01;
  ProtectiveRule protective_rule = ProtectiveRule::PointEstimate;
  int min_protective = 2;
  int n_models = 100;
  double vote_share = 0.5;
  int min_outcomes = 3;
  int min_cases_warning = 30;
};

struct SelectStageConfig {
  RankOptions rank;  // scoring method used during the search (default LPOM)
  double min_improvement = 1e-4;
  std::size_t max_markers = 0;  // 0 = no limit

  SelectStageConfig() { rank.method = RankMethod::Lpom; }
};

struct ScoreStageConfig {
  RankOptions rank;  // default: MonteCarlo with 10,000 samples
};

struct RobustnessStageConfig {
  // Any subset of {"second_cohort", "fold_exclusion",
  // "population_perturbation"}, run in the given order.
  std::vector<std::string> scenarios = {"second_cohort", "fold_exclusion",
                                        "population_perturbation"};
  int folds = 4;
  int repetitions = 2;
  double keep_share = 0.9;
  // Generator spec of an independent comparison cohort for the
  // second_cohort scenario; empty = rerun on the primary cohort itself.
  std::string second_synthetic_spec;
};

struct AnalyticsStageConfig {
  std::vector<std::string> reports = {"all"};  // report ids or "all"
  std::string deyo_map;           // comorbidity weights; empty = built-in
  std::string deprivation_table;  // area factor CSV; empty = skip the report
  bool sex_stratified = true;
  bool overlap_baseline_disability_only = false;
};

struct PipelineConfig {
  std::uint64_t seed = 0;  // required in the config file
  std::string output_dir;  // empty: $FRAILTY_OUT_DIR, else "frailty_out"
  int threads = 1;         // <= 0 means all hardware threads

  CohortStageConfig cohort;
  MarkerStageConfig markers;
  ScreenStageConfig screen;
  SelectStageConfig select;
  ScoreStageConfig score;
  RobustnessStageConfig robustness;
  AnalyticsStageConfig analytics;

  // Checks enum values, numeric ranges, and that every referenced path
  // exists. Throws DataError.
  void validate() const;
};

// JSON round trip. Parsing starts from the defaults, so a partial document
// only overrides what it mentions — but `seed` must be present. Unknown keys
// are rejected. Throws DataError.
PipelineConfig parse_pipeline_config(const std::string& json_text);
PipelineConfig load_pipeline_config(const std::string& path);
std::string pipeline_config_to_json(const PipelineConfig& config);

// Explicit config value, else $FRAILTY_OUT_DIR, else "frailty_out".
std::string resolve_output_dir(const PipelineConfig& config);

struct RunOptions {
  bool force = false;  // rerun stages even when up to date
  int threads = 0;     // > 0 overrides config.threads
};

struct StageReport {
  Stage stage = Stage::Cohort;
  bool executed = false;  // false = artifacts were up to date (no-op)
  std::size_t rows = 0;   // stage-specific row count (subjects, runs, ...)
  double elapsed_ms = 0.0;
  std::vector<std::string> artifacts;
  std::vector<std::string> warnings;
};

struct PipelineResult {
  std::string out_dir;
  std::vector<StageReport> stages;  // in execution order
};

// The default end-to-end chain: cohort, markers, screen, select, score,
// analytics (robustness is opt-in).
std::vector<Stage> default_stages();

// Runs the requested stages in dependency order. Each stage checks its
// predecessors' manifest entries: a missing artifact raises DependencyError
// naming the stage to run, and a fingerprint mismatch (configuration changed
// since the artifact was written) raises DependencyError describing the
// stale stage. Artifacts are deterministic in (config, seed) and independent
// of the thread count; manifest.json carries timings and is not.
PipelineResult run_pipeline(const PipelineConfig& config, const std::vector<Stage>& stages,
                            const RunOptions& options = {});

// Emits reports from existing artifacts without re-running any stage.
// `which` lists report ids, or the single entry "all" for every report whose
// inputs are available. Requires the cohort, markers, select, and score
// artifacts; throws DependencyError when they are missing and DataError for
// unknown report ids.
std::vector<EmittedReport> emit_reports(const PipelineConfig& config,
                                        const std::vector<std::string>& which,
                                        const RunOptions& options = {});

}  // namespace frailty
