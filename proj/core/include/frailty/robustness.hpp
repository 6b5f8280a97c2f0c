#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "frailty/selection.hpp"

namespace frailty {

// One forward-selection run inside a robustness scenario.
struct RobustnessRun {
  std::string label;            // e.g. "baseline", "rep1_fold3", "perturbed"
  SelectionResult selection;
  std::size_t population = 0;   // subjects the run was restricted to
  // Population-perturbation scenario only: evaluation population drawn at
  // each forward step, for the run log.
  std::vector<std::pair<std::size_t, std::size_t>> step_samples;  // (step, rows)
};

// Variable-by-run inclusion summary (the shape of the robustness table).
struct InclusionMatrix {
  std::vector<std::string> variables;  // candidate names, name-sorted
  std::vector<std::string> runs;       // run labels, in scenario order
  std::vector<std::vector<std::uint8_t>> included;  // [variable][run]
  std::vector<double> mean_auc;        // final mean AUC per run
};

struct RobustnessOptions {
  SelectionOptions selection;
  int folds = 4;         // fold-exclusion scenario
  int repetitions = 2;   // fold-exclusion scenario
  double keep_share = 0.9;  // population-perturbation scenario
  std::uint64_t seed = 42;
};

// Scenario: repeat the variable selection on a second cohort and compare.
// Produces two runs, "baseline" and "second_cohort".
std::vector<RobustnessRun> robustness_second_cohort(
    const Cohort& cohort1, const MarkerData& data1, const Cohort& cohort2,
    const MarkerData& data2, const std::vector<std::size_t>& candidates,
    const RobustnessOptions& options = {});

// Scenario: split the population into `folds` random subsamples; each run
// excludes one fold; the split is redrawn `repetitions` times. Produces
// folds * repetitions runs labelled "rep<r>_fold<f>".
std::vector<RobustnessRun> robustness_fold_exclusion(
    const Cohort& cohort, const MarkerData& data,
    const std::vector<std::size_t>& candidates, const RobustnessOptions& options = {});

// Scenario: a single selection run where every forward step evaluates on a
// fresh random subsample of `keep_share` of the population (the rest is
// reintegrated before the next step). The final set is evaluated on the full
// population.
std::vector<RobustnessRun> robustness_population_perturbation(
    const Cohort& cohort, const MarkerData& data,
    const std::vector<std::size_t>& candidates, const RobustnessOptions& options = {});

// Collapses runs into a variable x run inclusion table over the candidate set.
InclusionMatrix inclusion_matrix(const std::vector<RobustnessRun>& runs,
                                 const MarkerData& data,
                                 const std::vector<std::size_t>& candidates);

}  // namespace frailty
