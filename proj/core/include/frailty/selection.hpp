#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "frailty/auc.hpp"
#include "frailty/average_rank.hpp"
#include "frailty/cohort.hpp"
#include "frailty/markers.hpp"

namespace frailty {

// Discrimination of one candidate frailty score against one outcome.
struct OutcomeAuc {
  Outcome outcome = Outcome::Death;
  AucResult result;               // AUC with its DeLong interval
  std::size_t eval_subjects = 0;  // evaluation population after restrictions
  std::size_t cases = 0;          // events inside that population
  bool restricted = false;        // true for onset outcomes: prevalent
                                  // baseline cases are excluded
  bool included = false;          // false when the outcome is single-class and
                                  // therefore left out of the mean
};

// Result of scoring one marker subset.
struct SubsetEvaluation {
  std::vector<std::size_t> markers;  // ascending indices into MarkerData names
  std::vector<OutcomeAuc> outcomes;  // canonical outcome order
  double mean_auc = 0.0;             // unweighted mean over included outcomes
  std::size_t n_profiles = 0;        // distinct profiles the subset induces
  std::size_t n_subjects = 0;        // evaluation population size
};

// One candidate evaluation inside the forward search.
struct SelectionTrial {
  std::size_t step = 0;                 // 1-based forward step
  std::vector<std::size_t> candidate;   // markers tried (two at step 1)
  SubsetEvaluation evaluation;          // of current set union candidate
  bool accepted = false;                // became the step's new model
};

struct SelectionOptions {
  RankOptions rank;               // scoring method used during the search
  double min_improvement = 1e-4;  // required mean-AUC gain to keep going
  std::size_t max_markers = 0;    // 0 = no limit
  // Base evaluation population as subject row indices; empty = whole cohort.
  std::vector<std::uint32_t> base_rows;
  // Optional per-step override of the evaluation population (drawn once per
  // step and shared by every candidate of that step). Used by the
  // population-perturbation robustness scenario.
  std::function<std::vector<std::uint32_t>(std::size_t step)> step_rows;

  SelectionOptions() { rank.method = RankMethod::Lpom; }
};

struct SelectionResult {
  std::vector<std::size_t> selected;   // final marker set, ascending
  std::vector<std::string> selected_names;
  SubsetEvaluation final_evaluation;   // on the base population
  std::vector<SelectionTrial> trials;  // every evaluation, in search order
  std::string stop_reason;
  std::vector<std::string> warnings;
};

// A computed frailty index: the dominance order over the evaluation
// population, the per-profile average ranks, and the per-subject index.
struct FrailtyScore {
  Poset poset;
  RankEstimate ranks;
  std::vector<double> profile_fi;  // per poset profile
  std::vector<double> fi;          // per evaluation row, in row order
};

// Builds the dominance order over the subset's profile columns (restricted
// to `rows` when given) and scores every subject.
FrailtyScore score_markers(const MarkerData& data, std::vector<std::size_t> subset,
                           const RankOptions& rank,
                           const std::vector<std::uint32_t>* rows = nullptr);

// Evaluates one AUC per outcome from an already computed score. Onset
// outcomes are evaluated only on subjects free of the condition at baseline;
// the index itself covers the full evaluation population. Outcomes left
// single-class by the restriction are excluded from the mean and reported
// via `warnings`. `rows` must be the population the score was computed on.
SubsetEvaluation evaluate_frailty_score(const Cohort& cohort, const FrailtyScore& score,
                                        std::vector<std::size_t> subset,
                                        const std::vector<std::uint32_t>* rows = nullptr,
                                        std::vector<std::string>* warnings = nullptr);

// Scores the subset with `rank` and evaluates it (score_markers followed by
// evaluate_frailty_score).
SubsetEvaluation evaluate_marker_subset(const Cohort& cohort, const MarkerData& data,
                                        std::vector<std::size_t> subset,
                                        const RankOptions& rank,
                                        const std::vector<std::uint32_t>* rows = nullptr,
                                        std::vector<std::string>* warnings = nullptr);

// Greedy forward search over `candidates` (indices into MarkerData names).
// The first step picks the best pair; each later step adds the single
// candidate with the highest mean AUC, provided the gain over the current
// model exceeds `min_improvement`. Candidates are tried in name order, and a
// strictly-greater rule breaks ties, so the outcome does not depend on the
// order `candidates` is given in. Requires at least two candidates.
SelectionResult forward_select(const Cohort& cohort, const MarkerData& data,
                               const std::vector<std::size_t>& candidates,
                               const SelectionOptions& options = {});

}  // namespace frailty
