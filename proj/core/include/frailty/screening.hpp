#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "frailty/logistic.hpp"

namespace frailty {

// 2x2 contingency table: a = exposed with event, b = exposed without,
// c = unexposed with event, d = unexposed without.
struct TwoByTwo {
  std::uint64_t a = 0, b = 0, c = 0, d = 0;
};

struct OddsRatioResult {
  double value = 0.0;
  double ci_lo = 0.0, ci_hi = 0.0;  // 95% Wald interval on the log scale
  bool estimable = false;
  bool corrected = false;  // the +0.5 continuity correction was applied
};

// Odds ratio (a*d)/(b*c). When any single cell is zero, 0.5 is added to all
// four cells (Haldane-Anscombe). Two zero cells in the same table margin
// leave the ratio undefined: `estimable` is false.
OddsRatioResult odds_ratio(const TwoByTwo& table);

// --- Step 1: prevalence filter -------------------------------------------

struct PrevalenceDecision {
  std::string name;
  double prevalence = 0.0;  // share of subjects with level > 0
  bool kept = false;        // kept iff prevalence >= threshold
};

// One level column per variable, aligned with `names`; exposure means
// level > 0.
std::vector<PrevalenceDecision> prevalence_screen(
    const std::vector<std::vector<std::uint8_t>>& columns,
    const std::vector<std::string>& names, double threshold = 0.01);

// --- Step 2: protective-effect filter -------------------------------------

// Outcome labels plus an optional eligibility mask (empty = everyone).
// Ineligible subjects are excluded from tables, model subsamples, and case
// counts for that outcome.
struct OutcomeResponse {
  std::string name;
  std::vector<std::uint8_t> label;
  std::vector<std::uint8_t> eligible;
};

struct OddsRatioMatrix {
  std::vector<std::string> variables;
  std::vector<std::string> outcomes;
  std::vector<std::vector<OddsRatioResult>> cells;  // [variable][outcome]
};

OddsRatioMatrix odds_ratio_matrix(const std::vector<std::vector<std::uint8_t>>& columns,
                                  const std::vector<std::string>& names,
                                  const std::vector<OutcomeResponse>& outcomes);

enum class ProtectiveRule {
  PointEstimate,  // protective iff OR < 1
  CiExcludesOne,  // protective iff ci_hi < 1
};

struct ProtectiveDecision {
  std::string name;
  int protective_outcomes = 0;
  bool kept = false;  // dropped iff protective on >= min_protective outcomes
};

std::vector<ProtectiveDecision> protective_screen(const OddsRatioMatrix& matrix,
                                                  ProtectiveRule rule = ProtectiveRule::PointEstimate,
                                                  int min_protective = 2);

// --- Step 3: balanced-subsample stepwise votes -----------------------------

// All members of the minority class plus an equal-size uniform sample of the
// majority class without replacement, restricted to eligible subjects.
// Returned indices are ascending. Deterministic per seed.
std::vector<std::uint32_t> balanced_subsample(const std::vector<std::uint8_t>& label,
                                              const std::vector<std::uint8_t>& eligible,
                                              std::uint64_t seed);

struct VoteOptions {
  int n_models = 100;       // stepwise fits per outcome
  double vote_share = 0.5;  // inclusion threshold within an outcome
  int min_outcomes = 3;     // outcomes that must reach the threshold
  std::uint64_t seed = 42;
  int threads = 1;          // <= 0 means all hardware threads
  int min_cases_warning = 30;
  LogisticOptions logistic;
};

struct VoteTable {
  std::vector<std::string> variables;
  std::vector<std::string> outcomes;
  std::vector<std::vector<int>> counts;  // [variable][outcome], 0..n_models
};

struct VoteSelection {
  VoteTable table;
  std::vector<std::size_t> core_indices;  // into `names`, ascending
  std::vector<std::string> core_set;      // same variables by name
  std::vector<std::string> warnings;
};

// For each outcome, fits `n_models` bidirectional stepwise logistic
// regressions on independent balanced subsamples and counts how often each
// variable is retained. A variable joins the core set when its count
// reaches `vote_share * n_models` in at least `min_outcomes` outcomes.
// Model seeds derive from (seed, outcome, model), so results do not depend
// on scheduling or thread count.
VoteSelection vote_select(const std::vector<std::vector<std::uint8_t>>& columns,
                          const std::vector<std::string>& names,
                          const std::vector<OutcomeResponse>& outcomes,
                          const VoteOptions& options = {});

}  // namespace frailty
