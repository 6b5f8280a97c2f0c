#include "frailty/selection.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>

#include "frailty/errors.hpp"
#include "frailty/poset.hpp"

namespace frailty {

namespace {

std::vector<std::uint32_t> all_rows(std::size_t n) {
  std::vector<std::uint32_t> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = static_cast<std::uint32_t>(i);
  return rows;
}

void note(std::vector<std::string>* warnings, std::string message) {
  if (warnings) warnings->push_back(std::move(message));
}

}  // namespace

FrailtyScore score_markers(const MarkerData& data, std::vector<std::size_t> subset,
                           const RankOptions& rank,
                           const std::vector<std::uint32_t>* rows) {
  if (subset.empty()) throw DataError("marker scoring: empty subset");
  std::sort(subset.begin(), subset.end());
  subset.erase(std::unique(subset.begin(), subset.end()), subset.end());
  for (std::size_t m : subset) {
    if (m >= data.names.size()) {
      throw DataError(fmt::format("marker scoring: index {} out of range", m));
    }
  }
  const std::vector<std::uint32_t> everyone =
      rows ? std::vector<std::uint32_t>() : all_rows(data.profiles.size());
  const std::vector<std::uint32_t>& eval_rows = rows ? *rows : everyone;
  if (eval_rows.empty()) throw DataError("marker scoring: empty evaluation population");
  for (std::uint32_t r : eval_rows) {
    if (r >= data.profiles.size()) {
      throw DataError("marker scoring: evaluation row out of range");
    }
  }

  std::vector<Profile> profiles;
  profiles.reserve(eval_rows.size());
  for (std::uint32_t r : eval_rows) {
    const Profile& full = data.profiles[r];
    Profile sub(subset.size());
    for (std::size_t k = 0; k < subset.size(); ++k) sub[k] = full[subset[k]];
    profiles.push_back(std::move(sub));
  }

  FrailtyScore score;
  score.poset = build_poset(profiles);
  score.ranks = average_ranks(score.poset, rank);
  score.profile_fi = profile_frailty_index(score.poset, score.ranks);
  score.fi = subject_frailty_index(score.poset, score.profile_fi);
  return score;
}

SubsetEvaluation evaluate_frailty_score(const Cohort& cohort, const FrailtyScore& score,
                                        std::vector<std::size_t> subset,
                                        const std::vector<std::uint32_t>* rows,
                                        std::vector<std::string>* warnings) {
  std::sort(subset.begin(), subset.end());
  subset.erase(std::unique(subset.begin(), subset.end()), subset.end());

  const std::vector<std::uint32_t> everyone =
      rows ? std::vector<std::uint32_t>() : all_rows(cohort.size());
  const std::vector<std::uint32_t>& eval_rows = rows ? *rows : everyone;
  if (score.fi.size() != eval_rows.size()) {
    throw DataError("score evaluation: index vector does not match the evaluation rows");
  }
  const std::vector<double>& fi = score.fi;

  SubsetEvaluation eval;
  eval.markers = std::move(subset);
  eval.n_profiles = score.poset.size();
  eval.n_subjects = eval_rows.size();

  double total = 0.0;
  std::size_t included = 0;
  for (int k = 0; k < kOutcomeCount; ++k) {
    const auto outcome = static_cast<Outcome>(k);
    OutcomeAuc entry;
    entry.outcome = outcome;
    entry.restricted = outcome_is_incidence(outcome);

    std::vector<double> scores;
    std::vector<std::uint8_t> labels;
    scores.reserve(eval_rows.size());
    labels.reserve(eval_rows.size());
    for (std::size_t i = 0; i < eval_rows.size(); ++i) {
      const OutcomeVector& v = cohort.subjects[eval_rows[i]].outcomes;
      if (entry.restricted && outcome_baseline_flag(v, outcome)) continue;
      scores.push_back(fi[i]);
      const bool event = outcome_flag(v, outcome);
      labels.push_back(event ? 1 : 0);
      entry.cases += event;
    }
    entry.eval_subjects = labels.size();

    if (entry.cases == 0 || entry.cases == labels.size()) {
      entry.included = false;
      note(warnings,
           fmt::format("outcome '{}' is single-class ({} events over {} subjects) "
                       "and was excluded from the mean AUC",
                       to_string(outcome), entry.cases, labels.size()));
    } else {
      entry.result = delong_auc(scores, labels);
      entry.included = true;
      total += entry.result.auc;
      ++included;
    }
    eval.outcomes.push_back(std::move(entry));
  }
  if (included == 0) {
    throw DataError("marker subset evaluation: every outcome is single-class");
  }
  eval.mean_auc = total / static_cast<double>(included);
  return eval;
}

SubsetEvaluation evaluate_marker_subset(const Cohort& cohort, const MarkerData& data,
                                        std::vector<std::size_t> subset,
                                        const RankOptions& rank,
                                        const std::vector<std::uint32_t>* rows,
                                        std::vector<std::string>* warnings) {
  if (data.profiles.size() != cohort.size()) {
    throw DataError("marker subset evaluation: marker data does not match the cohort");
  }
  const std::vector<std::uint32_t> everyone =
      rows ? std::vector<std::uint32_t>() : all_rows(cohort.size());
  const std::vector<std::uint32_t>& eval_rows = rows ? *rows : everyone;
  const FrailtyScore score = score_markers(data, subset, rank, &eval_rows);
  return evaluate_frailty_score(cohort, score, std::move(subset), &eval_rows, warnings);
}

SelectionResult forward_select(const Cohort& cohort, const MarkerData& data,
                               const std::vector<std::size_t>& candidates,
                               const SelectionOptions& options) {
  std::vector<std::size_t> pool = candidates;
  std::sort(pool.begin(), pool.end());
  pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
  for (std::size_t m : pool) {
    if (m >= data.names.size()) {
      throw DataError(fmt::format("forward selection: candidate index {} out of range", m));
    }
  }
  if (pool.size() < 2) {
    throw DataError("forward selection needs at least two candidate markers");
  }

  // Candidates are tried in name order so that ties resolve lexicographically.
  std::sort(pool.begin(), pool.end(), [&](std::size_t a, std::size_t b) {
    return data.names[a] < data.names[b];
  });

  SelectionResult result;
  std::set<std::string> seen_warnings;
  auto absorb = [&](std::vector<std::string>& batch) {
    for (std::string& w : batch) {
      if (seen_warnings.insert(w).second) result.warnings.push_back(std::move(w));
    }
    batch.clear();
  };

  std::vector<std::size_t> model;
  double current_mean = 0.0;
  std::size_t step = 1;

  while (true) {
    if (options.max_markers != 0 && model.size() >= options.max_markers) {
      result.stop_reason = "maximum model size reached";
      break;
    }
    std::vector<std::size_t> remaining;
    for (std::size_t m : pool) {
      if (std::find(model.begin(), model.end(), m) == model.end()) remaining.push_back(m);
    }
    if (remaining.empty()) {
      result.stop_reason = "no candidates left";
      break;
    }
    if (model.empty() && remaining.size() < 2) {
      result.stop_reason = "fewer than two candidates available for the first step";
      break;
    }

    std::vector<std::uint32_t> step_rows;
    const std::vector<std::uint32_t>* rows = nullptr;
    if (options.step_rows) {
      step_rows = options.step_rows(step);
      rows = &step_rows;
    } else if (!options.base_rows.empty()) {
      rows = &options.base_rows;
    }

    // Build the step's candidate list: all pairs first, single additions later.
    std::vector<std::vector<std::size_t>> tries;
    if (model.empty()) {
      for (std::size_t i = 0; i < remaining.size(); ++i) {
        for (std::size_t j = i + 1; j < remaining.size(); ++j) {
          tries.push_back({remaining[i], remaining[j]});
        }
      }
    } else {
      for (std::size_t m : remaining) tries.push_back({m});
    }

    std::size_t best = tries.size();
    double best_mean = -1.0;
    const std::size_t first_trial = result.trials.size();
    for (std::size_t t = 0; t < tries.size(); ++t) {
      std::vector<std::size_t> subset = model;
      subset.insert(subset.end(), tries[t].begin(), tries[t].end());
      std::vector<std::string> batch;
      SelectionTrial trial;
      trial.step = step;
      trial.candidate = tries[t];
      trial.evaluation =
          evaluate_marker_subset(cohort, data, std::move(subset), options.rank, rows, &batch);
      absorb(batch);
      if (trial.evaluation.mean_auc > best_mean) {
        best_mean = trial.evaluation.mean_auc;
        best = t;
      }
      result.trials.push_back(std::move(trial));
    }

    const bool improves = model.empty() || best_mean > current_mean + options.min_improvement;
    if (!improves) {
      result.stop_reason = "no candidate improves the mean AUC beyond the tolerance";
      break;
    }
    result.trials[first_trial + best].accepted = true;
    for (std::size_t m : tries[best]) model.push_back(m);
    current_mean = best_mean;
    ++step;
  }

  std::sort(model.begin(), model.end());
  result.selected = model;
  for (std::size_t m : model) result.selected_names.push_back(data.names[m]);
  if (!model.empty()) {
    std::vector<std::string> batch;
    const std::vector<std::uint32_t>* rows =
        options.base_rows.empty() ? nullptr : &options.base_rows;
    result.final_evaluation =
        evaluate_marker_subset(cohort, data, model, options.rank, rows, &batch);
    absorb(batch);
  }
  return result;
}

}  // namespace frailty
