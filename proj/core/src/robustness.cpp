#include "frailty/robustness.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "frailty/errors.hpp"
#include "frailty/rng.hpp"

namespace frailty {

namespace {

RobustnessRun run_selection(std::string label, const Cohort& cohort,
                            const MarkerData& data,
                            const std::vector<std::size_t>& candidates,
                            const SelectionOptions& options) {
  RobustnessRun run;
  run.label = std::move(label);
  run.population = options.base_rows.empty() ? cohort.size() : options.base_rows.size();
  run.selection = forward_select(cohort, data, candidates, options);
  return run;
}

}  // namespace

std::vector<RobustnessRun> robustness_second_cohort(
    const Cohort& cohort1, const MarkerData& data1, const Cohort& cohort2,
    const MarkerData& data2, const std::vector<std::size_t>& candidates,
    const RobustnessOptions& options) {
  if (data1.names != data2.names) {
    throw DataError("second-cohort robustness: the two cohorts use different marker sets");
  }
  std::vector<RobustnessRun> runs;
  runs.push_back(run_selection("baseline", cohort1, data1, candidates, options.selection));
  runs.push_back(
      run_selection("second_cohort", cohort2, data2, candidates, options.selection));
  return runs;
}

std::vector<RobustnessRun> robustness_fold_exclusion(
    const Cohort& cohort, const MarkerData& data,
    const std::vector<std::size_t>& candidates, const RobustnessOptions& options) {
  if (options.folds < 2) throw DataError("fold-exclusion robustness needs >= 2 folds");
  if (options.repetitions < 1) {
    throw DataError("fold-exclusion robustness needs >= 1 repetition");
  }
  const std::size_t n = cohort.size();
  if (n < static_cast<std::size_t>(options.folds)) {
    throw DataError("fold-exclusion robustness: cohort smaller than the fold count");
  }

  std::vector<RobustnessRun> runs;
  for (int rep = 0; rep < options.repetitions; ++rep) {
    // One random equal split per repetition: shuffle rows, deal them out.
    std::vector<std::uint32_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<std::uint32_t>(i);
    Rng rng(derive_seed(options.seed, static_cast<std::uint64_t>(rep) + 1, 0xF01D));
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.bounded(n - i));
      std::swap(order[i], order[j]);
    }
    std::vector<int> fold_of(n);
    for (std::size_t pos = 0; pos < n; ++pos) {
      fold_of[order[pos]] = static_cast<int>(pos % static_cast<std::size_t>(options.folds));
    }

    for (int fold = 0; fold < options.folds; ++fold) {
      SelectionOptions sel = options.selection;
      sel.base_rows.clear();
      for (std::size_t i = 0; i < n; ++i) {
        if (fold_of[i] != fold) sel.base_rows.push_back(static_cast<std::uint32_t>(i));
      }
      runs.push_back(run_selection(fmt::format("rep{}_fold{}", rep + 1, fold + 1),
                                   cohort, data, candidates, sel));
    }
  }
  return runs;
}

std::vector<RobustnessRun> robustness_population_perturbation(
    const Cohort& cohort, const MarkerData& data,
    const std::vector<std::size_t>& candidates, const RobustnessOptions& options) {
  if (!(options.keep_share > 0.0) || options.keep_share > 1.0) {
    throw DataError("population-perturbation robustness: keep_share must lie in (0, 1]");
  }
  const std::size_t n = cohort.size();
  const auto kept = static_cast<std::size_t>(
      std::max<long long>(1, std::llround(options.keep_share * static_cast<double>(n))));

  RobustnessRun run;
  run.label = "perturbed";
  run.population = n;

  SelectionOptions sel = options.selection;
  auto* samples = &run.step_samples;
  const std::uint64_t seed = options.seed;
  sel.step_rows = [n, kept, seed, samples](std::size_t step) {
    std::vector<std::size_t> drawn;
    Rng rng(derive_seed(seed, step, 0x5B));
    rng.sample_indices(n, kept, drawn);
    std::vector<std::uint32_t> rows(drawn.begin(), drawn.end());
    std::sort(rows.begin(), rows.end());
    samples->emplace_back(step, rows.size());
    return rows;
  };
  run.selection = forward_select(cohort, data, candidates, sel);

  std::vector<RobustnessRun> runs;
  runs.push_back(std::move(run));
  return runs;
}

InclusionMatrix inclusion_matrix(const std::vector<RobustnessRun>& runs,
                                 const MarkerData& data,
                                 const std::vector<std::size_t>& candidates) {
  InclusionMatrix matrix;
  std::vector<std::size_t> pool = candidates;
  std::sort(pool.begin(), pool.end(), [&](std::size_t a, std::size_t b) {
    return data.names[a] < data.names[b];
  });
  for (std::size_t m : pool) matrix.variables.push_back(data.names.at(m));

  for (const RobustnessRun& run : runs) {
    matrix.runs.push_back(run.label);
    matrix.mean_auc.push_back(run.selection.final_evaluation.mean_auc);
  }
  matrix.included.assign(matrix.variables.size(),
                         std::vector<std::uint8_t>(runs.size(), 0));
  for (std::size_t r = 0; r < runs.size(); ++r) {
    for (const std::string& name : runs[r].selection.selected_names) {
      for (std::size_t v = 0; v < matrix.variables.size(); ++v) {
        if (matrix.variables[v] == name) matrix.included[v][r] = 1;
      }
    }
  }
  return matrix;
}

}  // namespace frailty
