#include "frailty/screening.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <set>
#include <thread>

#include <fmt/format.h>

#include "frailty/errors.hpp"
#include "frailty/rng.hpp"
#include "frailty/stats.hpp"
#include "frailty/stepwise.hpp"

namespace frailty {

namespace {

void check_columns(const std::vector<std::vector<std::uint8_t>>& columns,
                   const std::vector<std::string>& names) {
  if (columns.size() != names.size()) {
    throw DataError("screening: variable names do not match columns");
  }
  if (std::set<std::string>(names.begin(), names.end()).size() != names.size()) {
    throw DataError("screening: variable names must be unique");
  }
  for (const auto& col : columns) {
    if (col.size() != columns.front().size()) {
      throw DataError("screening: columns have inconsistent lengths");
    }
  }
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace

OddsRatioResult odds_ratio(const TwoByTwo& table) {
  OddsRatioResult result;
  const bool row_exposed_empty = table.a == 0 && table.b == 0;
  const bool row_unexposed_empty = table.c == 0 && table.d == 0;
  const bool col_event_empty = table.a == 0 && table.c == 0;
  const bool col_noevent_empty = table.b == 0 && table.d == 0;
  if (row_exposed_empty || row_unexposed_empty || col_event_empty || col_noevent_empty) {
    return result;  // undefined: an entire margin is empty
  }
  result.estimable = true;
  double a = static_cast<double>(table.a);
  double b = static_cast<double>(table.b);
  double c = static_cast<double>(table.c);
  double d = static_cast<double>(table.d);
  if (table.a == 0 || table.b == 0 || table.c == 0 || table.d == 0) {
    a += 0.5;
    b += 0.5;
    c += 0.5;
    d += 0.5;
    result.corrected = true;
  }
  result.value = (a * d) / (b * c);
  const double se = std::sqrt(1.0 / a + 1.0 / b + 1.0 / c + 1.0 / d);
  const double z = normal_quantile(0.975);
  result.ci_lo = std::exp(std::log(result.value) - z * se);
  result.ci_hi = std::exp(std::log(result.value) + z * se);
  return result;
}

std::vector<PrevalenceDecision> prevalence_screen(
    const std::vector<std::vector<std::uint8_t>>& columns,
    const std::vector<std::string>& names, double threshold) {
  check_columns(columns, names);
  std::vector<PrevalenceDecision> decisions;
  decisions.reserve(columns.size());
  for (std::size_t j = 0; j < columns.size(); ++j) {
    PrevalenceDecision d;
    d.name = names[j];
    if (!columns[j].empty()) {
      std::size_t positive = 0;
      for (std::uint8_t v : columns[j]) positive += (v > 0);
      d.prevalence = static_cast<double>(positive) / static_cast<double>(columns[j].size());
    }
    d.kept = d.prevalence >= threshold;
    decisions.push_back(std::move(d));
  }
  return decisions;
}

OddsRatioMatrix odds_ratio_matrix(const std::vector<std::vector<std::uint8_t>>& columns,
                                  const std::vector<std::string>& names,
                                  const std::vector<OutcomeResponse>& outcomes) {
  check_columns(columns, names);
  const std::size_t n = columns.empty() ? 0 : columns.front().size();
  OddsRatioMatrix matrix;
  matrix.variables = names;
  for (const auto& outcome : outcomes) {
    if (outcome.label.size() != n ||
        (!outcome.eligible.empty() && outcome.eligible.size() != n)) {
      throw DataError(
          fmt::format("odds_ratio_matrix: outcome '{}' is not aligned with the columns",
                      outcome.name));
    }
    matrix.outcomes.push_back(outcome.name);
  }
  matrix.cells.resize(columns.size());
  for (std::size_t j = 0; j < columns.size(); ++j) {
    for (const auto& outcome : outcomes) {
      TwoByTwo t;
      for (std::size_t i = 0; i < n; ++i) {
        if (!outcome.eligible.empty() && !outcome.eligible[i]) continue;
        const bool exposed = columns[j][i] > 0;
        const bool event = outcome.label[i] != 0;
        if (exposed && event) ++t.a;
        if (exposed && !event) ++t.b;
        if (!exposed && event) ++t.c;
        if (!exposed && !event) ++t.d;
      }
      matrix.cells[j].push_back(odds_ratio(t));
    }
  }
  return matrix;
}

std::vector<ProtectiveDecision> protective_screen(const OddsRatioMatrix& matrix,
                                                  ProtectiveRule rule, int min_protective) {
  std::vector<ProtectiveDecision> decisions;
  decisions.reserve(matrix.variables.size());
  for (std::size_t j = 0; j < matrix.variables.size(); ++j) {
    ProtectiveDecision d;
    d.name = matrix.variables[j];
    for (const auto& cell : matrix.cells[j]) {
      if (!cell.estimable) continue;  // counts as non-protective
      const bool protective = rule == ProtectiveRule::PointEstimate
                                  ? cell.value < 1.0
                                  : cell.ci_hi < 1.0;
      d.protective_outcomes += protective ? 1 : 0;
    }
    d.kept = d.protective_outcomes < min_protective;
    decisions.push_back(std::move(d));
  }
  return decisions;
}

std::vector<std::uint32_t> balanced_subsample(const std::vector<std::uint8_t>& label,
                                              const std::vector<std::uint8_t>& eligible,
                                              std::uint64_t seed) {
  if (!eligible.empty() && eligible.size() != label.size()) {
    throw DataError("balanced_subsample: eligibility mask is not aligned with labels");
  }
  std::vector<std::uint32_t> cases;
  std::vector<std::uint32_t> controls;
  for (std::size_t i = 0; i < label.size(); ++i) {
    if (!eligible.empty() && !eligible[i]) continue;
    (label[i] ? cases : controls).push_back(static_cast<std::uint32_t>(i));
  }
  if (cases.empty() || controls.empty()) {
    throw DataError("balanced_subsample: needs at least one case and one control");
  }
  const auto& minority = cases.size() <= controls.size() ? cases : controls;
  const auto& majority = cases.size() <= controls.size() ? controls : cases;

  Rng rng(seed);
  std::vector<std::size_t> picks;
  rng.sample_indices(majority.size(), minority.size(), picks);

  std::vector<std::uint32_t> out;
  out.reserve(2 * minority.size());
  out.insert(out.end(), minority.begin(), minority.end());
  for (std::size_t k : picks) out.push_back(majority[k]);
  std::sort(out.begin(), out.end());
  return out;
}

VoteSelection vote_select(const std::vector<std::vector<std::uint8_t>>& columns,
                          const std::vector<std::string>& names,
                          const std::vector<OutcomeResponse>& outcomes,
                          const VoteOptions& options) {
  check_columns(columns, names);
  if (options.n_models < 1) throw DataError("vote_select: n_models must be positive");
  const std::size_t n_vars = columns.size();
  const std::size_t n_outcomes = outcomes.size();

  VoteSelection selection;
  selection.table.variables = names;
  selection.table.counts.assign(n_vars, std::vector<int>(n_outcomes, 0));

  // Outcomes with a single class cannot be subsampled; they keep zero votes.
  std::vector<bool> outcome_usable(n_outcomes, true);
  for (std::size_t o = 0; o < n_outcomes; ++o) {
    selection.table.outcomes.push_back(outcomes[o].name);
    std::size_t cases = 0, controls = 0;
    for (std::size_t i = 0; i < outcomes[o].label.size(); ++i) {
      if (!outcomes[o].eligible.empty() && !outcomes[o].eligible[i]) continue;
      (outcomes[o].label[i] ? cases : controls) += 1;
    }
    if (cases == 0 || controls == 0) {
      outcome_usable[o] = false;
      selection.warnings.push_back(fmt::format(
          "outcome '{}' skipped in vote selection: labels contain a single class",
          outcomes[o].name));
    } else if (cases < static_cast<std::size_t>(options.min_cases_warning)) {
      selection.warnings.push_back(
          fmt::format("outcome '{}' has only {} cases; vote selection may be unstable",
                      outcomes[o].name, cases));
    }
  }

  struct Task {
    std::size_t outcome;
    int model;
  };
  std::vector<Task> tasks;
  for (std::size_t o = 0; o < n_outcomes; ++o) {
    if (!outcome_usable[o]) continue;
    for (int m = 0; m < options.n_models; ++m) tasks.push_back({o, m});
  }
  std::vector<std::vector<std::uint8_t>> retained(tasks.size());

  auto run_task = [&](std::size_t t) {
    const Task task = tasks[t];
    const auto& outcome = outcomes[task.outcome];
    const std::uint64_t seed =
        derive_seed(options.seed, task.outcome + 1, static_cast<std::uint64_t>(task.model) + 1);
    const std::vector<std::uint32_t> subjects =
        balanced_subsample(outcome.label, outcome.eligible, seed);

    Design design;
    design.n_rows = subjects.size();
    design.columns.resize(n_vars);
    for (std::size_t j = 0; j < n_vars; ++j) {
      auto& col = design.columns[j];
      col.reserve(subjects.size());
      for (std::uint32_t i : subjects) col.push_back(static_cast<double>(columns[j][i]));
    }
    std::vector<std::uint8_t> response;
    response.reserve(subjects.size());
    for (std::uint32_t i : subjects) response.push_back(outcome.label[i]);

    StepwiseOptions sw;
    sw.logistic = options.logistic;
    const StepwiseResult fit = stepwise_logistic(design, names, response, sw);
    std::vector<std::uint8_t> mask(n_vars, 0);
    for (std::size_t j : fit.selected) mask[j] = 1;
    retained[t] = std::move(mask);
  };

  const int workers =
      std::min<int>(resolve_threads(options.threads), static_cast<int>(tasks.size()) == 0
                                                          ? 1
                                                          : static_cast<int>(tasks.size()));
  if (workers <= 1) {
    for (std::size_t t = 0; t < tasks.size(); ++t) run_task(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        while (true) {
          const std::size_t t = next.fetch_add(1);
          if (t >= tasks.size()) break;
          run_task(t);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  for (std::size_t t = 0; t < tasks.size(); ++t) {
    for (std::size_t j = 0; j < n_vars; ++j) {
      selection.table.counts[j][tasks[t].outcome] += retained[t][j];
    }
  }

  const int needed_votes =
      static_cast<int>(std::ceil(options.vote_share * options.n_models));
  for (std::size_t j = 0; j < n_vars; ++j) {
    int outcomes_hit = 0;
    for (std::size_t o = 0; o < n_outcomes; ++o) {
      if (selection.table.counts[j][o] >= needed_votes) ++outcomes_hit;
    }
    if (outcomes_hit >= options.min_outcomes) {
      selection.core_indices.push_back(j);
      selection.core_set.push_back(names[j]);
    }
  }
  return selection;
}

}  // namespace frailty
