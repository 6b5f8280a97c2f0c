#include "frailty/stepwise.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <set>

#include "frailty/errors.hpp"

namespace frailty {

namespace {

Design subset_design(const Design& all, const std::vector<std::size_t>& cols) {
  Design d;
  d.n_rows = all.n_rows;
  d.columns.reserve(cols.size());
  for (std::size_t j : cols) d.columns.push_back(all.columns[j]);
  return d;
}

// Warm start for the subset fit: intercept plus the current coefficient of
// each retained column (zero for a newly added one).
std::vector<double> warm_start(const std::vector<std::size_t>& cols, double intercept,
                               const std::vector<double>& coef_by_candidate) {
  std::vector<double> init(cols.size() + 1, 0.0);
  init[0] = intercept;
  for (std::size_t k = 0; k < cols.size(); ++k) init[k + 1] = coef_by_candidate[cols[k]];
  return init;
}

}  // namespace

StepwiseResult stepwise_logistic(const Design& candidates,
                                 const std::vector<std::string>& names,
                                 const std::vector<std::uint8_t>& response,
                                 const StepwiseOptions& options) {
  const std::size_t p = candidates.columns.size();
  if (names.size() != p) {
    throw DataError("stepwise_logistic: names do not match candidate columns");
  }
  if (std::set<std::string>(names.begin(), names.end()).size() != p) {
    throw DataError("stepwise_logistic: candidate names must be unique");
  }

  // Evaluation order and tie-breaks are by name, so column order is inert.
  std::vector<std::size_t> by_name(p);
  std::iota(by_name.begin(), by_name.end(), std::size_t{0});
  std::sort(by_name.begin(), by_name.end(),
            [&](std::size_t a, std::size_t b) { return names[a] < names[b]; });

  StepwiseResult result;
  std::vector<bool> in_model(p, false);
  std::vector<double> coef_by_candidate(p, 0.0);

  LogisticOptions base = options.logistic;
  base.initial.clear();
  LogisticFit current = fit_logistic(subset_design(candidates, {}), response, base);
  ++result.evaluated_models;
  double current_aic = current.aic;
  double current_intercept = current.coefficients[0];

  while (true) {
    double best_aic = std::numeric_limits<double>::infinity();
    std::size_t best_var = p;
    bool best_added = false;
    LogisticFit best_fit;
    std::vector<std::size_t> best_cols;

    auto consider = [&](std::size_t var, bool added) {
      std::vector<std::size_t> cols;
      cols.reserve(p);
      for (std::size_t j = 0; j < p; ++j) {
        const bool keep = (j == var) ? added : in_model[j];
        if (keep) cols.push_back(j);
      }
      LogisticOptions opt = options.logistic;
      opt.initial = warm_start(cols, current_intercept, coef_by_candidate);
      const LogisticFit fit = fit_logistic(subset_design(candidates, cols), response, opt);
      ++result.evaluated_models;
      if (fit.separation) return;
      // Strictly lower AIC wins; exact ties go to the lexicographically
      // smaller variable name, additions before removals.
      const bool better =
          fit.aic < best_aic ||
          (fit.aic == best_aic &&
           (best_var == p || names[var] < names[best_var] ||
            (names[var] == names[best_var] && added && !best_added)));
      if (better) {
        best_aic = fit.aic;
        best_var = var;
        best_added = added;
        best_fit = fit;
        best_cols = std::move(cols);
      }
    };

    for (std::size_t idx : by_name) {
      if (!in_model[idx]) consider(idx, true);
    }
    for (std::size_t idx : by_name) {
      if (in_model[idx]) consider(idx, false);
    }

    if (best_var == p || !(best_aic < current_aic)) break;

    in_model[best_var] = best_added;
    current = best_fit;
    current_aic = best_aic;
    current_intercept = current.coefficients[0];
    std::fill(coef_by_candidate.begin(), coef_by_candidate.end(), 0.0);
    for (std::size_t k = 0; k < best_cols.size(); ++k) {
      coef_by_candidate[best_cols[k]] = current.coefficients[k + 1];
    }
    result.path.push_back({best_added, names[best_var], best_aic});
  }

  for (std::size_t j = 0; j < p; ++j) {
    if (in_model[j]) result.selected.push_back(j);
  }
  result.aic = current_aic;
  result.final_fit = current;
  return result;
}

}  // namespace frailty
