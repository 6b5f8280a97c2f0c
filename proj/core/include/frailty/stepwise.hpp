#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "frailty/logistic.hpp"

namespace frailty {

struct StepwiseOptions {
  LogisticOptions logistic;
};

struct StepwiseAction {
  bool added = false;        // false = removed
  std::string variable;
  double aic_after = 0.0;
};

struct StepwiseResult {
  std::vector<std::size_t> selected;  // indices into the candidate columns, ascending
  std::vector<StepwiseAction> path;   // accepted actions in order
  double aic = 0.0;                   // AIC of the final model
  LogisticFit final_fit;              // fit on the selected columns (ascending order)
  int evaluated_models = 0;
};

// Bidirectional stepwise logistic regression: starting from the
// intercept-only model, each round evaluates every single-variable addition
// and removal, accepts the action with the lowest AIC if it is strictly
// below the current model's AIC, and stops otherwise. Candidates are
// evaluated in lexicographic name order and AIC ties are broken by name,
// so the outcome does not depend on column order. Separated fits are never
// accepted. Names must be unique and aligned with the candidate columns.
StepwiseResult stepwise_logistic(const Design& candidates,
                                 const std::vector<std::string>& names,
                                 const std::vector<std::uint8_t>& response,
                                 const StepwiseOptions& options = {});

}  // namespace frailty
