#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace frailty {

// Area under the ROC curve with its nonparametric variance and confidence
// interval (DeLong, Biometrics 1988).
struct AucResult {
  double auc = 0.0;        // Mann-Whitney probability, ties counted one half
  double variance = 0.0;   // placement-component variance of the estimate
  double ci_lo = 0.0;      // Wald interval on the requested level,
  double ci_hi = 0.0;      // clipped to [0, 1]
  double level = 0.95;
  std::size_t n_positive = 0;
  std::size_t n_negative = 0;
  bool degenerate = false;  // zero estimated variance (e.g. perfect split)
};

// Mann-Whitney AUC: the fraction of (positive, negative) pairs where the
// positive scores strictly higher, ties counted one half. Win and tie pair
// counts are accumulated as integers over sorted tie groups, so the result
// is exactly what brute-force pair enumeration gives. Throws DataError when
// labels contain a single class or the inputs are inconsistent.
double auc(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels);

// AUC plus DeLong variance and a Wald confidence interval at `level`
// (default 95%). Zero estimated variance yields the point interval
// [auc, auc] and sets `degenerate`.
AucResult delong_auc(const std::vector<double>& scores,
                     const std::vector<std::uint8_t>& labels, double level = 0.95);

}  // namespace frailty
