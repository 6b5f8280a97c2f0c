#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "frailty/cohort.hpp"

namespace frailty {

// Binary split of a count variable: observations with count < threshold go
// left. Thresholds are midpoints between consecutive distinct counts, so they
// are exactly representable and never collide with a data value.
struct GiniSplit {
  bool found = false;
  double threshold = 0.0;
  // Unnormalized split score as an exact integer fraction (lower = purer):
  // score = pos_l*neg_l/n_l + pos_r*neg_r/n_r = numerator / denominator.
  std::uint64_t numerator = 0;
  std::uint64_t denominator = 1;
};

// Best Gini split over `rows` (indices into counts/labels). A split is
// reported only when it strictly reduces the node impurity; ties between
// candidate thresholds resolve to the smallest threshold.
GiniSplit best_gini_split(const std::vector<std::uint32_t>& counts,
                          const std::vector<std::uint8_t>& labels,
                          const std::vector<std::uint32_t>& rows);

// Thresholds chosen by a depth-2 tree: the root split plus (at most) one
// split per child, each child split kept only when it strictly reduces that
// child's impurity. Returned in the order root, left child, right child.
std::vector<double> gini_tree_thresholds(const std::vector<std::uint32_t>& counts,
                                         const std::vector<std::uint8_t>& labels,
                                         const std::vector<std::uint32_t>& rows);

struct DiscretizeOptions {
  int n_subsamples = 10;       // trees per outcome
  std::size_t max_cuts = 2;    // modal thresholds kept (3 categories)
  std::uint64_t seed = 42;
};

struct ThresholdVote {
  double threshold = 0.0;
  int votes = 0;
};

struct DiscretizeResult {
  // Ascending integer cut points; category = number of cuts <= count.
  std::vector<std::uint32_t> cuts;
  // Every pooled threshold with its vote count, descending by votes then
  // ascending by threshold (the first max_cuts entries produced `cuts`).
  std::vector<ThresholdVote> votes;
  bool degenerate = false;     // constant counts: single category, no cuts
  std::vector<std::string> warnings;
};

// Supervised discretization of one count variable: for every outcome with
// both classes present and every balanced subsample, fit a depth-2 Gini tree
// and pool the split thresholds; the modal thresholds become the cut points.
// Throws DataError when raw_counts and outcomes are misaligned, when
// n_subsamples < 1, or when no outcome has both classes.
DiscretizeResult discretize_counts(const std::vector<std::uint32_t>& raw_counts,
                                   const std::vector<OutcomeVector>& outcomes,
                                   const DiscretizeOptions& options = {});

}  // namespace frailty
