#include "frailty/discretize.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>

#include <fmt/format.h>

#include "frailty/errors.hpp"
#include "frailty/rng.hpp"
#include "frailty/screening.hpp"

namespace frailty {

namespace {

using u128 = unsigned __int128;

// score_a < score_b on the exact fractions.
bool score_less(const GiniSplit& a, const GiniSplit& b) {
  return static_cast<u128>(a.numerator) * b.denominator <
         static_cast<u128>(b.numerator) * a.denominator;
}

}  // namespace

GiniSplit best_gini_split(const std::vector<std::uint32_t>& counts,
                          const std::vector<std::uint8_t>& labels,
                          const std::vector<std::uint32_t>& rows) {
  // Tally positives per distinct count value within the node.
  std::map<std::uint32_t, std::array<std::uint64_t, 2>> groups;  // value -> {n, pos}
  for (std::uint32_t r : rows) {
    auto& g = groups[counts[r]];
    g[0] += 1;
    g[1] += labels[r] ? 1 : 0;
  }
  GiniSplit best;
  if (groups.size() < 2) return best;

  const std::uint64_t n = rows.size();
  std::uint64_t total_pos = 0;
  for (const auto& [value, g] : groups) total_pos += g[1];
  const std::uint64_t total_neg = n - total_pos;
  if (total_pos == 0 || total_neg == 0) return best;  // pure node

  std::uint64_t n_left = 0;
  std::uint64_t pos_left = 0;
  auto it = groups.begin();
  for (std::size_t boundary = 0; boundary + 1 < groups.size(); ++boundary, ++it) {
    n_left += it->second[0];
    pos_left += it->second[1];
    const std::uint64_t neg_left = n_left - pos_left;
    const std::uint64_t n_right = n - n_left;
    const std::uint64_t pos_right = total_pos - pos_left;
    const std::uint64_t neg_right = n_right - pos_right;
    GiniSplit candidate;
    candidate.found = true;
    candidate.threshold = (static_cast<double>(it->first) +
                           static_cast<double>(std::next(it)->first)) / 2.0;
    candidate.numerator = pos_left * neg_left * n_right + pos_right * neg_right * n_left;
    candidate.denominator = n_left * n_right;
    if (!best.found || score_less(candidate, best)) best = candidate;
  }

  // Keep the split only when it strictly beats the unsplit node:
  // num/den < total_pos*total_neg/n.
  const bool improves = static_cast<u128>(best.numerator) * n <
                        static_cast<u128>(total_pos) * total_neg * best.denominator;
  if (!improves) return GiniSplit{};
  return best;
}

std::vector<double> gini_tree_thresholds(const std::vector<std::uint32_t>& counts,
                                         const std::vector<std::uint8_t>& labels,
                                         const std::vector<std::uint32_t>& rows) {
  std::vector<double> thresholds;
  const GiniSplit root = best_gini_split(counts, labels, rows);
  if (!root.found) return thresholds;
  thresholds.push_back(root.threshold);

  std::vector<std::uint32_t> left;
  std::vector<std::uint32_t> right;
  for (std::uint32_t r : rows) {
    (counts[r] < root.threshold ? left : right).push_back(r);
  }
  for (const auto* child : {&left, &right}) {
    const GiniSplit split = best_gini_split(counts, labels, *child);
    if (split.found) thresholds.push_back(split.threshold);
  }
  return thresholds;
}

DiscretizeResult discretize_counts(const std::vector<std::uint32_t>& raw_counts,
                                   const std::vector<OutcomeVector>& outcomes,
                                   const DiscretizeOptions& options) {
  if (raw_counts.size() != outcomes.size()) {
    throw DataError(fmt::format("discretize_counts: {} counts but {} outcome rows",
                                raw_counts.size(), outcomes.size()));
  }
  if (raw_counts.empty()) throw DataError("discretize_counts: empty input");
  if (options.n_subsamples < 1) {
    throw DataError("discretize_counts: n_subsamples must be at least 1");
  }

  DiscretizeResult result;
  const bool constant = std::all_of(raw_counts.begin(), raw_counts.end(),
                                    [&](std::uint32_t c) { return c == raw_counts.front(); });
  if (constant) {
    result.degenerate = true;
    result.warnings.push_back(
        "count variable is constant; using a single category with no cut points");
    return result;
  }

  const std::vector<std::uint8_t> no_mask;  // all subjects eligible
  // Threshold votes keyed by 2*threshold, which is an exact integer.
  std::map<std::uint64_t, int> votes;
  bool any_outcome = false;
  for (int o = 0; o < kOutcomeCount; ++o) {
    const auto outcome = static_cast<Outcome>(o);
    std::vector<std::uint8_t> labels;
    labels.reserve(outcomes.size());
    std::uint64_t positives = 0;
    for (const OutcomeVector& v : outcomes) {
      const bool flag = outcome_flag(v, outcome);
      labels.push_back(flag ? 1 : 0);
      positives += flag ? 1 : 0;
    }
    if (positives == 0 || positives == outcomes.size()) {
      result.warnings.push_back(fmt::format(
          "outcome '{}' has a single class and was skipped in discretization",
          to_string(outcome)));
      continue;
    }
    any_outcome = true;
    for (int b = 0; b < options.n_subsamples; ++b) {
      const std::vector<std::uint32_t> rows = balanced_subsample(
          labels, no_mask, derive_seed(options.seed, static_cast<std::uint64_t>(o) + 1,
                                       static_cast<std::uint64_t>(b) + 1));
      for (double t : gini_tree_thresholds(raw_counts, labels, rows)) {
        votes[static_cast<std::uint64_t>(std::llround(t * 2.0))] += 1;
      }
    }
  }
  if (!any_outcome) {
    throw DataError("discretize_counts: no outcome has both classes present");
  }

  result.votes.reserve(votes.size());
  for (const auto& [key2, count] : votes) {
    result.votes.push_back({static_cast<double>(key2) / 2.0, count});
  }
  std::stable_sort(result.votes.begin(), result.votes.end(),
                   [](const ThresholdVote& a, const ThresholdVote& b) {
                     if (a.votes != b.votes) return a.votes > b.votes;
                     return a.threshold < b.threshold;
                   });

  for (std::size_t i = 0; i < result.votes.size() && i < options.max_cuts; ++i) {
    result.cuts.push_back(
        static_cast<std::uint32_t>(std::ceil(result.votes[i].threshold)));
  }
  std::sort(result.cuts.begin(), result.cuts.end());
  result.cuts.erase(std::unique(result.cuts.begin(), result.cuts.end()),
                    result.cuts.end());
  return result;
}

}  // namespace frailty
