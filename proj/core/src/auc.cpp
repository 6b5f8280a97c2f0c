#include "frailty/auc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "frailty/errors.hpp"
#include "frailty/stats.hpp"

namespace frailty {

namespace {

struct SortedScores {
  std::vector<std::size_t> order;  // indices sorted by ascending score
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
};

SortedScores sort_scores(const std::vector<double>& scores,
                         const std::vector<std::uint8_t>& labels) {
  if (scores.size() != labels.size()) {
    throw DataError("auc: scores and labels have different lengths");
  }
  if (scores.empty()) throw DataError("auc: empty input");
  for (double s : scores) {
    if (std::isnan(s)) throw DataError("auc: scores contain NaN");
  }
  SortedScores out;
  out.order.resize(scores.size());
  std::iota(out.order.begin(), out.order.end(), std::size_t{0});
  std::sort(out.order.begin(), out.order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  for (std::uint8_t y : labels) {
    if (y) {
      ++out.n_pos;
    } else {
      ++out.n_neg;
    }
  }
  if (out.n_pos == 0 || out.n_neg == 0) {
    throw DataError("auc: labels contain a single class");
  }
  return out;
}

}  // namespace

double auc(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels) {
  const SortedScores s = sort_scores(scores, labels);
  // Walk tie groups in ascending score order. A positive in the current
  // group strictly beats every negative seen in earlier groups and ties
  // every negative inside the group.
  std::uint64_t wins = 0;
  std::uint64_t tie_pairs = 0;
  std::uint64_t neg_below = 0;
  std::size_t i = 0;
  const std::size_t n = s.order.size();
  while (i < n) {
    std::size_t j = i;
    std::uint64_t group_pos = 0;
    std::uint64_t group_neg = 0;
    while (j < n && scores[s.order[j]] == scores[s.order[i]]) {
      if (labels[s.order[j]]) {
        ++group_pos;
      } else {
        ++group_neg;
      }
      ++j;
    }
    wins += group_pos * neg_below;
    tie_pairs += group_pos * group_neg;
    neg_below += group_neg;
    i = j;
  }
  const double pairs =
      static_cast<double>(s.n_pos) * static_cast<double>(s.n_neg);
  return (static_cast<double>(wins) + 0.5 * static_cast<double>(tie_pairs)) / pairs;
}

AucResult delong_auc(const std::vector<double>& scores,
                     const std::vector<std::uint8_t>& labels, double level) {
  if (!(level > 0.0 && level < 1.0)) {
    throw DataError("delong_auc: confidence level must lie in (0, 1)");
  }
  const SortedScores s = sort_scores(scores, labels);
  const std::size_t n = s.order.size();

  // Per-score-group counts of positives/negatives strictly below and inside
  // the group give every placement value in one sorted pass.
  // Placement of positive i: fraction of negatives it beats (ties half).
  // Placement of negative j: fraction of positives it is beaten by.
  std::vector<double> v_pos;  // one entry per positive
  std::vector<double> v_neg;  // one entry per negative
  v_pos.reserve(s.n_pos);
  v_neg.reserve(s.n_neg);
  std::uint64_t neg_below = 0;
  std::uint64_t pos_below = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    std::uint64_t group_pos = 0;
    std::uint64_t group_neg = 0;
    while (j < n && scores[s.order[j]] == scores[s.order[i]]) {
      if (labels[s.order[j]]) {
        ++group_pos;
      } else {
        ++group_neg;
      }
      ++j;
    }
    const double pos_placement =
        (static_cast<double>(neg_below) + 0.5 * static_cast<double>(group_neg)) /
        static_cast<double>(s.n_neg);
    const double neg_placement =
        (static_cast<double>(s.n_pos - pos_below - group_pos) +
         0.5 * static_cast<double>(group_pos)) /
        static_cast<double>(s.n_pos);
    for (std::uint64_t k = 0; k < group_pos; ++k) v_pos.push_back(pos_placement);
    for (std::uint64_t k = 0; k < group_neg; ++k) v_neg.push_back(neg_placement);
    neg_below += group_neg;
    pos_below += group_pos;
    i = j;
  }

  AucResult result;
  result.auc = auc(scores, labels);
  result.level = level;
  result.n_positive = s.n_pos;
  result.n_negative = s.n_neg;
  const double s10 = sample_variance(v_pos);
  const double s01 = sample_variance(v_neg);
  result.variance = s10 / static_cast<double>(s.n_pos) +
                    s01 / static_cast<double>(s.n_neg);
  if (result.variance <= 0.0) {
    result.variance = 0.0;
    result.degenerate = true;
    result.ci_lo = result.ci_hi = result.auc;
    return result;
  }
  const double z = normal_quantile(0.5 * (1.0 + level));
  const double half_width = z * std::sqrt(result.variance);
  result.ci_lo = std::max(0.0, result.auc - half_width);
  result.ci_hi = std::min(1.0, result.auc + half_width);
  return result;
}

}  // namespace frailty
