#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include <doctest.h>

#include "frailty/auc.hpp"
#include "frailty/errors.hpp"
#include "frailty/rng.hpp"
#include "frailty/stats.hpp"

using namespace frailty;

namespace {

// Independent oracle: enumerate every (positive, negative) pair and count
// strict wins and ties as integers, dividing once at the end.
double pair_counting_auc(const std::vector<double>& scores,
                         const std::vector<std::uint8_t>& labels) {
  std::uint64_t wins = 0, ties = 0, pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!labels[i]) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j]) continue;
      ++pairs;
      if (scores[i] > scores[j]) {
        ++wins;
      } else if (scores[i] == scores[j]) {
        ++ties;
      }
    }
  }
  return (static_cast<double>(wins) + 0.5 * static_cast<double>(ties)) /
         static_cast<double>(pairs);
}

struct Sample {
  std::vector<double> scores;
  std::vector<std::uint8_t> labels;
};

Sample random_sample(Rng& rng, std::size_t n, int grid, double positive_rate) {
  Sample s;
  s.scores.reserve(n);
  s.labels.reserve(n);
  bool has_pos = false, has_neg = false;
  for (std::size_t i = 0; i < n; ++i) {
    // Integer grid scores force heavy ties, the regime FI scores live in.
    s.scores.push_back(static_cast<double>(rng.bounded(static_cast<std::uint64_t>(grid))));
    const bool pos = rng.bernoulli(positive_rate);
    s.labels.push_back(pos ? 1 : 0);
    has_pos |= pos;
    has_neg |= !pos;
  }
  if (!has_pos) s.labels[0] = 1;
  if (!has_neg) s.labels[s.labels.size() - 1] = 0;
  return s;
}

// Scores where positives ~ N(mu, 1) and negatives ~ N(0, 1); the true AUC
// is normal_cdf(mu / sqrt(2)).
Sample binormal_sample(Rng& rng, std::size_t n_pos, std::size_t n_neg, double mu) {
  Sample s;
  for (std::size_t i = 0; i < n_pos; ++i) {
    s.scores.push_back(mu + rng.normal());
    s.labels.push_back(1);
  }
  for (std::size_t i = 0; i < n_neg; ++i) {
    s.scores.push_back(rng.normal());
    s.labels.push_back(0);
  }
  return s;
}

}  // namespace

TEST_CASE("auc matches the worked four-subject fixture") {
  const std::vector<double> scores{0.1, 0.4, 0.35, 0.8};
  const std::vector<std::uint8_t> labels{0, 0, 1, 1};
  CHECK(auc(scores, labels) == doctest::Approx(0.75).epsilon(1e-15));
}

TEST_CASE("auc equals brute-force pair counting exactly, ties included") {
  Rng rng(20240811);
  for (int rep = 0; rep < 400; ++rep) {
    const std::size_t n = 2 + rng.bounded(120);
    const int grid = 1 + static_cast<int>(rng.bounded(12));
    auto s = random_sample(rng, n, grid, 0.2 + 0.6 * rng.uniform());
    CHECK(auc(s.scores, s.labels) == pair_counting_auc(s.scores, s.labels));
  }
}

TEST_CASE("auc boundary behaviour") {
  SUBCASE("perfect separation gives 1") {
    CHECK(auc({1, 2, 3, 10, 11}, {0, 0, 0, 1, 1}) == 1.0);
  }
  SUBCASE("all scores equal gives one half") {
    CHECK(auc({5, 5, 5, 5}, {0, 1, 0, 1}) == 0.5);
  }
  SUBCASE("single-class labels throw") {
    CHECK_THROWS_AS(auc({1, 2}, {1, 1}), DataError);
    CHECK_THROWS_AS(auc({1, 2}, {0, 0}), DataError);
  }
  SUBCASE("length mismatch and NaN throw") {
    CHECK_THROWS_AS(auc({1, 2, 3}, {0, 1}), DataError);
    CHECK_THROWS_AS(auc({1, std::nan("")}, {0, 1}), DataError);
  }
}

TEST_CASE("auc is invariant under strictly monotone transforms") {
  Rng rng(7);
  for (int rep = 0; rep < 50; ++rep) {
    auto s = random_sample(rng, 60, 8, 0.4);
    const double base = auc(s.scores, s.labels);
    auto transformed = s.scores;
    for (double& v : transformed) v = std::exp(0.3 * v) + 2.0;
    CHECK(auc(transformed, s.labels) == base);
  }
}

TEST_CASE("label swap mirrors the AUC and its interval") {
  Rng rng(99);
  auto s = random_sample(rng, 200, 10, 0.35);
  auto flipped = s.labels;
  for (auto& y : flipped) y = y ? 0 : 1;
  const AucResult a = delong_auc(s.scores, s.labels);
  const AucResult b = delong_auc(s.scores, flipped);
  CHECK(b.auc == doctest::Approx(1.0 - a.auc).epsilon(1e-12));
  CHECK(b.ci_lo == doctest::Approx(1.0 - a.ci_hi).epsilon(1e-9));
  CHECK(b.ci_hi == doctest::Approx(1.0 - a.ci_lo).epsilon(1e-9));
  CHECK(b.variance == doctest::Approx(a.variance).epsilon(1e-12));
}

TEST_CASE("delong degenerate cases collapse to a point interval") {
  SUBCASE("perfect separation") {
    const AucResult r = delong_auc({1, 2, 3, 10, 11, 12}, {0, 0, 0, 1, 1, 1});
    CHECK(r.auc == 1.0);
    CHECK(r.degenerate);
    CHECK(r.ci_lo == 1.0);
    CHECK(r.ci_hi == 1.0);
  }
  SUBCASE("all ties") {
    const AucResult r = delong_auc({4, 4, 4, 4}, {0, 1, 0, 1});
    CHECK(r.auc == 0.5);
    CHECK(r.degenerate);
    CHECK(r.ci_lo == 0.5);
    CHECK(r.ci_hi == 0.5);
  }
}

TEST_CASE("delong interval width shrinks as the sample grows") {
  const double mu = std::sqrt(2.0) * normal_quantile(0.8);
  double last_width = 2.0;
  for (std::size_t n : {100u, 400u, 1600u}) {
    // Fresh draw per size from a fixed seed stream; widths scale ~ 1/sqrt(n),
    // far larger than sampling noise between consecutive sizes.
    Rng rng(derive_seed(505, n));
    auto s = binormal_sample(rng, n / 2, n / 2, mu);
    const AucResult r = delong_auc(s.scores, s.labels);
    const double width = r.ci_hi - r.ci_lo;
    CHECK(width < last_width);
    last_width = width;
  }
}

TEST_CASE("delong interval tracks a percentile bootstrap on a fixed sample") {
  Rng rng(424242);
  const double mu = std::sqrt(2.0) * normal_quantile(0.8);
  auto s = binormal_sample(rng, 100, 100, mu);
  const AucResult r = delong_auc(s.scores, s.labels);

  const int n_boot = 2000;
  std::vector<double> boot;
  boot.reserve(n_boot);
  const std::size_t n = s.scores.size();
  for (int b = 0; b < n_boot; ++b) {
    std::vector<double> scores;
    std::vector<std::uint8_t> labels;
    scores.reserve(n);
    labels.reserve(n);
    bool pos = false, neg = false;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t k = rng.bounded(n);
      scores.push_back(s.scores[k]);
      labels.push_back(s.labels[k]);
      pos |= labels.back() == 1;
      neg |= labels.back() == 0;
    }
    if (!pos || !neg) {
      --b;
      continue;
    }
    boot.push_back(auc(scores, labels));
  }
  std::sort(boot.begin(), boot.end());
  const double lo = boot[static_cast<std::size_t>(0.025 * n_boot)];
  const double hi = boot[static_cast<std::size_t>(0.975 * n_boot) - 1];
  CHECK(std::fabs(r.ci_lo - lo) < 0.02);
  CHECK(std::fabs(r.ci_hi - hi) < 0.02);
}

TEST_CASE("delong coverage is near nominal on binormal data") {
  const double mu = std::sqrt(2.0) * normal_quantile(0.8);
  const double truth = normal_cdf(mu / std::sqrt(2.0));
  int covered = 0;
  const int reps = 300;
  for (int rep = 0; rep < reps; ++rep) {
    Rng rng(derive_seed(31337, rep));
    auto s = binormal_sample(rng, 100, 100, mu);
    const AucResult r = delong_auc(s.scores, s.labels);
    if (r.ci_lo <= truth && truth <= r.ci_hi) ++covered;
  }
  // Nominal 95%; a run of 300 should stay within a generous band.
  const double coverage = static_cast<double>(covered) / reps;
  CHECK(coverage > 0.90);
  CHECK(coverage < 0.99);
}

TEST_CASE("normal quantile and CDF are consistent") {
  for (double p : {0.001, 0.025, 0.2, 0.5, 0.8, 0.975, 0.999}) {
    CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-12));
  }
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963985).epsilon(1e-9));
  CHECK_THROWS_AS(normal_quantile(0.0), DataError);
}

TEST_CASE("spearman fixtures") {
  SUBCASE("identical ranks") {
    const auto r = spearman({1, 2, 3, 4, 5}, {10, 20, 30, 40, 50});
    CHECK(r.defined);
    CHECK(r.rho == doctest::Approx(1.0));
  }
  SUBCASE("reversed ranks") {
    const auto r = spearman({1, 2, 3, 4, 5}, {5, 4, 3, 2, 1});
    CHECK(r.defined);
    CHECK(r.rho == doctest::Approx(-1.0));
  }
  SUBCASE("one swap gives 0.9") {
    const auto r = spearman({1, 2, 3, 4, 5}, {1, 3, 2, 4, 5});
    CHECK(r.defined);
    CHECK(r.rho == doctest::Approx(0.9).epsilon(1e-12));
  }
  SUBCASE("constant input undefined") {
    const auto r = spearman({1, 1, 1}, {1, 2, 3});
    CHECK_FALSE(r.defined);
  }
}
