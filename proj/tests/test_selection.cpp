#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "frailty/cohort.hpp"
#include "frailty/errors.hpp"
#include "frailty/markers.hpp"
#include "frailty/selection.hpp"

using namespace frailty;

namespace {

// Cohort + marker fixture with known structure: markers 0-2 each carry an
// independent component of the latent risk, marker 3 is constant, markers
// 4-5 are pure noise. Outcome probabilities increase in the latent sum.
struct Fixture {
  Cohort cohort;
  MarkerData data;
};

Fixture make_fixture(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::bernoulli_distribution informative(0.4);
  std::uniform_int_distribution<int> tri(0, 2);
  std::bernoulli_distribution noise_a(0.3);
  std::bernoulli_distribution noise_b(0.5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Fixture f;
  f.cohort.spec = CohortSpec::for_outcome_year(2016);
  f.data.names = {"m0", "m1", "m2", "m3", "m4", "m5"};
  f.data.level_counts = {2, 2, 3, 2, 2, 2};

  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t x0 = informative(rng);
    const std::uint8_t x1 = informative(rng);
    const std::uint8_t x2 = static_cast<std::uint8_t>(tri(rng));
    const std::uint8_t x4 = noise_a(rng);
    const std::uint8_t x5 = noise_b(rng);
    f.data.profiles.push_back({x0, x1, x2, 0, x4, x5});

    const double risk = 0.05 + 0.18 * static_cast<double>(x0 + x1 + x2);
    Subject s;
    s.id = "s" + std::to_string(i);
    s.age_years = 70;
    s.outcomes.death = unit(rng) < risk;
    s.outcomes.er_red_code = unit(rng) < risk;
    s.outcomes.hospitalisation = unit(rng) < risk;
    s.outcomes.disability_onset = unit(rng) < risk;
    s.outcomes.dementia_onset = unit(rng) < risk;
    s.outcomes.femur_fracture = unit(rng) < risk;
    f.cohort.subjects.push_back(std::move(s));
  }
  return f;
}

std::vector<double> accepted_means(const SelectionResult& result) {
  std::vector<double> means;
  for (const SelectionTrial& t : result.trials) {
    if (t.accepted) means.push_back(t.evaluation.mean_auc);
  }
  return means;
}

}  // namespace

TEST_CASE("forward selection recovers informative markers") {
  const Fixture f = make_fixture(400, 20240521);
  const std::vector<std::size_t> candidates = {0, 1, 2, 3, 4, 5};

  SelectionOptions options;
  options.min_improvement = 0.01;  // large enough to shut out noise
  const SelectionResult result = forward_select(f.cohort, f.data, candidates, options);

  // The three informative markers are found; the constant one never is.
  for (std::size_t m : {std::size_t{0}, std::size_t{1}, std::size_t{2}}) {
    CHECK(std::find(result.selected.begin(), result.selected.end(), m) !=
          result.selected.end());
  }
  CHECK(std::find(result.selected.begin(), result.selected.end(), std::size_t{3}) ==
        result.selected.end());
  CHECK(std::is_sorted(result.selected.begin(), result.selected.end()));
  CHECK(result.selected_names.size() == result.selected.size());
  for (std::size_t i = 0; i < result.selected.size(); ++i) {
    CHECK(result.selected_names[i] == f.data.names[result.selected[i]]);
  }
  CHECK_FALSE(result.stop_reason.empty());

  SUBCASE("accepted models improve strictly, starting from a pair") {
    const std::vector<double> means = accepted_means(result);
    REQUIRE(!means.empty());
    for (std::size_t i = 1; i < means.size(); ++i) CHECK(means[i] > means[i - 1]);
    CHECK(result.trials.front().step == 1);
    CHECK(result.trials.front().candidate.size() == 2);
    CHECK(result.final_evaluation.mean_auc == doctest::Approx(means.back()));
    CHECK(result.final_evaluation.mean_auc > 0.65);
  }

  SUBCASE("the same markers are found across seeds") {
    for (unsigned seed : {7u, 99u, 1234u}) {
      const Fixture g = make_fixture(400, seed);
      const SelectionResult r = forward_select(g.cohort, g.data, candidates, options);
      for (std::size_t m : {std::size_t{0}, std::size_t{1}, std::size_t{2}}) {
        CAPTURE(seed);
        CHECK(std::find(r.selected.begin(), r.selected.end(), m) != r.selected.end());
      }
      CHECK(std::find(r.selected.begin(), r.selected.end(), std::size_t{3}) ==
            r.selected.end());
    }
  }
}

TEST_CASE("candidate order does not change the selection") {
  const Fixture f = make_fixture(300, 42);
  SelectionOptions options;
  options.min_improvement = 1e-4;

  const SelectionResult forward =
      forward_select(f.cohort, f.data, {0, 1, 2, 3, 4, 5}, options);
  const SelectionResult backward =
      forward_select(f.cohort, f.data, {5, 4, 3, 2, 1, 0}, options);

  CHECK(forward.selected == backward.selected);
  CHECK(forward.stop_reason == backward.stop_reason);
  CHECK(forward.final_evaluation.mean_auc ==
        doctest::Approx(backward.final_evaluation.mean_auc));
  REQUIRE(forward.trials.size() == backward.trials.size());
  for (std::size_t i = 0; i < forward.trials.size(); ++i) {
    CHECK(forward.trials[i].candidate == backward.trials[i].candidate);
    CHECK(forward.trials[i].accepted == backward.trials[i].accepted);
  }
}

TEST_CASE("selection options control the stopping rule") {
  const Fixture f = make_fixture(300, 5);

  SUBCASE("a marker cap stops the search") {
    SelectionOptions options;
    options.max_markers = 2;
    const SelectionResult r = forward_select(f.cohort, f.data, {0, 1, 2, 4, 5}, options);
    CHECK(r.selected.size() == 2);
    CHECK(r.stop_reason == "maximum model size reached");
  }

  SUBCASE("an unreachable improvement threshold stops after the first pair") {
    SelectionOptions options;
    options.min_improvement = 0.5;
    const SelectionResult r = forward_select(f.cohort, f.data, {0, 1, 2, 4, 5}, options);
    CHECK(r.selected.size() == 2);
    CHECK(r.stop_reason == "no candidate improves the mean AUC beyond the tolerance");
  }

  SUBCASE("fewer than two candidates is an error") {
    CHECK_THROWS_AS(forward_select(f.cohort, f.data, {0}), DataError);
    CHECK_THROWS_AS(forward_select(f.cohort, f.data, {}), DataError);
  }

  SUBCASE("out-of-range candidates are rejected") {
    CHECK_THROWS_AS(forward_select(f.cohort, f.data, {0, 99}), DataError);
  }
}

TEST_CASE("subset evaluation matches hand-computed AUCs") {
  // Six subjects, one dichotomous marker; exact ranking gives FI 0 / 1.
  Cohort cohort;
  cohort.spec = CohortSpec::for_outcome_year(2016);
  MarkerData data;
  data.names = {"m"};
  data.level_counts = {2};
  for (int i = 0; i < 6; ++i) {
    Subject s;
    s.id = "s" + std::to_string(i);
    s.age_years = 70;
    cohort.subjects.push_back(std::move(s));
    data.profiles.push_back({static_cast<std::uint8_t>(i >= 3)});
  }
  // Death: subjects 4, 5 (no restriction). Disability: onset for 3 and 4,
  // subject 0 already disabled at baseline (dropped from that evaluation).
  cohort.subjects[4].outcomes.death = true;
  cohort.subjects[5].outcomes.death = true;
  cohort.subjects[3].outcomes.disability_onset = true;
  cohort.subjects[4].outcomes.disability_onset = true;
  cohort.subjects[0].outcomes.baseline_disability = true;

  RankOptions rank;
  rank.method = RankMethod::Exact;
  std::vector<std::string> warnings;
  const SubsetEvaluation eval =
      evaluate_marker_subset(cohort, data, {0}, rank, nullptr, &warnings);

  CHECK(eval.n_subjects == 6);
  CHECK(eval.n_profiles == 2);
  REQUIRE(eval.outcomes.size() == kOutcomeCount);

  const OutcomeAuc& death = eval.outcomes[0];
  CHECK(death.outcome == Outcome::Death);
  CHECK(death.included);
  CHECK_FALSE(death.restricted);
  CHECK(death.eval_subjects == 6);
  CHECK(death.cases == 2);
  // Cases at FI {1, 1} vs controls {0, 0, 0, 1}: (2*3 + 0.5*2) / 8 = 7/8.
  CHECK(death.result.auc == doctest::Approx(7.0 / 8.0));

  const OutcomeAuc& disability = eval.outcomes[3];
  CHECK(disability.outcome == Outcome::DisabilityOnset);
  CHECK(disability.included);
  CHECK(disability.restricted);
  CHECK(disability.eval_subjects == 5);  // subject 0 is excluded
  CHECK(disability.cases == 2);
  // Cases at FI {1, 1} vs controls {0, 0, 1}: (2*2 + 0.5*2) / 6 = 5/6.
  CHECK(disability.result.auc == doctest::Approx(5.0 / 6.0));

  // The four outcomes without events are excluded from the mean, each with a
  // warning naming it.
  std::size_t excluded = 0;
  for (const OutcomeAuc& o : eval.outcomes) excluded += !o.included;
  CHECK(excluded == 4);
  CHECK(warnings.size() == 4);
  CHECK(eval.mean_auc == doctest::Approx(0.5 * (7.0 / 8.0 + 5.0 / 6.0)));

  SUBCASE("a cohort with no events at all cannot be evaluated") {
    Cohort empty_outcomes = cohort;
    for (Subject& s : empty_outcomes.subjects) s.outcomes = OutcomeVector{};
    CHECK_THROWS_AS(evaluate_marker_subset(empty_outcomes, data, {0}, rank), DataError);
  }

  SUBCASE("evaluating a precomputed score gives the same answer") {
    const FrailtyScore score = score_markers(data, {0}, rank);
    const SubsetEvaluation direct = evaluate_frailty_score(cohort, score, {0});
    CHECK(direct.mean_auc == doctest::Approx(eval.mean_auc));
    REQUIRE(direct.outcomes.size() == eval.outcomes.size());
    for (std::size_t i = 0; i < eval.outcomes.size(); ++i) {
      CHECK(direct.outcomes[i].included == eval.outcomes[i].included);
      if (eval.outcomes[i].included) {
        CHECK(direct.outcomes[i].result.auc ==
              doctest::Approx(eval.outcomes[i].result.auc));
      }
    }
  }

  SUBCASE("a constant marker column never improves the model") {
    // Adding the constant column leaves every dominance relation unchanged,
    // so the index and all AUCs are identical.
    MarkerData wide = data;
    wide.names = {"m", "z"};
    wide.level_counts = {2, 2};
    for (Profile& p : wide.profiles) p.push_back(0);
    const SubsetEvaluation base = evaluate_marker_subset(cohort, wide, {0}, rank);
    const SubsetEvaluation both = evaluate_marker_subset(cohort, wide, {0, 1}, rank);
    CHECK(both.mean_auc == doctest::Approx(base.mean_auc));
    CHECK(both.n_profiles == base.n_profiles);
  }
}

TEST_CASE("evaluation on a restricted population") {
  const Fixture f = make_fixture(200, 77);
  std::vector<std::uint32_t> rows;
  for (std::uint32_t r = 0; r < 120; ++r) rows.push_back(r);

  RankOptions rank;
  rank.method = RankMethod::Lpom;
  const SubsetEvaluation eval =
      evaluate_marker_subset(f.cohort, f.data, {0, 1, 2}, rank, &rows);
  CHECK(eval.n_subjects == 120);
  for (const OutcomeAuc& o : eval.outcomes) {
    if (o.included) CHECK(o.eval_subjects <= 120);
  }

  // The same rows given as the selection base population flow through.
  SelectionOptions options;
  options.base_rows = rows;
  options.min_improvement = 0.01;
  const SelectionResult r = forward_select(f.cohort, f.data, {0, 1, 2, 4, 5}, options);
  CHECK(r.final_evaluation.n_subjects == 120);
}
