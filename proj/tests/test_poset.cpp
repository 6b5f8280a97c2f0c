#include "frailty/average_rank.hpp"
#include "frailty/errors.hpp"
#include "frailty/linext_sampler.hpp"
#include "frailty/poset.hpp"
#include "frailty/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <vector>

using namespace frailty;

namespace {

// Independent reference: enumerate every ordering of the subjects, keep the
// ones consistent with dominance, and average each subject's position.
std::vector<double> brute_force_ranks(const std::vector<Profile>& subjects) {
    const int n = static_cast<int>(subjects.size());
    std::vector<std::vector<bool>> must_precede(n, std::vector<bool>(n, false));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j)
                must_precede[i][j] =
                    compare_profiles(subjects[i], subjects[j]) == ProfileRelation::Less;
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<double> position_sum(n, 0.0);
    long long count = 0;
    do {
        bool ok = true;
        for (int a = 0; a < n && ok; ++a)
            for (int b = a + 1; b < n && ok; ++b)
                if (must_precede[perm[b]][perm[a]]) ok = false;
        if (!ok) continue;
        ++count;
        for (int k = 0; k < n; ++k) position_sum[perm[k]] += k + 1;
    } while (std::next_permutation(perm.begin(), perm.end()));
    std::vector<double> ar(n);
    for (int i = 0; i < n; ++i) ar[i] = position_sum[i] / static_cast<double>(count);
    return ar;
}

// Per-profile view of the brute-force subject ranks; also checks that
// subjects sharing a profile agree.
std::vector<double> brute_force_profile_ranks(const std::vector<Profile>& subjects,
                                              const Poset& poset) {
    auto subject_ar = brute_force_ranks(subjects);
    std::vector<double> ar(poset.size(), -1.0);
    for (std::size_t i = 0; i < subjects.size(); ++i) {
        const auto p = poset.subject_profile[i];
        if (ar[p] < 0)
            ar[p] = subject_ar[i];
        else
            REQUIRE(ar[p] == doctest::Approx(subject_ar[i]).epsilon(1e-12));
    }
    return ar;
}

std::vector<Profile> random_subjects(Rng& rng, int max_subjects = 8) {
    const int n = 1 + static_cast<int>(rng.bounded(max_subjects));
    const int k = 1 + static_cast<int>(rng.bounded(3));
    std::vector<Profile> subjects(n);
    for (auto& p : subjects) {
        p.resize(k);
        for (auto& level : p) level = static_cast<std::uint8_t>(rng.bounded(3));
    }
    return subjects;
}

RankEstimate exact_for(const std::vector<Profile>& subjects, const Poset& poset) {
    RankOptions opt;
    opt.method = RankMethod::Exact;
    opt.exact_max_subjects = 20;
    (void)subjects;
    return average_ranks(poset, opt);
}

} // namespace

TEST_CASE("profile comparison follows componentwise dominance") {
    CHECK(compare_profiles({0, 1}, {0, 1}) == ProfileRelation::Equal);
    CHECK(compare_profiles({0, 1}, {1, 1}) == ProfileRelation::Less);
    CHECK(compare_profiles({2, 1}, {1, 1}) == ProfileRelation::Greater);
    CHECK(compare_profiles({0, 1}, {1, 0}) == ProfileRelation::Incomparable);
    CHECK_THROWS_AS((void)compare_profiles({0}, {0, 1}), DataError);
}

TEST_CASE("poset construction: weights, relation, covers, sweep order") {
    // b duplicates a profile; e sits on top of everything.
    std::vector<Profile> subjects = {{0, 0}, {0, 0}, {1, 0}, {0, 1}, {1, 1}};
    Poset poset = build_poset(subjects);
    REQUIRE(poset.size() == 4);
    CHECK(poset.total_weight == 5);
    CHECK(poset.weight[0] == 2);
    CHECK(poset.subject_profile == std::vector<std::uint32_t>{0, 0, 1, 2, 3});

    CHECK(poset.is_below(0, 1));
    CHECK(poset.is_below(0, 3));
    CHECK(!poset.is_below(1, 0));
    CHECK(poset.incomparable(1, 2));

    // Transitive reduction: the bottom is not a cover of the top.
    auto lc = poset.lower_covers[3];
    std::sort(lc.begin(), lc.end());
    CHECK(lc == std::vector<std::uint32_t>{1, 2});
    CHECK(poset.lower_covers[0].empty());
    CHECK(poset.upper_covers[0] == std::vector<std::uint32_t>{1, 2});

    CHECK(poset.weight_below(3) == 4);
    CHECK(poset.weight_above(0) == 3);
    CHECK(poset.weight_incomparable(1) == 1);

    // Sweep order is topological: dominated profiles first.
    std::vector<int> pos(poset.size());
    for (std::size_t i = 0; i < poset.size(); ++i) pos[poset.sweep_order[i]] = static_cast<int>(i);
    for (std::size_t i = 0; i < poset.size(); ++i)
        for (std::uint32_t j : poset.lower_covers[i]) CHECK(pos[j] < pos[static_cast<int>(i)]);
}

TEST_CASE("dominance relation is a strict partial order on random inputs") {
    Rng rng(2024);
    for (int rep = 0; rep < 200; ++rep) {
        auto subjects = random_subjects(rng);
        Poset poset = build_poset(subjects);
        const std::size_t n = poset.size();
        for (std::size_t i = 0; i < n; ++i) {
            REQUIRE(!poset.is_below(i, i));
            for (std::size_t j = 0; j < n; ++j) {
                if (poset.is_below(j, i)) REQUIRE(!poset.is_below(i, j));
                for (std::size_t k = 0; k < n; ++k)
                    if (poset.is_below(j, i) && poset.is_below(k, j)) REQUIRE(poset.is_below(k, i));
            }
        }
        // Covers agree with the relation: a cover pair has nothing between.
        for (std::size_t i = 0; i < n; ++i)
            for (std::uint32_t j : poset.lower_covers[i]) {
                REQUIRE(poset.is_below(j, i));
                for (std::size_t k = 0; k < n; ++k)
                    REQUIRE(!(poset.is_below(k, i) && poset.is_below(j, k)));
            }
    }
}

TEST_CASE("exact ranks: three-profile chain") {
    std::vector<Profile> subjects = {{0}, {1}, {2}};
    Poset poset = build_poset(subjects);
    auto est = exact_for(subjects, poset);
    CHECK(est.average_rank[0] == doctest::Approx(1.0));
    CHECK(est.average_rank[1] == doctest::Approx(2.0));
    CHECK(est.average_rank[2] == doctest::Approx(3.0));
    auto fi = profile_frailty_index(poset, est);
    CHECK(fi[0] == doctest::Approx(0.0));
    CHECK(fi[1] == doctest::Approx(0.5));
    CHECK(fi[2] == doctest::Approx(1.0));
}

TEST_CASE("exact ranks: two incomparable profiles share the middle") {
    std::vector<Profile> subjects = {{0, 1}, {1, 0}};
    Poset poset = build_poset(subjects);
    auto est = exact_for(subjects, poset);
    CHECK(est.average_rank[0] == doctest::Approx(1.5));
    CHECK(est.average_rank[1] == doctest::Approx(1.5));
}

TEST_CASE("exact ranks: diamond") {
    std::vector<Profile> subjects = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
    Poset poset = build_poset(subjects);
    auto est = exact_for(subjects, poset);
    CHECK(est.average_rank[0] == doctest::Approx(1.0));
    CHECK(est.average_rank[1] == doctest::Approx(2.5));
    CHECK(est.average_rank[2] == doctest::Approx(2.5));
    CHECK(est.average_rank[3] == doctest::Approx(4.0));
}

TEST_CASE("exact ranks: duplicated profile in a chain") {
    std::vector<Profile> subjects = {{0}, {0}, {1}};
    Poset poset = build_poset(subjects);
    auto est = exact_for(subjects, poset);
    CHECK(est.average_rank[0] == doctest::Approx(1.5));
    CHECK(est.average_rank[1] == doctest::Approx(3.0));
    auto fi = profile_frailty_index(poset, est);
    CHECK(fi[0] == doctest::Approx(0.25));
    CHECK(fi[1] == doctest::Approx(1.0));
}

TEST_CASE("exact ranks: duplication shifts ranks of incomparable profiles") {
    // Two subjects share profile a; c dominates a; b is incomparable to both.
    std::vector<Profile> subjects = {{1, 0}, {1, 0}, {0, 2}, {2, 0}};
    Poset poset = build_poset(subjects);
    auto est = exact_for(subjects, poset);
    CHECK(est.average_rank[0] == doctest::Approx(1.875));
    CHECK(est.average_rank[1] == doctest::Approx(2.5));
    CHECK(est.average_rank[2] == doctest::Approx(3.75));
}

TEST_CASE("exact ranks match order enumeration on random cohorts") {
    Rng rng(77);
    for (int rep = 0; rep < 120; ++rep) {
        auto subjects = random_subjects(rng);
        Poset poset = build_poset(subjects);
        auto expect = brute_force_profile_ranks(subjects, poset);
        auto est = exact_for(subjects, poset);
        double weighted_sum = 0.0;
        for (std::size_t p = 0; p < poset.size(); ++p) {
            CHECK(est.average_rank[p] == doctest::Approx(expect[p]).epsilon(1e-10));
            weighted_sum += est.average_rank[p] * poset.weight[p];
        }
        const double n = static_cast<double>(poset.total_weight);
        CHECK(weighted_sum == doctest::Approx(n * (n + 1.0) / 2.0).epsilon(1e-10));
    }
}

TEST_CASE("exact ranks refuse cohorts above the enumeration cap") {
    std::vector<Profile> subjects(11, Profile{0});
    subjects[10] = Profile{1};
    Poset poset = build_poset(subjects);
    RankOptions opt;
    opt.method = RankMethod::Exact; // default cap is 10 subjects
    CHECK_THROWS_AS((void)average_ranks(poset, opt), DataError);
    opt.exact_max_subjects = 11;
    auto est = average_ranks(poset, opt);
    CHECK(est.average_rank[0] == doctest::Approx(5.5));
    CHECK(est.average_rank[1] == doctest::Approx(11.0));
}

TEST_CASE("closed-form ranks are exact on chains and antichains") {
    RankOptions lpom;
    lpom.method = RankMethod::Lpom;
    {
        std::vector<Profile> subjects = {{0}, {0}, {1}, {2}, {2}, {2}};
        Poset poset = build_poset(subjects);
        auto approx = average_ranks(poset, lpom);
        auto exact = exact_for(subjects, poset);
        for (std::size_t p = 0; p < poset.size(); ++p)
            CHECK(approx.average_rank[p] == doctest::Approx(exact.average_rank[p]).epsilon(1e-12));
    }
    {
        std::vector<Profile> subjects = {{0, 2}, {1, 1}, {1, 1}, {2, 0}, {2, 0}};
        Poset poset = build_poset(subjects);
        auto approx = average_ranks(poset, lpom);
        auto exact = exact_for(subjects, poset);
        for (std::size_t p = 0; p < poset.size(); ++p)
            CHECK(approx.average_rank[p] == doctest::Approx(exact.average_rank[p]).epsilon(1e-12));
    }
}

TEST_CASE("closed-form ranks preserve strict dominance") {
    Rng rng(555);
    RankOptions lpom;
    lpom.method = RankMethod::Lpom;
    for (int rep = 0; rep < 300; ++rep) {
        auto subjects = random_subjects(rng, 30);
        Poset poset = build_poset(subjects);
        auto est = average_ranks(poset, lpom);
        for (std::size_t i = 0; i < poset.size(); ++i)
            for (std::size_t j = 0; j < poset.size(); ++j)
                if (poset.is_below(j, i)) CHECK(est.average_rank[j] < est.average_rank[i]);
    }
}

TEST_CASE("exact ranks preserve strict dominance") {
    Rng rng(556);
    for (int rep = 0; rep < 150; ++rep) {
        auto subjects = random_subjects(rng);
        Poset poset = build_poset(subjects);
        auto est = exact_for(subjects, poset);
        for (std::size_t i = 0; i < poset.size(); ++i)
            for (std::size_t j = 0; j < poset.size(); ++j)
                if (poset.is_below(j, i)) CHECK(est.average_rank[j] < est.average_rank[i]);
    }
}

TEST_CASE("sampled ranks agree with exact ranks within the reported error") {
    Rng rng(909);
    int checked = 0;
    for (int rep = 0; rep < 25; ++rep) {
        auto subjects = random_subjects(rng);
        Poset poset = build_poset(subjects);
        auto exact = exact_for(subjects, poset);
        RankOptions mc;
        mc.method = RankMethod::MonteCarlo;
        mc.samples = 4000;
        mc.seed = derive_seed(4242, rep);
        auto est = average_ranks(poset, mc);
        REQUIRE(est.samples_used == 4000);
        for (std::size_t p = 0; p < poset.size(); ++p) {
            const double tolerance = std::max(4.0 * est.std_error[p], 1e-9);
            CHECK(std::abs(est.average_rank[p] - exact.average_rank[p]) <= tolerance);
            ++checked;
        }
        // Weighted total rank is conserved by every sample, hence exactly by
        // the mean.
        double weighted_sum = 0.0;
        for (std::size_t p = 0; p < poset.size(); ++p)
            weighted_sum += est.average_rank[p] * poset.weight[p];
        const double n = static_cast<double>(poset.total_weight);
        CHECK(weighted_sum == doctest::Approx(n * (n + 1.0) / 2.0).epsilon(1e-9));
    }
    CHECK(checked > 40);
}

TEST_CASE("sampled ranks see duplicated subjects, not just distinct profiles") {
    // Regression guard: treating the distinct-profile order as unweighted
    // biases the duplicated profile's rank to 11/6 instead of 15/8.
    std::vector<Profile> subjects = {{1, 0}, {1, 0}, {0, 2}, {2, 0}};
    Poset poset = build_poset(subjects);
    RankOptions mc;
    mc.method = RankMethod::MonteCarlo;
    mc.samples = 20000;
    mc.seed = 31337;
    auto est = average_ranks(poset, mc);
    CHECK(std::abs(est.average_rank[0] - 1.875) <= 4.0 * est.std_error[0]);
    CHECK(4.0 * est.std_error[0] < 0.02); // tight enough to reject 11/6
    CHECK(std::abs(est.average_rank[1] - 2.5) <= 4.0 * est.std_error[1]);
    CHECK(std::abs(est.average_rank[2] - 3.75) <= 4.0 * est.std_error[2]);
}

TEST_CASE("comparable profiles have zero sampling variance") {
    std::vector<Profile> subjects = {{0}, {1}, {1}, {2}};
    Poset poset = build_poset(subjects);
    RankOptions mc;
    mc.method = RankMethod::MonteCarlo;
    mc.samples = 200;
    auto est = average_ranks(poset, mc);
    for (std::size_t p = 0; p < poset.size(); ++p) {
        CHECK(est.std_error[p] == 0.0);
        CHECK(est.average_rank[p] == doctest::Approx(exact_for(subjects, poset).average_rank[p]));
    }
}

TEST_CASE("sampling is deterministic and thread-count independent") {
    Rng rng(1212);
    std::vector<Profile> subjects;
    for (int i = 0; i < 400; ++i) {
        Profile p(3);
        for (auto& level : p) level = static_cast<std::uint8_t>(rng.bounded(4));
        subjects.push_back(std::move(p));
    }
    Poset poset = build_poset(subjects);
    RankOptions mc;
    mc.method = RankMethod::MonteCarlo;
    mc.samples = 600;
    mc.seed = 99;
    mc.threads = 1;
    auto a = average_ranks(poset, mc);
    mc.threads = 4;
    auto b = average_ranks(poset, mc);
    mc.threads = 3;
    auto c = average_ranks(poset, mc);
    CHECK(a.average_rank == b.average_rank);
    CHECK(a.std_error == b.std_error);
    CHECK(a.average_rank == c.average_rank);
}

TEST_CASE("a constant marker column changes nothing") {
    Rng rng(31);
    for (int rep = 0; rep < 20; ++rep) {
        auto subjects = random_subjects(rng);
        auto padded = subjects;
        for (auto& p : padded) p.push_back(1);
        Poset a = build_poset(subjects);
        Poset b = build_poset(padded);
        RankOptions mc;
        mc.method = RankMethod::MonteCarlo;
        mc.samples = 64;
        mc.seed = derive_seed(7, rep);
        auto ea = average_ranks(a, mc);
        auto eb = average_ranks(b, mc);
        CHECK(ea.average_rank == eb.average_rank);
        RankOptions lpom;
        lpom.method = RankMethod::Lpom;
        CHECK(average_ranks(a, lpom).average_rank == average_ranks(b, lpom).average_rank);
    }
}

TEST_CASE("single profile and empty cohorts") {
    {
        Poset poset = build_poset({});
        RankOptions opt;
        opt.method = RankMethod::Lpom;
        CHECK(average_ranks(poset, opt).average_rank.empty());
    }
    {
        std::vector<Profile> subjects(5, Profile{1, 1});
        Poset poset = build_poset(subjects);
        RankOptions mc;
        mc.method = RankMethod::MonteCarlo;
        mc.samples = 10;
        auto est = average_ranks(poset, mc);
        CHECK(est.average_rank[0] == doctest::Approx(3.0));
        CHECK(est.std_error[0] == 0.0);
        auto fi = profile_frailty_index(poset, est);
        CHECK(fi[0] == doctest::Approx(0.5));
    }
    {
        std::vector<Profile> subjects(1, Profile{2});
        Poset poset = build_poset(subjects);
        auto est = exact_for(subjects, poset);
        auto fi = profile_frailty_index(poset, est);
        CHECK(fi[0] == 0.0); // single subject pins the index at zero
    }
}

TEST_CASE("subject index follows profile membership") {
    std::vector<Profile> subjects = {{0}, {1}, {0}};
    Poset poset = build_poset(subjects);
    auto est = exact_for(subjects, poset);
    auto fi = profile_frailty_index(poset, est);
    auto per_subject = subject_frailty_index(poset, fi);
    REQUIRE(per_subject.size() == 3);
    CHECK(per_subject[0] == per_subject[2]);
    CHECK(per_subject[1] > per_subject[0]);
}

TEST_CASE("sampler emits every profile exactly once, chains always in order") {
    Rng rng(6060);
    auto subjects = random_subjects(rng, 20);
    Poset poset = build_poset(subjects);
    LinextSampler sampler(poset);
    std::vector<std::uint32_t> order;
    CHECK_THROWS_AS(sampler.step(1, order), DataError); // must initialize first
    sampler.initialize(derive_seed(1, 0));
    for (int s = 0; s < 50; ++s) {
        sampler.step(derive_seed(1, s + 1), order);
        REQUIRE(order.size() == poset.size());
        std::vector<int> pos(poset.size(), -1);
        for (std::size_t k = 0; k < order.size(); ++k) {
            REQUIRE(order[k] < poset.size());
            REQUIRE(pos[order[k]] == -1);
            pos[order[k]] = static_cast<int>(k);
        }
        for (std::size_t i = 0; i < poset.size(); ++i)
            for (std::size_t j = 0; j < poset.size(); ++j)
                if (poset.is_below(j, i)) REQUIRE(pos[j] < pos[i]);
    }
}
