#include "frailty/poset.hpp"

#include "frailty/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <bit>
#include <numeric>
#include <string>
#include <unordered_map>

namespace frailty {

ProfileRelation compare_profiles(const Profile& a, const Profile& b) {
    if (a.size() != b.size()) throw DataError("profiles of different length are not comparable");
    bool le = true, ge = true;
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (a[k] < b[k]) ge = false;
        else if (a[k] > b[k]) le = false;
        if (!le && !ge) return ProfileRelation::Incomparable;
    }
    if (le && ge) return ProfileRelation::Equal;
    return le ? ProfileRelation::Less : ProfileRelation::Greater;
}

std::uint64_t Poset::weight_below(std::size_t i) const {
    std::uint64_t sum = 0;
    const std::uint64_t* row = below.data() + i * words;
    for (std::size_t w = 0; w < words; ++w) {
        std::uint64_t bits = row[w];
        while (bits) {
            int b = std::countr_zero(bits);
            sum += weight[w * 64 + b];
            bits &= bits - 1;
        }
    }
    return sum;
}

std::uint64_t Poset::weight_above(std::size_t i) const {
    std::uint64_t sum = 0;
    for (std::size_t j = 0; j < size(); ++j)
        if (is_below(i, j)) sum += weight[j];
    return sum;
}

std::uint64_t Poset::weight_incomparable(std::size_t i) const {
    return total_weight - weight[i] - weight_below(i) - weight_above(i);
}

Poset build_poset(const std::vector<Profile>& subject_profiles) {
    Poset poset;
    poset.total_weight = subject_profiles.size();
    if (subject_profiles.empty()) return poset;
    const std::size_t k = subject_profiles.front().size();

    // Deduplicate, keeping first-seen order.
    std::unordered_map<std::string, std::uint32_t> index;
    index.reserve(subject_profiles.size() * 2);
    poset.subject_profile.reserve(subject_profiles.size());
    std::string key;
    for (const auto& p : subject_profiles) {
        if (p.size() != k) throw DataError("all subject profiles must have the same length");
        key.assign(reinterpret_cast<const char*>(p.data()), p.size());
        auto [it, inserted] = index.try_emplace(key, static_cast<std::uint32_t>(poset.profiles.size()));
        if (inserted) {
            poset.profiles.push_back(p);
            poset.weight.push_back(0);
        }
        poset.subject_profile.push_back(it->second);
        ++poset.weight[it->second];
    }

    const std::size_t n = poset.profiles.size();
    if (n > 60000)
        throw DataError(fmt::format("{} distinct profiles exceed the supported maximum", n));
    poset.words = (n + 63) / 64;
    poset.below.assign(n * poset.words, 0);

    // Dominance needs a strict level-sum increase, so group by sum first.
    std::vector<std::uint32_t> sum(n, 0);
    for (std::size_t i = 0; i < n; ++i)
        sum[i] = std::accumulate(poset.profiles[i].begin(), poset.profiles[i].end(), 0u);
    std::vector<std::uint32_t> by_sum(n);
    std::iota(by_sum.begin(), by_sum.end(), 0u);
    std::sort(by_sum.begin(), by_sum.end(), [&](std::uint32_t a, std::uint32_t b) {
        return sum[a] != sum[b] ? sum[a] < sum[b] : a < b;
    });
    for (std::size_t bi = 0; bi < n; ++bi) {
        const std::uint32_t i = by_sum[bi];
        const auto& pi = poset.profiles[i];
        std::uint64_t* row = poset.below.data() + static_cast<std::size_t>(i) * poset.words;
        for (std::size_t bj = 0; bj < bi; ++bj) {
            const std::uint32_t j = by_sum[bj];
            if (sum[j] >= sum[i]) continue;
            const auto& pj = poset.profiles[j];
            bool le = true;
            for (std::size_t c = 0; c < k; ++c)
                if (pj[c] > pi[c]) {
                    le = false;
                    break;
                }
            if (le) row[j >> 6] |= std::uint64_t{1} << (j & 63);
        }
    }

    // Covers: j is a lower cover of i iff nothing sits strictly between.
    // above[j] is the transpose of below, kept only for this pass.
    std::vector<std::uint64_t> above(n * poset.words, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t* row = poset.below.data() + i * poset.words;
        for (std::size_t w = 0; w < poset.words; ++w) {
            std::uint64_t bits = row[w];
            while (bits) {
                int b = std::countr_zero(bits);
                std::size_t j = w * 64 + b;
                above[j * poset.words + (i >> 6)] |= std::uint64_t{1} << (i & 63);
                bits &= bits - 1;
            }
        }
    }
    poset.lower_covers.assign(n, {});
    poset.upper_covers.assign(n, {});
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t* bel = poset.below.data() + i * poset.words;
        for (std::size_t w = 0; w < poset.words; ++w) {
            std::uint64_t bits = bel[w];
            while (bits) {
                int b = std::countr_zero(bits);
                std::size_t j = w * 64 + b;
                bits &= bits - 1;
                const std::uint64_t* abv = above.data() + j * poset.words;
                bool covered = true;
                for (std::size_t w2 = 0; w2 < poset.words && covered; ++w2)
                    if (bel[w2] & abv[w2]) covered = false;
                if (covered) {
                    poset.lower_covers[i].push_back(static_cast<std::uint32_t>(j));
                    poset.upper_covers[j].push_back(static_cast<std::uint32_t>(i));
                }
            }
        }
    }

    // Height-ordered sweep: all of a profile's dominated covers come earlier.
    std::vector<std::uint32_t> height(n, 0);
    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(),
              [&](std::uint32_t a, std::uint32_t b) { return sum[a] != sum[b] ? sum[a] < sum[b] : a < b; });
    for (std::uint32_t i : order)
        for (std::uint32_t j : poset.lower_covers[i]) height[i] = std::max(height[i], height[j] + 1);
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        return height[a] != height[b] ? height[a] < height[b] : a < b;
    });
    poset.sweep_order = std::move(order);
    return poset;
}

} // namespace frailty
