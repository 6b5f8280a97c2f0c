#pragma once

#include <cstdint>
#include <vector>

namespace frailty {

/// An ordinal frailty profile: one level per marker, 0 = least severe.
using Profile = std::vector<std::uint8_t>;

enum class ProfileRelation : std::uint8_t { Equal, Less, Greater, Incomparable };

/// Componentwise dominance. Less means a is dominated by b on every marker
/// (and differs on at least one).
ProfileRelation compare_profiles(const Profile& a, const Profile& b);

/// The dominance order over the distinct profiles observed in a cohort.
/// Each distinct profile carries the number of subjects exhibiting it; the
/// ranking semantics treat those subjects as mutually incomparable replicas.
struct Poset {
    std::vector<Profile> profiles;             // distinct, in first-seen order
    std::vector<std::uint32_t> weight;         // subjects per profile
    std::vector<std::uint32_t> subject_profile; // input row -> profile index
    std::uint64_t total_weight = 0;            // number of subjects

    // Strict dominance as packed bit rows: bit j of row i set iff j < i.
    std::size_t words = 0;
    std::vector<std::uint64_t> below;

    // Transitive reduction, used by the sampling scheme.
    std::vector<std::vector<std::uint32_t>> lower_covers;
    std::vector<std::vector<std::uint32_t>> upper_covers;
    // A topological order (dominated profiles first); deterministic.
    std::vector<std::uint32_t> sweep_order;

    std::size_t size() const { return profiles.size(); }

    bool is_below(std::size_t j, std::size_t i) const {
        return (below[i * words + (j >> 6)] >> (j & 63)) & 1u;
    }
    bool incomparable(std::size_t i, std::size_t j) const {
        return i != j && !is_below(i, j) && !is_below(j, i);
    }

    /// Total subject weight strictly below / strictly above / incomparable to
    /// profile i (the profile's own subjects count in none of the three).
    std::uint64_t weight_below(std::size_t i) const;
    std::uint64_t weight_above(std::size_t i) const;
    std::uint64_t weight_incomparable(std::size_t i) const;
};

/// Deduplicates subject profiles and builds the dominance relation, cover
/// lists, and sweep order. All input profiles must have equal length.
Poset build_poset(const std::vector<Profile>& subject_profiles);

} // namespace frailty
