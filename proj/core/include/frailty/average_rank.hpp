#pragma once

#include "frailty/poset.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace frailty {

enum class RankMethod : std::uint8_t { Exact, MonteCarlo, Lpom };
const char* to_string(RankMethod method);
RankMethod rank_method_from_string(const std::string& name); // throws DataError

struct RankOptions {
    RankMethod method = RankMethod::MonteCarlo;
    std::uint64_t samples = 10000; // MonteCarlo draws
    std::uint64_t seed = 42;
    int threads = 1;              // <= 0 means all hardware threads
    int exact_max_subjects = 10;  // refuse exact enumeration above this
};

struct RankEstimate {
    RankMethod method = RankMethod::Exact;
    std::vector<double> average_rank; // per profile; 1 = least frail subject
    std::vector<double> std_error;    // per profile; zero for Exact and Lpom
    std::uint64_t samples_used = 0;
};

/// Average position of a profile's subjects over uniformly random subject
/// orderings consistent with dominance.
///
/// Exact enumerates orderings with a prefix-set dynamic program and is
/// limited to small cohorts. MonteCarlo runs four independent stationary
/// Gibbs chains (see LinextSampler), each started from a coupled draw; one
/// sample is read per sweep and standard errors come from weighted batch
/// means, which stay honest under the serial correlation of the chain.
/// Comparable profiles contribute deterministically, so total orders are
/// recovered with zero variance and zero error. Lpom is a closed-form
/// approximation: with B = W_below + (w + 1)/2, it returns
/// B * (N + 1) / (N + 1 - W_inc), where W_below and W_inc are the subject
/// weights strictly below and incomparable. It is exact on chains and
/// antichains of profiles and strictly order-preserving;
/// docs/method-notes.md carries the derivations.
RankEstimate average_ranks(const Poset& poset, const RankOptions& options);

/// Maps average ranks onto [0, 1] as (ar - 1) / (n_subjects - 1).
/// A one-subject cohort scores 0.
std::vector<double> profile_frailty_index(const Poset& poset, const RankEstimate& ranks);

/// Per-subject index, in the input row order the poset was built from.
std::vector<double> subject_frailty_index(const Poset& poset,
                                          const std::vector<double>& profile_fi);

} // namespace frailty
