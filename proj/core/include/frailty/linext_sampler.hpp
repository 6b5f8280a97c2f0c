#pragma once

#include "frailty/poset.hpp"

#include <cstdint>
#include <vector>

namespace frailty {

/// Markov chain over uniformly random subject orderings consistent with
/// profile dominance, where subjects sharing a profile are exchangeable.
///
/// The chain is systematic-scan Gibbs on the order polytope of the
/// subject-level order. A profile's subjects form a block of coordinates
/// that are conditionally i.i.d. uniform between the neighbouring blocks, so
/// a block is tracked through (lowest, designated, highest) coordinate
/// summaries only; that collapse is lossless for the chain and for the
/// designated-subject ranking read off each state.
///
/// initialize() draws the starting state by coupling from the past: the
/// update is monotone in the block summaries under shared randomness, and
/// once the designated coordinates of the all-ones and all-zeros chains
/// interleave strictly, the designated ranking is pinned for every state
/// between them. One further doubling shrinks the residual envelope to a
/// width that is negligible against any gap the estimator could resolve, so
/// the forward chain runs at stationarity for all practical purposes and
/// every subsequent step() yields an exactly distributed, serially
/// correlated sample. Consumers must treat successive steps as correlated
/// (batch-means standard errors, see average_ranks).
class LinextSampler {
  public:
    explicit LinextSampler(const Poset& poset);

    /// Couples from the past and leaves the chain stationary.
    /// Deterministic given `seed`; returns total sweeps spent.
    std::uint64_t initialize(std::uint64_t seed);

    /// Advances one sweep and fills `order` with all profile indices by
    /// designated-subject position, least frail first.
    void step(std::uint64_t sweep_seed, std::vector<std::uint32_t>& order);

  private:
    struct Chain {
        std::vector<double> lo, rep, hi;
    };

    void reset_pair();
    void sweep_pair(std::uint64_t sweep_seed);
    void sweep_single(std::uint64_t sweep_seed);
    bool interleaved() const;
    void extract_order(std::vector<std::uint32_t>& order);

    const Poset* poset_;
    Chain top_, bot_;
    std::vector<double> inv_others_; // 1/(w-1) for blocks of weight >= 3
    std::vector<double> inv_inner_;  // 1/(w-2) for blocks of weight >= 3
    std::vector<std::uint32_t> scratch_;
    bool ready_ = false;
};

} // namespace frailty
