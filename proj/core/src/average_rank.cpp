#include "frailty/average_rank.hpp"

#include "frailty/errors.hpp"
#include "frailty/linext_sampler.hpp"
#include "frailty/rng.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <thread>

namespace frailty {

const char* to_string(RankMethod method) {
    switch (method) {
    case RankMethod::Exact: return "exact";
    case RankMethod::MonteCarlo: return "montecarlo";
    case RankMethod::Lpom: return "lpom";
    }
    return "?";
}

RankMethod rank_method_from_string(const std::string& name) {
    if (name == "exact") return RankMethod::Exact;
    if (name == "montecarlo") return RankMethod::MonteCarlo;
    if (name == "lpom") return RankMethod::Lpom;
    throw DataError(fmt::format("unknown ranking method '{}' (expected exact|montecarlo|lpom)", name));
}

namespace {

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

RankEstimate exact_ranks(const Poset& poset, const RankOptions& opt) {
    RankEstimate est;
    est.method = RankMethod::Exact;
    const std::size_t n_profiles = poset.size();
    est.average_rank.assign(n_profiles, 0.0);
    est.std_error.assign(n_profiles, 0.0);
    if (n_profiles == 0) return est;

    const int cap = std::min(opt.exact_max_subjects, 20);
    if (poset.total_weight > static_cast<std::uint64_t>(cap))
        throw DataError(fmt::format(
            "exact ranking enumerates orderings of {} subjects but the cap is {}; "
            "use the montecarlo method", poset.total_weight, cap));
    const int n = static_cast<int>(poset.total_weight);

    // One element per subject; a subject's lower set is every subject whose
    // profile is strictly dominated.
    std::vector<std::uint32_t> below_mask(n, 0);
    std::vector<std::uint32_t> profile_mask(n_profiles, 0);
    std::vector<int> first_of(n_profiles, 0);
    {
        int idx = 0;
        for (std::size_t p = 0; p < n_profiles; ++p) {
            first_of[p] = idx;
            for (std::uint32_t r = 0; r < poset.weight[p]; ++r)
                profile_mask[p] |= 1u << idx++;
        }
    }
    for (std::size_t p = 0; p < n_profiles; ++p) {
        std::uint32_t mask = 0;
        for (std::size_t q = 0; q < n_profiles; ++q)
            if (poset.is_below(q, p)) mask |= profile_mask[q];
        for (int b = first_of[p]; b < first_of[p] + static_cast<int>(poset.weight[p]); ++b)
            below_mask[b] = mask;
    }

    const std::uint32_t full = (n == 0) ? 0 : ((1u << n) - 1);
    // f[S]: orderings of S as a prefix; h[S]: orderings of the complement as
    // a suffix. Both fit 64 bits for n <= 20.
    std::vector<std::uint64_t> f(std::size_t{full} + 1, 0), h(std::size_t{full} + 1, 0);
    f[0] = 1;
    for (std::uint32_t s = 0; s < full; ++s) {
        if (!f[s]) continue;
        for (int x = 0; x < n; ++x) {
            const std::uint32_t bit = 1u << x;
            if ((s & bit) || (below_mask[x] & ~s)) continue;
            f[s | bit] += f[s];
        }
    }
    h[full] = 1;
    for (std::uint32_t s = full; s-- > 0;) {
        std::uint64_t total = 0;
        for (int x = 0; x < n; ++x) {
            const std::uint32_t bit = 1u << x;
            if ((s & bit) || (below_mask[x] & ~s)) continue;
            total += h[s | bit];
        }
        h[s] = total;
    }
    const std::uint64_t n_orderings = f[full];

    std::vector<unsigned __int128> position_sum(n, 0);
    for (std::uint32_t s = 0;; ++s) {
        if (f[s]) {
            const unsigned pos = static_cast<unsigned>(std::popcount(s)) + 1;
            for (int x = 0; x < n; ++x) {
                const std::uint32_t bit = 1u << x;
                if ((s & bit) || (below_mask[x] & ~s)) continue;
                position_sum[x] +=
                    static_cast<unsigned __int128>(f[s]) * h[s | bit] * pos;
            }
        }
        if (s == full) break;
    }
    for (std::size_t p = 0; p < n_profiles; ++p)
        est.average_rank[p] = static_cast<double>(
            static_cast<long double>(position_sum[first_of[p]]) /
            static_cast<long double>(n_orderings));
    return est;
}

RankEstimate lpom_ranks(const Poset& poset) {
    RankEstimate est;
    est.method = RankMethod::Lpom;
    const std::size_t n_profiles = poset.size();
    est.average_rank.assign(n_profiles, 0.0);
    est.std_error.assign(n_profiles, 0.0);
    if (n_profiles == 0) return est;

    std::vector<std::uint64_t> above_weight(n_profiles, 0);
    for (std::size_t i = 0; i < n_profiles; ++i) {
        const std::uint64_t* row = poset.below.data() + i * poset.words;
        for (std::size_t w = 0; w < poset.words; ++w) {
            std::uint64_t bits = row[w];
            while (bits) {
                int b = std::countr_zero(bits);
                above_weight[w * 64 + b] += poset.weight[i];
                bits &= bits - 1;
            }
        }
    }
    const double n = static_cast<double>(poset.total_weight);
    for (std::size_t p = 0; p < n_profiles; ++p) {
        const double w = poset.weight[p];
        const double below = static_cast<double>(poset.weight_below(p));
        const double inc = n - w - below - static_cast<double>(above_weight[p]);
        const double base = below + (w + 1.0) / 2.0;
        est.average_rank[p] = base * (n + 1.0) / (n + 1.0 - inc);
    }
    return est;
}

RankEstimate mc_ranks(const Poset& poset, const RankOptions& opt) {
    RankEstimate est;
    est.method = RankMethod::MonteCarlo;
    est.samples_used = opt.samples;
    const std::size_t n_profiles = poset.size();
    est.average_rank.assign(n_profiles, 0.0);
    est.std_error.assign(n_profiles, 0.0);
    if (n_profiles == 0) return est;
    if (opt.samples == 0) throw DataError("montecarlo ranking needs at least one sample");

    // Per sweep, a profile's statistic is the incomparable weight whose
    // designated subject lands below its own; the comparable weight below is
    // a deterministic offset. Measuring against that offset keeps total
    // orders at exactly zero variance.
    std::vector<double> below_offset(n_profiles, 0.0);
    for (std::size_t p = 0; p < n_profiles; ++p)
        below_offset[p] = static_cast<double>(poset.weight_below(p));

    // A fixed number of independent chains and a fixed batch length make the
    // result byte-identical for any thread count.
    const std::uint64_t n_samples = opt.samples;
    const int n_chains = static_cast<int>(std::min<std::uint64_t>(4, n_samples));
    std::vector<std::uint64_t> chain_len(n_chains, n_samples / n_chains);
    for (std::uint64_t c = 0; c < n_samples % n_chains; ++c) ++chain_len[c];
    const std::uint64_t batch_len = std::max<std::uint64_t>(1, (n_samples + 79) / 80);

    struct ChainAcc {
        std::vector<double> sum;      // Σ Y over the chain's samples
        std::vector<double> bsum_sq;  // Σ s_b² over batches, s_b = batch sum
        std::vector<double> bsum_len; // Σ ℓ_b · s_b over batches
        double len_sq = 0.0;          // Σ ℓ_b²
        std::uint64_t n_batches = 0;
    };
    std::vector<ChainAcc> acc(n_chains);

    auto run_chain = [&](int c) {
        ChainAcc& a = acc[c];
        a.sum.assign(n_profiles, 0.0);
        a.bsum_sq.assign(n_profiles, 0.0);
        a.bsum_len.assign(n_profiles, 0.0);
        LinextSampler sampler(poset);
        const std::uint64_t chain_seed = derive_seed(opt.seed, static_cast<std::uint64_t>(c) + 1);
        sampler.initialize(chain_seed);
        std::vector<std::uint32_t> order;
        std::vector<double> batch_sum(n_profiles);
        std::uint64_t done = 0;
        while (done < chain_len[c]) {
            const std::uint64_t len = std::min(batch_len, chain_len[c] - done);
            std::fill(batch_sum.begin(), batch_sum.end(), 0.0);
            for (std::uint64_t k = 0; k < len; ++k) {
                sampler.step(derive_seed(chain_seed, done + k + 1, 0xF0), order);
                double prefix = 0.0;
                for (std::uint32_t p : order) {
                    batch_sum[p] += prefix - below_offset[p];
                    prefix += static_cast<double>(poset.weight[p]);
                }
            }
            const double l = static_cast<double>(len);
            for (std::size_t p = 0; p < n_profiles; ++p) {
                a.sum[p] += batch_sum[p];
                a.bsum_sq[p] += batch_sum[p] * batch_sum[p];
                a.bsum_len[p] += l * batch_sum[p];
            }
            a.len_sq += l * l;
            ++a.n_batches;
            done += len;
        }
    };

    const int workers = std::min(resolve_threads(opt.threads), n_chains);
    if (workers <= 1) {
        for (int c = 0; c < n_chains; ++c) run_chain(c);
    } else {
        std::atomic<int> next{0};
        auto worker = [&]() {
            for (;;) {
                const int c = next.fetch_add(1);
                if (c >= n_chains) break;
                run_chain(c);
            }
        };
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    // Weighted batch means: Var(mean) = nb/(nb-1) · Σ ((ℓ_b/n)(b̄_b - ȳ))².
    const double n = static_cast<double>(n_samples);
    std::uint64_t nb_total = 0;
    double len_sq_total = 0.0;
    for (const ChainAcc& a : acc) {
        nb_total += a.n_batches;
        len_sq_total += a.len_sq;
    }
    for (std::size_t p = 0; p < n_profiles; ++p) {
        double sum = 0.0, bsq = 0.0, bls = 0.0;
        for (const ChainAcc& a : acc) {
            sum += a.sum[p];
            bsq += a.bsum_sq[p];
            bls += a.bsum_len[p];
        }
        const double mean = sum / n;
        est.average_rank[p] = 1.0 + (static_cast<double>(poset.weight[p]) - 1.0) / 2.0 +
                              below_offset[p] + mean;
        if (nb_total >= 2) {
            const double dispersion =
                std::max(0.0, bsq - 2.0 * mean * bls + mean * mean * len_sq_total);
            const double nb = static_cast<double>(nb_total);
            est.std_error[p] = std::sqrt(dispersion * nb / (nb - 1.0)) / n;
        }
    }
    return est;
}

} // namespace

RankEstimate average_ranks(const Poset& poset, const RankOptions& options) {
    switch (options.method) {
    case RankMethod::Exact: return exact_ranks(poset, options);
    case RankMethod::MonteCarlo: return mc_ranks(poset, options);
    case RankMethod::Lpom: return lpom_ranks(poset);
    }
    throw DataError("unknown ranking method");
}

std::vector<double> profile_frailty_index(const Poset& poset, const RankEstimate& ranks) {
    std::vector<double> fi(poset.size(), 0.0);
    if (poset.total_weight > 1) {
        const double denom = static_cast<double>(poset.total_weight) - 1.0;
        for (std::size_t p = 0; p < poset.size(); ++p)
            fi[p] = (ranks.average_rank[p] - 1.0) / denom;
    }
    return fi;
}

std::vector<double> subject_frailty_index(const Poset& poset,
                                          const std::vector<double>& profile_fi) {
    std::vector<double> fi(poset.subject_profile.size(), 0.0);
    for (std::size_t i = 0; i < fi.size(); ++i) fi[i] = profile_fi[poset.subject_profile[i]];
    return fi;
}

} // namespace frailty
