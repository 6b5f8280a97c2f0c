#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace frailty {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// xoshiro256++ with splitmix64 seeding. Self-contained so that streams are
/// bit-reproducible across platforms and standard library versions (the
/// std::*_distribution classes are implementation defined).
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) {
        std::uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
    }

    /// Independent child stream; mixing the tag keeps sibling streams
    /// decorrelated regardless of tag spacing.
    Rng fork(std::uint64_t tag) const {
        std::uint64_t sm = s_[0] ^ (s_[1] + 0x9e3779b97f4a7c15ULL * (tag + 1));
        Rng child(0);
        for (auto& w : child.s_) w = splitmix64(sm);
        return child;
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform in [0,1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform in (0,1), never exactly 0 (safe for logs).
    double uniform_pos() {
        double u;
        do { u = uniform(); } while (u == 0.0);
        return u;
    }

    /// Uniform integer in [0, bound), bound >= 1. Rejection sampling, unbiased.
    std::uint64_t bounded(std::uint64_t bound) {
        const std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            const std::uint64_t r = next();
            if (r >= threshold) return r % bound;
        }
    }

    bool bernoulli(double p) { return uniform() < p; }

    /// Standard normal via Box-Muller (no cached spare: keeps the stream
    /// position a pure function of the call count).
    double normal() {
        const double u1 = uniform_pos();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Poisson by Knuth's product method; adequate for the small rates used
    /// in cohort generation.
    int poisson(double mean) {
        const double limit = std::exp(-mean);
        int k = 0;
        double prod = uniform_pos();
        while (prod > limit) {
            ++k;
            prod *= uniform_pos();
        }
        return k;
    }

    /// Partial Fisher-Yates: choose k distinct values out of [0, n).
    template <typename IndexVec>
    void sample_indices(std::size_t n, std::size_t k, IndexVec& out) {
        IndexVec pool(n);
        for (std::size_t i = 0; i < n; ++i) pool[i] = i;
        out.resize(k);
        for (std::size_t i = 0; i < k; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(bounded(n - i));
            std::swap(pool[i], pool[j]);
            out[i] = pool[i];
        }
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t s_[4];
};

/// Stable seed for an indexed subtask (outcome o, model m, ...).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0,
                                 std::uint64_t c = 0) {
    std::uint64_t sm = master;
    splitmix64(sm);
    sm ^= 0x517cc1b727220a95ULL * (a + 1);
    splitmix64(sm);
    sm ^= 0x2545f4914f6cdd1dULL * (b + 1);
    splitmix64(sm);
    sm ^= 0x9e3779b97f4a7c15ULL * (c + 1);
    return splitmix64(sm);
}

} // namespace frailty
