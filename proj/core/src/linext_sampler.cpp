#include "frailty/linext_sampler.hpp"

#include "frailty/errors.hpp"
#include "frailty/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace frailty {

namespace {
// Tag spaces for per-sweep seeds: backward (coupling) and forward times.
constexpr std::uint64_t kBackwardTag = 0xC0;
} // namespace

LinextSampler::LinextSampler(const Poset& poset) : poset_(&poset) {
    const std::size_t n = poset.size();
    top_.lo.resize(n);
    top_.rep.resize(n);
    top_.hi.resize(n);
    bot_.lo.resize(n);
    bot_.rep.resize(n);
    bot_.hi.resize(n);
    inv_others_.resize(n, 0.0);
    inv_inner_.resize(n, 0.0);
    for (std::size_t p = 0; p < n; ++p) {
        const std::uint32_t w = poset.weight[p];
        if (w >= 3) {
            inv_others_[p] = 1.0 / static_cast<double>(w - 1);
            inv_inner_[p] = 1.0 / static_cast<double>(w - 2);
        }
    }
}

void LinextSampler::reset_pair() {
    std::fill(top_.lo.begin(), top_.lo.end(), 1.0);
    std::fill(top_.rep.begin(), top_.rep.end(), 1.0);
    std::fill(top_.hi.begin(), top_.hi.end(), 1.0);
    std::fill(bot_.lo.begin(), bot_.lo.end(), 0.0);
    std::fill(bot_.rep.begin(), bot_.rep.end(), 0.0);
    std::fill(bot_.hi.begin(), bot_.hi.end(), 0.0);
}

void LinextSampler::sweep_pair(std::uint64_t sweep_seed) {
    Rng rng(sweep_seed);
    const Poset& po = *poset_;
    for (std::uint32_t p : po.sweep_order) {
        double lt = 0.0, lb = 0.0;
        for (std::uint32_t q : po.lower_covers[p]) {
            lt = std::max(lt, top_.hi[q]);
            lb = std::max(lb, bot_.hi[q]);
        }
        double ut = 1.0, ub = 1.0;
        for (std::uint32_t r : po.upper_covers[p]) {
            ut = std::min(ut, top_.lo[r]);
            ub = std::min(ub, bot_.lo[r]);
        }
        const std::uint32_t w = po.weight[p];
        // Both chains consume the same draws; each transform is monotone in
        // the chain's (lower, upper) bounds, which preserves the sandwich.
        const double xi = rng.uniform();
        const double rt = lt + (ut - lt) * xi;
        const double rb = lb + (ub - lb) * xi;
        top_.rep[p] = rt;
        bot_.rep[p] = rb;
        if (w == 1) {
            top_.lo[p] = rt;
            top_.hi[p] = rt;
            bot_.lo[p] = rb;
            bot_.hi[p] = rb;
            continue;
        }
        // Highest of the w-1 non-designated subjects, by inverse CDF.
        const double v = rng.uniform_pos();
        const double mx = (w == 2) ? v : std::pow(v, inv_others_[p]);
        const double mxt = lt + (ut - lt) * mx;
        const double mxb = lb + (ub - lb) * mx;
        if (w == 2) {
            top_.lo[p] = std::min(rt, mxt);
            top_.hi[p] = std::max(rt, mxt);
            bot_.lo[p] = std::min(rb, mxb);
            bot_.hi[p] = std::max(rb, mxb);
            continue;
        }
        // Lowest of the remaining w-2, conditionally uniform below the highest.
        const double v2 = rng.uniform_pos();
        const double mn = 1.0 - std::pow(v2, inv_inner_[p]);
        const double mnt = lt + (mxt - lt) * mn;
        const double mnb = lb + (mxb - lb) * mn;
        top_.lo[p] = std::min(rt, mnt);
        top_.hi[p] = std::max(rt, mxt);
        bot_.lo[p] = std::min(rb, mnb);
        bot_.hi[p] = std::max(rb, mxb);
    }
}

void LinextSampler::sweep_single(std::uint64_t sweep_seed) {
    Rng rng(sweep_seed);
    const Poset& po = *poset_;
    for (std::uint32_t p : po.sweep_order) {
        double lo = 0.0;
        for (std::uint32_t q : po.lower_covers[p]) lo = std::max(lo, bot_.hi[q]);
        double up = 1.0;
        for (std::uint32_t r : po.upper_covers[p]) up = std::min(up, bot_.lo[r]);
        const std::uint32_t w = po.weight[p];
        const double rep = lo + (up - lo) * rng.uniform();
        bot_.rep[p] = rep;
        if (w == 1) {
            bot_.lo[p] = rep;
            bot_.hi[p] = rep;
            continue;
        }
        const double v = rng.uniform_pos();
        const double mx = (w == 2) ? v : std::pow(v, inv_others_[p]);
        const double high = lo + (up - lo) * mx;
        if (w == 2) {
            bot_.lo[p] = std::min(rep, high);
            bot_.hi[p] = std::max(rep, high);
            continue;
        }
        const double v2 = rng.uniform_pos();
        const double mn = 1.0 - std::pow(v2, inv_inner_[p]);
        const double low = lo + (high - lo) * mn;
        bot_.lo[p] = std::min(rep, low);
        bot_.hi[p] = std::max(rep, high);
    }
}

bool LinextSampler::interleaved() const {
    const std::size_t n = poset_->size();
    for (std::size_t i = 0; i + 1 < n; ++i)
        if (!(top_.rep[scratch_[i]] < bot_.rep[scratch_[i + 1]])) return false;
    return true;
}

void LinextSampler::extract_order(std::vector<std::uint32_t>& order) {
    const std::size_t n = poset_->size();
    scratch_.resize(n);
    std::iota(scratch_.begin(), scratch_.end(), 0u);
    std::sort(scratch_.begin(), scratch_.end(), [&](std::uint32_t a, std::uint32_t b) {
        return bot_.rep[a] != bot_.rep[b] ? bot_.rep[a] < bot_.rep[b] : a < b;
    });
    order = scratch_;
}

std::uint64_t LinextSampler::initialize(std::uint64_t seed) {
    const std::size_t n = poset_->size();
    ready_ = true;
    if (n <= 1) {
        if (n == 1) {
            bot_.lo[0] = 0.25;
            bot_.rep[0] = 0.5;
            bot_.hi[0] = 0.75;
        }
        return 0;
    }
    std::uint64_t spent = 0;
    std::uint64_t coupled_span = 0;
    // Sweep -t reuses the seed derived from t in every round, as coupling
    // from the past requires.
    for (std::uint64_t span = 8;; span *= 2) {
        reset_pair();
        for (std::uint64_t t = span; t >= 1; --t) sweep_pair(derive_seed(seed, t, kBackwardTag));
        spent += span;
        std::vector<std::uint32_t> order;
        extract_order(order);
        if (interleaved()) {
            coupled_span = span;
            break;
        }
        if (span > (std::uint64_t{1} << 28))
            throw DataError("ranking sampler failed to couple; the dominance order is degenerate");
    }
    // One more doubling squares the residual top-bottom envelope, burying
    // the initialization transient far below sampling noise.
    const std::uint64_t final_span = coupled_span * 2;
    reset_pair();
    for (std::uint64_t t = final_span; t >= 1; --t) sweep_pair(derive_seed(seed, t, kBackwardTag));
    spent += final_span;
    return spent;
}

void LinextSampler::step(std::uint64_t sweep_seed, std::vector<std::uint32_t>& order) {
    if (!ready_) throw DataError("ranking sampler used before initialization");
    if (poset_->size() <= 1) {
        order.assign(poset_->size(), 0);
        return;
    }
    sweep_single(sweep_seed);
    extract_order(order);
}

} // namespace frailty
