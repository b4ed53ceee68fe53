#pragma once

#include "segiwv/robust_scale.hpp"
#include "segiwv/simulation.hpp"
#include "segiwv/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

namespace segiwv::testing {

// k-th smallest pairwise gap by sorting all C(n,2) of them.
inline double qn_oracle(std::span<const double> x) {
    std::vector<double> gaps;
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (std::size_t j = i + 1; j < x.size(); ++j) gaps.push_back(std::abs(x[i] - x[j]));
    }
    std::sort(gaps.begin(), gaps.end());
    const std::size_t h = x.size() / 2 + 1;
    const std::size_t k = h * (h - 1) / 2;
    return qn_small_sample_factor(x.size()) * 2.21914 * gaps[k - 1];
}

struct Enumerated {
    long double cost{0.0L};
    std::vector<std::size_t> changepoints;
};

// Direct two-pass weighted SSR of one segmentation.
inline long double direct_cost(std::span<const double> z, std::span<const double> w,
                               std::span<const std::size_t> cps) {
    long double total = 0.0L;
    std::size_t begin = 0;
    for (std::size_t k = 0; k <= cps.size(); ++k) {
        const std::size_t end = k < cps.size() ? cps[k] : z.size();
        long double sw = 0.0L, swz = 0.0L;
        for (std::size_t t = begin; t < end; ++t) {
            sw += w[t];
            swz += static_cast<long double>(w[t]) * z[t];
        }
        const long double mu = swz / sw;
        for (std::size_t t = begin; t < end; ++t) {
            const long double e = z[t] - mu;
            total += w[t] * e * e;
        }
        begin = end;
    }
    return total;
}

// Exhaustive search over every K-segment partition. Among costs equal up to
// a relative 1e-12 the one with the smallest last change-point wins, then
// the smallest second-to-last, and so on.
inline Enumerated brute_force_segment(std::span<const double> z, std::span<const double> w, std::size_t K) {
    const std::size_t n = z.size();
    std::vector<std::size_t> cps(K - 1);
    for (std::size_t k = 0; k + 1 < K; ++k) cps[k] = k + 1;
    Enumerated best{std::numeric_limits<long double>::infinity(), {}};
    bool found = false;
    const auto reversed_less = [](const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
        return std::lexicographical_compare(a.rbegin(), a.rend(), b.rbegin(), b.rend());
    };
    while (true) {
        const long double c = direct_cost(z, w, cps);
        const long double tol = 1e-12L * std::max(1.0L, std::abs(best.cost));
        if (!found || c < best.cost - tol || (std::abs(c - best.cost) <= tol && reversed_less(cps, best.changepoints))) {
            best = {c, cps};
            found = true;
        }
        // Next combination in lexicographic order.
        std::ptrdiff_t i = static_cast<std::ptrdiff_t>(K) - 2;
        while (i >= 0 && cps[static_cast<std::size_t>(i)] == n - (K - 1) + static_cast<std::size_t>(i)) --i;
        if (i < 0) break;
        ++cps[static_cast<std::size_t>(i)];
        for (std::size_t j = static_cast<std::size_t>(i) + 1; j + 1 < K; ++j) cps[j] = cps[j - 1] + 1;
    }
    return best;
}

// Simulation design with no noise at all.
inline SimConfig noiseless_config() {
    SimConfig c;
    c.sigma1 = 0.0;
    c.sigma2 = 0.0;
    return c;
}

inline std::vector<double> normal_sample(std::size_t n, std::uint64_t seed, double mean = 0.0, double sd = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d(mean, sd);
    std::vector<double> x(n);
    for (auto& v : x) v = d(rng);
    return x;
}

}  // namespace segiwv::testing
