#include "segiwv/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

namespace segiwv {

double weighted_mean(std::span<const double> z, std::span<const double> w) {
    if (z.empty()) throw std::invalid_argument("weighted_mean: empty segment");
    if (z.size() != w.size()) throw std::invalid_argument("weighted_mean: length mismatch");
    long double sw = 0.0L, swz = 0.0L;
    for (std::size_t t = 0; t < z.size(); ++t) {
        sw += w[t];
        swz += static_cast<long double>(w[t]) * z[t];
    }
    return static_cast<double>(swz / sw);
}

CostMatrix::CostMatrix(std::span<const double> z, std::span<const double> w)
    : n_(z.size()), sw_(z.size() + 1), swz_(z.size() + 1), swzz_(z.size() + 1) {
    if (z.size() != w.size()) throw std::invalid_argument("CostMatrix: length mismatch");
    if (z.empty()) throw std::invalid_argument("CostMatrix: empty signal");
    const double centre = weighted_mean(z, w);
    long double a = 0.0L, b = 0.0L, c = 0.0L;
    for (std::size_t t = 0; t < n_; ++t) {
        const long double wt = w[t];
        const long double zt = static_cast<long double>(z[t]) - centre;
        a += wt;
        b += wt * zt;
        c += wt * zt * zt;
        sw_[t + 1] = static_cast<double>(a);
        swz_[t + 1] = static_cast<double>(b);
        swzz_[t + 1] = static_cast<double>(c);
    }
}

namespace {

void check_inputs(std::span<const double> z, std::span<const double> w) {
    if (z.size() != w.size()) throw std::invalid_argument("dp_segment: length mismatch");
    for (const double wt : w) {
        if (!(wt > 0.0) || !std::isfinite(wt)) throw std::invalid_argument("dp_segment: weights must be positive");
    }
    for (const double zt : z) {
        if (!std::isfinite(zt)) throw std::invalid_argument("dp_segment: non-finite signal value");
    }
}

// out[i] = prev[i] + C(i, j) for i in [lo, hi].
void relax_row(const double* __restrict sw, const double* __restrict swz, const double* __restrict swzz,
               const double* __restrict prev, double* __restrict out, std::size_t lo, std::size_t hi,
               std::size_t j) {
    const double wj = sw[j], zj = swz[j], zzj = swzz[j];
    for (std::size_t i = lo; i <= hi; ++i) {
        const double a = wj - sw[i];
        const double b = zj - swz[i];
        double c = (zzj - swzz[i]) - b * b / a;
        c = c > 0.0 ? c : 0.0;
        out[i] = prev[i] + c;
    }
}

// First index of the minimum of v[lo..hi]. Independent lanes keep the
// loop branch-free; lanes are merged by (value, index).
std::size_t first_argmin(const double* __restrict v, std::size_t lo, std::size_t hi) {
    constexpr std::size_t kLanes = 8;
    constexpr double inf = std::numeric_limits<double>::infinity();
    double lane_best[kLanes];
    std::size_t lane_arg[kLanes];
    for (std::size_t l = 0; l < kLanes; ++l) {
        lane_best[l] = inf;
        lane_arg[l] = lo;
    }
    std::size_t i = lo;
    const std::size_t end = hi + 1;
    for (; i + kLanes <= end; i += kLanes) {
        for (std::size_t l = 0; l < kLanes; ++l) {
            const double x = v[i + l];
            const bool better = x < lane_best[l];
            lane_best[l] = better ? x : lane_best[l];
            lane_arg[l] = better ? i + l : lane_arg[l];
        }
    }
    double best = inf;
    std::size_t arg = lo;
    bool any = false;
    for (std::size_t l = 0; l < kLanes; ++l) {
        if (lane_best[l] == inf) continue;
        if (!any || lane_best[l] < best || (lane_best[l] == best && lane_arg[l] < arg)) {
            best = lane_best[l];
            arg = lane_arg[l];
            any = true;
        }
    }
    for (; i < end; ++i) {
        if (!any || v[i] < best) {
            best = v[i];
            arg = i;
            any = true;
        }
    }
    return arg;
}

}  // namespace

DPResult dp_segment(std::span<const double> z, std::span<const double> w, std::size_t k_max,
                    std::size_t min_segment_length) {
    check_inputs(z, w);
    const std::size_t n = z.size();
    const std::size_t m = std::max<std::size_t>(min_segment_length, 1);
    if (k_max < 1) throw std::invalid_argument("dp_segment: K_max must be >= 1");
    if (k_max * m > n) throw std::invalid_argument("dp_segment: K_max * min_segment_length exceeds n");

    const CostMatrix cost(z, w);
    const double* sw = cost.cum_w().data();
    const double* swz = cost.cum_wz().data();
    const double* swzz = cost.cum_wzz().data();
    constexpr double inf = std::numeric_limits<double>::infinity();

    // prev[j]: optimal cost of covering [0, j) with k-1 segments;
    // back[k-1][j]: start of the last segment of the k-segment optimum.
    std::vector<double> prev(n + 1, inf), cur(n + 1, inf), buf(n + 1);
    std::vector<std::vector<std::uint32_t>> back(k_max, std::vector<std::uint32_t>(n + 1, 0));
    for (std::size_t j = m; j <= n; ++j) prev[j] = cost(0, j);

    for (std::size_t k = 2; k <= k_max; ++k) {
        std::fill(cur.begin(), cur.end(), inf);
        auto& bk = back[k - 1];
        const std::size_t j_first = k * m;
        // The final layer is only read at j = n.
        const std::size_t j_last = (k == k_max) ? n : n - m;
        const auto relax = [&](std::size_t j) {
            const std::size_t i_first = (k - 1) * m;
            const std::size_t i_last = j - m;
            relax_row(sw, swz, swzz, prev.data(), buf.data(), i_first, i_last, j);
            const std::size_t arg = first_argmin(buf.data(), i_first, i_last);
            cur[j] = buf[arg];
            bk[j] = static_cast<std::uint32_t>(arg);
        };
        for (std::size_t j = j_first; j <= j_last; ++j) relax(j);
        if (j_last < n) relax(n);
        std::swap(prev, cur);
    }

    DPResult result;
    result.ssr.reserve(k_max);
    result.segmentations.reserve(k_max);
    for (std::size_t K = 1; K <= k_max; ++K) {
        std::vector<std::size_t> cps(K - 1);
        std::size_t end = n;
        for (std::size_t k = K; k >= 2; --k) {
            end = back[k - 1][end];
            cps[k - 2] = end;
        }
        std::vector<double> means(K);
        std::size_t begin = 0;
        for (std::size_t k = 0; k < K; ++k) {
            const std::size_t stop = (k + 1 < K) ? cps[k] : n;
            means[k] = weighted_mean(z.subspan(begin, stop - begin), w.subspan(begin, stop - begin));
            begin = stop;
        }
        Segmentation seg(n, std::move(cps), std::move(means));
        result.ssr.push_back(ssr_of(seg, z, w));
        result.segmentations.push_back(std::move(seg));
    }
    return result;
}

double ssr_of(const Segmentation& seg, std::span<const double> z, std::span<const double> w) {
    if (seg.n() != z.size() || z.size() != w.size()) throw std::invalid_argument("ssr_of: length mismatch");
    const auto b = seg.boundaries();
    long double total = 0.0L;
    for (std::size_t k = 0; k + 1 < b.size(); ++k) {
        const auto zs = z.subspan(b[k], b[k + 1] - b[k]);
        const auto ws = w.subspan(b[k], b[k + 1] - b[k]);
        const double mu = weighted_mean(zs, ws);
        for (std::size_t t = 0; t < zs.size(); ++t) {
            const double r = zs[t] - mu;
            total += static_cast<long double>(ws[t]) * r * r;
        }
    }
    return static_cast<double>(total);
}

Segmentation refit_means(const Segmentation& seg, std::span<const double> z, std::span<const double> w) {
    const auto b = seg.boundaries();
    std::vector<double> means(seg.K());
    for (std::size_t k = 0; k + 1 < b.size(); ++k) {
        means[k] = weighted_mean(z.subspan(b[k], b[k + 1] - b[k]), w.subspan(b[k], b[k + 1] - b[k]));
    }
    return Segmentation(seg.n(), {seg.changepoints().begin(), seg.changepoints().end()}, std::move(means));
}

}  // namespace segiwv
