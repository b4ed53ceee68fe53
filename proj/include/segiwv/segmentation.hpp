#pragma once

#include "segiwv/types.hpp"

#include <span>
#include <vector>

namespace segiwv {

/// sum w z / sum w. Throws std::invalid_argument on an empty segment.
double weighted_mean(std::span<const double> z, std::span<const double> w);

/// Weighted within-segment sum of squares
///   C(b, e) = min_mu sum_{t in [b, e)} w_t (z_t - mu)^2
/// in O(1) per query from cumulative sums of w, w z and w z^2. The signal is
/// centred on its weighted mean and the sums are accumulated in extended
/// precision before being stored.
class CostMatrix {
public:
    CostMatrix(std::span<const double> z, std::span<const double> w);

    [[nodiscard]] std::size_t size() const noexcept { return n_; }
    /// Cost of the 0-based half-open segment [begin, end), begin < end.
    [[nodiscard]] double operator()(std::size_t begin, std::size_t end) const noexcept {
        if (end - begin == 1) return 0.0;
        const double sw = sw_[end] - sw_[begin];
        const double swz = swz_[end] - swz_[begin];
        const double c = (swzz_[end] - swzz_[begin]) - swz * swz / sw;
        return c > 0.0 ? c : 0.0;
    }

    [[nodiscard]] std::span<const double> cum_w() const noexcept { return sw_; }
    [[nodiscard]] std::span<const double> cum_wz() const noexcept { return swz_; }
    [[nodiscard]] std::span<const double> cum_wzz() const noexcept { return swzz_; }

private:
    std::size_t n_{0};
    std::vector<double> sw_, swz_, swzz_;
};

/// Optimal segmentations for every K = 1..K_max.
struct DPResult {
    /// ssr[K-1]: minimal weighted residual sum of squares with K segments.
    std::vector<double> ssr;
    /// segmentations[K-1]: an argmin with weighted segment means.
    std::vector<Segmentation> segmentations;

    [[nodiscard]] std::size_t k_max() const noexcept { return ssr.size(); }
    [[nodiscard]] const Segmentation& at(std::size_t K) const { return segmentations.at(K - 1); }
};

/// Exact segment-neighbourhood dynamic programming, O(K_max n^2).
/// Among equal-cost candidates the smallest last change-point wins (the
/// first one met scanning left to right), recursively.
DPResult dp_segment(std::span<const double> z, std::span<const double> w, std::size_t k_max,
                    std::size_t min_segment_length = 1);

/// Weighted SSR of `seg` with weighted means recomputed on z (two-pass).
double ssr_of(const Segmentation& seg, std::span<const double> z, std::span<const double> w);

/// Same segment boundaries, means replaced by the weighted means of z.
Segmentation refit_means(const Segmentation& seg, std::span<const double> z, std::span<const double> w);

}  // namespace segiwv
