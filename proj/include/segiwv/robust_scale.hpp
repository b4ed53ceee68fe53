#pragma once

#include "segiwv/types.hpp"

#include <array>
#include <span>
#include <vector>

namespace segiwv {

/// Asymptotic consistency constant of Qn at the Gaussian.
inline constexpr double kQnConsistency = 2.21914;

/// Finite-sample correction d_n of Qn (Croux & Rousseeuw table for n <= 9,
/// n/(n+1.4) or n/(n+3.8) for odd or even n above).
double qn_small_sample_factor(std::size_t n);

/// k-th smallest (1-based) of the pairwise gaps |x_i - x_j|, i < j.
/// Exact, O(n log n): selection in the implicitly row/column sorted matrix
/// of gaps of the sorted sample, pivoting on weighted medians of row midpoints.
double pairwise_gap_order_statistic(std::span<const double> sample, std::size_t k);

/// Qn scale estimate d_n * 2.21914 * {|x_i - x_j|; i<j}_(k), k = C(h,2),
/// h = floor(n/2)+1. Throws DataError for fewer than 2 values.
double qn_scale(std::span<const double> sample);

/// Lag-one differences grouped per month. Only pairs of observations on
/// consecutive days carrying the same month label are kept.
struct DiffSample {
    std::array<std::vector<double>, kMonths> by_month;

    [[nodiscard]] std::size_t total() const;
};

DiffSample monthly_differences(const TimeSeries& series, const MonthIndex& months);

/// sigma_month = qn_scale(differences of that month) / sqrt(2). Months with
/// no observations are flagged absent; a month that has observations but
/// fewer than two usable differences is an error.
MonthlyStd monthly_std(const TimeSeries& series, const MonthIndex& months);

/// One Qn / sqrt(2) estimate over all consecutive-day differences,
/// replicated across the 12 months. A zero estimate is a DegenerateScaleError.
MonthlyStd homogeneous_std(const TimeSeries& series);

}  // namespace segiwv
