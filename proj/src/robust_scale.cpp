#include "segiwv/robust_scale.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

namespace segiwv {

namespace {

struct WeightedValue {
    double value;
    std::size_t weight;
};

// Smallest v such that the weight of items <= v is at least half the total.
// Expected linear time.
double weighted_lower_median(std::vector<WeightedValue>& items) {
    std::size_t total = 0;
    for (const auto& it : items) total += it.weight;

    auto first = items.begin();
    auto last = items.end();
    std::size_t before = 0;
    const auto by_value = [](const WeightedValue& a, const WeightedValue& b) { return a.value < b.value; };
    while (true) {
        const auto mid = first + (last - first) / 2;
        std::nth_element(first, mid, last, by_value);
        std::size_t left = 0;
        for (auto it = first; it != mid; ++it) left += it->weight;
        if (2 * (before + left) >= total && mid != first) {
            last = mid;
        } else if (2 * (before + left + mid->weight) >= total) {
            return mid->value;
        } else {
            before += left + mid->weight;
            first = mid + 1;
        }
    }
}

}  // namespace

double qn_small_sample_factor(std::size_t n) {
    static constexpr std::array<double, 8> small{0.399, 0.994, 0.512, 0.844, 0.611, 0.857, 0.669, 0.872};
    if (n < 2) throw std::invalid_argument("qn_small_sample_factor: n < 2");
    if (n <= 9) return small[n - 2];
    const double nd = static_cast<double>(n);
    return (n % 2 == 1) ? nd / (nd + 1.4) : nd / (nd + 3.8);
}

double pairwise_gap_order_statistic(std::span<const double> sample, std::size_t k) {
    const std::size_t n = sample.size();
    const std::size_t pairs = n * (n - 1) / 2;
    if (n < 2 || k < 1 || k > pairs) {
        throw std::invalid_argument("pairwise_gap_order_statistic: rank out of range");
    }
    std::vector<double> y(sample.begin(), sample.end());
    std::sort(y.begin(), y.end());

    // Row i holds y[j] - y[i] for j in (i, n), increasing in j. Candidates
    // of row i are the columns [lo[i], hi[i]).
    std::vector<std::size_t> lo(n), hi(n, n);
    for (std::size_t i = 0; i < n; ++i) lo[i] = i + 1;
    std::vector<std::size_t> less(n), leq(n);
    std::vector<WeightedValue> items;
    items.reserve(n);

    std::size_t candidates = pairs;
    while (candidates > n) {
        items.clear();
        for (std::size_t i = 0; i + 1 < n; ++i) {
            if (lo[i] < hi[i]) {
                const std::size_t mid = lo[i] + (hi[i] - lo[i] - 1) / 2;
                items.push_back({y[mid] - y[i], hi[i] - lo[i]});
            }
        }
        const double trial = weighted_lower_median(items);

        // Gaps are monotone in both indices, so both pointers only advance.
        std::size_t below = 0, below_or_equal = 0;
        std::size_t p = 0, q = 0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            p = std::max(p, i + 1);
            while (p < n && y[p] - y[i] < trial) ++p;
            q = std::max(q, i + 1);
            while (q < n && y[q] - y[i] <= trial) ++q;
            less[i] = p - (i + 1);
            leq[i] = q - (i + 1);
            below += less[i];
            below_or_equal += leq[i];
        }

        if (k <= below) {
            for (std::size_t i = 0; i + 1 < n; ++i) hi[i] = std::min(hi[i], i + 1 + less[i]);
        } else if (k > below_or_equal) {
            for (std::size_t i = 0; i + 1 < n; ++i) lo[i] = std::max(lo[i], i + 1 + leq[i]);
        } else {
            return trial;
        }
        candidates = 0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            if (lo[i] < hi[i]) candidates += hi[i] - lo[i];
        }
    }

    std::vector<double> rest;
    rest.reserve(candidates);
    std::size_t discarded_below = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        discarded_below += lo[i] - (i + 1);
        for (std::size_t j = lo[i]; j < hi[i]; ++j) rest.push_back(y[j] - y[i]);
    }
    const std::size_t rank = k - discarded_below - 1;
    std::nth_element(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(rank), rest.end());
    return rest[rank];
}

double qn_scale(std::span<const double> sample) {
    const std::size_t n = sample.size();
    if (n < 2) throw DataError("qn_scale: need at least 2 values");
    const std::size_t h = n / 2 + 1;
    const std::size_t k = h * (h - 1) / 2;
    return qn_small_sample_factor(n) * kQnConsistency * pairwise_gap_order_statistic(sample, k);
}

std::size_t DiffSample::total() const {
    std::size_t s = 0;
    for (const auto& v : by_month) s += v.size();
    return s;
}

DiffSample monthly_differences(const TimeSeries& series, const MonthIndex& months) {
    if (months.size() != series.size()) {
        throw std::invalid_argument("monthly_differences: month index does not match series");
    }
    DiffSample out;
    const auto y = series.values();
    for (std::size_t t = 1; t < series.size(); ++t) {
        if (series.adjacent_days(t) && months.month_of(t) == months.month_of(t - 1)) {
            out.by_month[months.month_of(t) - 1].push_back(y[t] - y[t - 1]);
        }
    }
    return out;
}

MonthlyStd monthly_std(const TimeSeries& series, const MonthIndex& months) {
    const auto diffs = monthly_differences(series, months);
    MonthlyStd out;
    out.source = ScaleSource::RobustEstimated;
    for (int m = 0; m < kMonths; ++m) {
        if (months.count(m + 1) == 0) continue;
        const auto& d = diffs.by_month[m];
        if (d.size() < 2) {
            throw DataError("monthly_std: month " + std::to_string(m + 1) +
                            " has fewer than 2 consecutive-day differences");
        }
        out.sigma[m] = qn_scale(d) / std::numbers::sqrt2;
        out.present[m] = true;
    }
    return out;
}

MonthlyStd homogeneous_std(const TimeSeries& series) {
    std::vector<double> d;
    const auto y = series.values();
    for (std::size_t t = 1; t < series.size(); ++t) {
        if (series.adjacent_days(t)) d.push_back(y[t] - y[t - 1]);
    }
    if (d.size() < 2) throw DataError("homogeneous_std: fewer than 2 consecutive-day differences");
    const double s = qn_scale(d) / std::numbers::sqrt2;
    if (!(s > 0.0)) throw DegenerateScaleError("homogeneous_std: estimated scale is zero");
    return MonthlyStd::homogeneous(s);
}

}  // namespace segiwv
