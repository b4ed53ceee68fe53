#pragma once

#include <array>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace segiwv {

/// Calendar date at day resolution.
using Date = std::chrono::sys_days;

/// Malformed or unusable input data (bad CSV, duplicate dates, too few
/// observations, degenerate scale, rank-deficient design).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class RankDeficientError : public DataError {
public:
    using DataError::DataError;
};

class DegenerateScaleError : public DataError {
public:
    using DataError::DataError;
};

/// Parses `YYYY-MM-DD`. Throws DataError on anything else.
Date parse_date(std::string_view text);
std::string format_date(Date d);
/// Shortest decimal text that reads back to the same double.
std::string format_number(double v);

/// 1..366.
int day_of_year(Date d);
/// 1..12.
int calendar_month(Date d);

/// Dated observations, strictly increasing dates, finite values, n >= 1.
class TimeSeries {
public:
    TimeSeries(std::vector<Date> dates, std::vector<double> values);

    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
    [[nodiscard]] std::span<const Date> dates() const noexcept { return dates_; }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    [[nodiscard]] Date date(std::size_t t) const { return dates_.at(t); }
    [[nodiscard]] double value(std::size_t t) const { return values_.at(t); }

    /// True when observations t-1 and t are on consecutive days.
    [[nodiscard]] bool adjacent_days(std::size_t t) const;

private:
    std::vector<Date> dates_;
    std::vector<double> values_;
};

struct RawRecord {
    std::string date;
    double value{0.0};
};

struct IngestResult {
    TimeSeries series;
    std::size_t dropped_non_finite{0};
};

/// Sorts by date, drops non-finite values, rejects duplicates and
/// unparseable dates.
IngestResult ingest(std::span<const RawRecord> records);

inline constexpr int kMonths = 12;

/// Month label (1..12) per observation index plus per-month counts.
class MonthIndex {
public:
    MonthIndex() = default;
    explicit MonthIndex(std::vector<std::uint8_t> labels);

    [[nodiscard]] std::size_t size() const noexcept { return labels_.size(); }
    [[nodiscard]] int month_of(std::size_t t) const { return labels_.at(t); }
    [[nodiscard]] std::span<const std::uint8_t> labels() const noexcept { return labels_; }
    [[nodiscard]] std::size_t count(int month) const { return counts_.at(month - 1); }
    [[nodiscard]] const std::array<std::size_t, kMonths>& counts() const noexcept { return counts_; }

private:
    std::vector<std::uint8_t> labels_;
    std::array<std::size_t, kMonths> counts_{};
};

/// Calendar month of every timestamp.
MonthIndex month_index(const TimeSeries& series);

/// Pseudo-calendar used by the simulation design: blocks of
/// `days_per_month` consecutive indices labelled 1, 2, ..., months_per_year, 1, ...
MonthIndex pseudo_month_index(std::size_t n, std::size_t days_per_month, int months_per_year);

/// Piecewise-constant mean. Change-points are segment ends: segment k
/// (1-based) covers 0-based indices [t_{k-1}, t_k) with t_0 = 0, t_K = n,
/// which is the 1-based closed interval [t_{k-1}+1, t_k].
class Segmentation {
public:
    Segmentation() = default;
    Segmentation(std::size_t n, std::vector<std::size_t> changepoints, std::vector<double> means);

    [[nodiscard]] std::size_t n() const noexcept { return n_; }
    [[nodiscard]] std::size_t K() const noexcept { return means_.size(); }
    [[nodiscard]] std::span<const std::size_t> changepoints() const noexcept { return changepoints_; }
    [[nodiscard]] std::span<const double> means() const noexcept { return means_; }
    /// t_0..t_K.
    [[nodiscard]] std::vector<std::size_t> boundaries() const;
    [[nodiscard]] std::vector<std::size_t> segment_lengths() const;
    /// Mean of the segment containing each index.
    [[nodiscard]] std::vector<double> expand() const;

private:
    std::size_t n_{0};
    std::vector<std::size_t> changepoints_;
    std::vector<double> means_;
};

enum class ScaleSource { RobustEstimated, Homogeneous, Provided };

/// Per-month noise standard deviations. Months without observations are
/// flagged absent and never used as weights.
struct MonthlyStd {
    std::array<double, kMonths> sigma{};
    std::array<bool, kMonths> present{};
    ScaleSource source{ScaleSource::Provided};

    [[nodiscard]] double of(int month) const { return sigma.at(month - 1); }
    /// 1/sigma^2 per observation. Throws DegenerateScaleError if a used
    /// month has a non-positive or absent sigma.
    [[nodiscard]] std::vector<double> weights(const MonthIndex& months) const;

    static MonthlyStd homogeneous(double s);
};

/// f(phase) = sum_i a_i cos(2 pi i phase / L) + b_i sin(2 pi i phase / L).
/// Coefficients are interleaved as (a_1, b_1, a_2, b_2, ...).
struct FourierModel {
    int order{0};
    double period{365.25};
    std::vector<double> coeffs;
    std::vector<bool> active;

    FourierModel() = default;
    FourierModel(int order, double period);

    [[nodiscard]] double a(int i) const { return coeffs.at(2 * (i - 1)); }
    [[nodiscard]] double b(int i) const { return coeffs.at(2 * (i - 1) + 1); }
    [[nodiscard]] std::size_t active_count() const;
};

std::vector<double> evaluate_fourier(const FourierModel& model, std::span<const double> phase);

/// Day-of-year phase for calendar data (the leap-day 366 is kept as is).
std::vector<double> calendar_phase(const TimeSeries& series);
/// Raw 1-based index phase used by the simulation design.
std::vector<double> index_phase(std::size_t n);

}  // namespace segiwv
