#include "segiwv/types.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <cmath>
#include <numbers>
#include <numeric>

namespace segiwv {

using namespace std::chrono;

namespace {

int parse_int(std::string_view text) {
    int value = 0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end) {
        throw DataError("unparseable date component '" + std::string(text) + "'");
    }
    return value;
}

}  // namespace

Date parse_date(std::string_view text) {
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
        throw DataError("unparseable date '" + std::string(text) + "' (expected YYYY-MM-DD)");
    }
    const year_month_day ymd{year{parse_int(text.substr(0, 4))},
                             month{static_cast<unsigned>(parse_int(text.substr(5, 2)))},
                             day{static_cast<unsigned>(parse_int(text.substr(8, 2)))}};
    if (!ymd.ok()) {
        throw DataError("invalid calendar date '" + std::string(text) + "'");
    }
    return sys_days{ymd};
}

std::string format_date(Date d) {
    const year_month_day ymd{d};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

std::string format_number(double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

int day_of_year(Date d) {
    const year_month_day ymd{d};
    return static_cast<int>((d - sys_days{ymd.year() / January / 1}).count()) + 1;
}

int calendar_month(Date d) {
    return static_cast<int>(static_cast<unsigned>(year_month_day{d}.month()));
}

TimeSeries::TimeSeries(std::vector<Date> dates, std::vector<double> values)
    : dates_(std::move(dates)), values_(std::move(values)) {
    if (dates_.size() != values_.size()) {
        throw std::invalid_argument("TimeSeries: dates and values differ in length");
    }
    if (values_.empty()) {
        throw DataError("TimeSeries: no observations");
    }
    for (std::size_t t = 0; t < values_.size(); ++t) {
        if (!std::isfinite(values_[t])) {
            throw DataError("TimeSeries: non-finite value at " + format_date(dates_[t]));
        }
        if (t > 0 && !(dates_[t - 1] < dates_[t])) {
            throw DataError("TimeSeries: dates not strictly increasing at " + format_date(dates_[t]));
        }
    }
}

bool TimeSeries::adjacent_days(std::size_t t) const {
    return t > 0 && t < dates_.size() && (dates_[t] - dates_[t - 1]).count() == 1;
}

IngestResult ingest(std::span<const RawRecord> records) {
    std::vector<std::pair<Date, double>> rows;
    rows.reserve(records.size());
    std::size_t dropped = 0;
    for (const auto& r : records) {
        const Date d = parse_date(r.date);
        if (!std::isfinite(r.value)) {
            ++dropped;
            continue;
        }
        rows.emplace_back(d, r.value);
    }
    if (rows.empty()) {
        throw DataError("ingest: no finite observations");
    }
    std::stable_sort(rows.begin(), rows.end(),
                     [](const auto& x, const auto& y) { return x.first < y.first; });
    std::vector<Date> dates;
    std::vector<double> values;
    dates.reserve(rows.size());
    values.reserve(rows.size());
    for (const auto& [d, v] : rows) {
        if (!dates.empty() && dates.back() == d) {
            throw DataError("ingest: duplicate date " + format_date(d));
        }
        dates.push_back(d);
        values.push_back(v);
    }
    return {TimeSeries(std::move(dates), std::move(values)), dropped};
}

MonthIndex::MonthIndex(std::vector<std::uint8_t> labels) : labels_(std::move(labels)) {
    for (const auto m : labels_) {
        if (m < 1 || m > kMonths) {
            throw std::invalid_argument("MonthIndex: label outside 1..12");
        }
        ++counts_[m - 1];
    }
}

MonthIndex month_index(const TimeSeries& series) {
    std::vector<std::uint8_t> labels(series.size());
    for (std::size_t t = 0; t < series.size(); ++t) {
        labels[t] = static_cast<std::uint8_t>(calendar_month(series.date(t)));
    }
    return MonthIndex(std::move(labels));
}

MonthIndex pseudo_month_index(std::size_t n, std::size_t days_per_month, int months_per_year) {
    if (days_per_month == 0 || months_per_year < 1 || months_per_year > kMonths) {
        throw std::invalid_argument("pseudo_month_index: invalid calendar");
    }
    std::vector<std::uint8_t> labels(n);
    for (std::size_t t = 0; t < n; ++t) {
        labels[t] = static_cast<std::uint8_t>((t / days_per_month) % months_per_year + 1);
    }
    return MonthIndex(std::move(labels));
}

Segmentation::Segmentation(std::size_t n, std::vector<std::size_t> changepoints, std::vector<double> means)
    : n_(n), changepoints_(std::move(changepoints)), means_(std::move(means)) {
    if (n_ == 0) {
        throw std::invalid_argument("Segmentation: n must be positive");
    }
    if (means_.size() != changepoints_.size() + 1) {
        throw std::invalid_argument("Segmentation: need exactly one mean per segment");
    }
    std::size_t prev = 0;
    for (const auto t : changepoints_) {
        if (t <= prev || t >= n_) {
            throw std::invalid_argument("Segmentation: change-points must satisfy 0 < t_1 < ... < t_{K-1} < n");
        }
        prev = t;
    }
}

std::vector<std::size_t> Segmentation::boundaries() const {
    std::vector<std::size_t> b;
    b.reserve(changepoints_.size() + 2);
    b.push_back(0);
    b.insert(b.end(), changepoints_.begin(), changepoints_.end());
    b.push_back(n_);
    return b;
}

std::vector<std::size_t> Segmentation::segment_lengths() const {
    const auto b = boundaries();
    std::vector<std::size_t> len(b.size() - 1);
    for (std::size_t k = 0; k + 1 < b.size(); ++k) len[k] = b[k + 1] - b[k];
    return len;
}

std::vector<double> Segmentation::expand() const {
    std::vector<double> out(n_);
    const auto b = boundaries();
    for (std::size_t k = 0; k + 1 < b.size(); ++k) {
        std::fill(out.begin() + static_cast<std::ptrdiff_t>(b[k]),
                  out.begin() + static_cast<std::ptrdiff_t>(b[k + 1]), means_[k]);
    }
    return out;
}

std::vector<double> MonthlyStd::weights(const MonthIndex& months) const {
    std::array<double, kMonths> w{};
    for (int m = 0; m < kMonths; ++m) {
        if (months.count(m + 1) == 0) continue;
        if (!present[m] || !(sigma[m] > 0.0) || !std::isfinite(sigma[m])) {
            throw DegenerateScaleError("monthly standard deviation for month " + std::to_string(m + 1) +
                                       " is not positive");
        }
        w[m] = 1.0 / (sigma[m] * sigma[m]);
    }
    std::vector<double> out(months.size());
    for (std::size_t t = 0; t < out.size(); ++t) out[t] = w[months.month_of(t) - 1];
    return out;
}

MonthlyStd MonthlyStd::homogeneous(double s) {
    MonthlyStd out;
    out.sigma.fill(s);
    out.present.fill(true);
    out.source = ScaleSource::Homogeneous;
    return out;
}

FourierModel::FourierModel(int order_, double period_)
    : order(order_), period(period_),
      coeffs(static_cast<std::size_t>(2 * std::max(order_, 0)), 0.0),
      active(static_cast<std::size_t>(2 * std::max(order_, 0)), true) {
    if (order_ < 0) throw std::invalid_argument("FourierModel: negative order");
    if (!(period_ > 0.0)) throw std::invalid_argument("FourierModel: period must be positive");
}

std::size_t FourierModel::active_count() const {
    return static_cast<std::size_t>(std::count(active.begin(), active.end(), true));
}

std::vector<double> evaluate_fourier(const FourierModel& model, std::span<const double> phase) {
    std::vector<double> f(phase.size(), 0.0);
    for (int i = 1; i <= model.order; ++i) {
        const double a = model.active[2 * (i - 1)] ? model.a(i) : 0.0;
        const double b = model.active[2 * (i - 1) + 1] ? model.b(i) : 0.0;
        if (a == 0.0 && b == 0.0) continue;
        const double w = 2.0 * std::numbers::pi * i / model.period;
        for (std::size_t t = 0; t < phase.size(); ++t) {
            f[t] += a * std::cos(w * phase[t]) + b * std::sin(w * phase[t]);
        }
    }
    return f;
}

std::vector<double> calendar_phase(const TimeSeries& series) {
    std::vector<double> p(series.size());
    for (std::size_t t = 0; t < p.size(); ++t) p[t] = day_of_year(series.date(t));
    return p;
}

std::vector<double> index_phase(std::size_t n) {
    std::vector<double> p(n);
    std::iota(p.begin(), p.end(), 1.0);
    return p;
}

}  // namespace segiwv
