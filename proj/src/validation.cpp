#include "segiwv/validation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <istream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace segiwv {

ChangeType parse_change_type(std::string_view text) {
    if (text == "R") return ChangeType::Receiver;
    if (text == "A") return ChangeType::Antenna;
    if (text == "D") return ChangeType::Radome;
    if (text == "P") return ChangeType::Processing;
    throw DataError("unknown change type '" + std::string(text) + "' (expected R, A, D or P)");
}

MetadataLog::MetadataLog(std::vector<MetadataEvent> events) : events_(std::move(events)) {}

bool MetadataLog::has_station(const std::string& station) const {
    return std::any_of(events_.begin(), events_.end(), [&](const MetadataEvent& e) { return e.station == station; });
}

std::vector<std::string> MetadataLog::stations() const {
    std::set<std::string> s;
    for (const auto& e : events_) s.insert(e.station);
    return {s.begin(), s.end()};
}

std::vector<MetadataLog::Event> MetadataLog::events_for(const std::string& station) const {
    static constexpr char kOrder[] = {'R', 'A', 'D', 'P'};
    std::vector<std::pair<Date, char>> rows;
    for (const auto& e : events_) {
        if (e.station == station) rows.emplace_back(e.date, static_cast<char>(e.type));
    }
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<Event> out;
    for (std::size_t i = 0; i < rows.size();) {
        std::size_t j = i;
        std::set<char> types;
        while (j < rows.size() && rows[j].first == rows[i].first) types.insert(rows[j++].second);
        std::string label;
        for (const char c : kOrder) {
            if (!types.contains(c)) continue;
            if (!label.empty()) label += '+';
            label += c;
        }
        out.push_back({rows[i].first, label});
        i = j;
    }
    return out;
}

namespace {

std::string trim(std::string s) {
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

MetadataLog read_metadata_csv(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    bool header = false;
    std::vector<MetadataEvent> events;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        const auto cells = split(line);
        if (!header) {
            if (cells != std::vector<std::string>{"station", "date", "type"}) {
                throw DataError("metadata line " + std::to_string(line_no) + ": expected header 'station,date,type'");
            }
            header = true;
            continue;
        }
        if (cells.size() != 3 || cells[0].empty()) {
            throw DataError("metadata line " + std::to_string(line_no) + ": expected 3 fields");
        }
        try {
            events.push_back({cells[0], parse_date(cells[1]), parse_change_type(cells[2])});
        } catch (const DataError& e) {
            throw DataError("metadata line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (!header) throw DataError("metadata: missing header 'station,date,type'");
    return MetadataLog(std::move(events));
}

ValidationReport validate(std::span<const Detection> detections, std::span<const MetadataLog::Event> events,
                          long window_days) {
    if (window_days < 0) throw std::invalid_argument("validate: negative window");
    ValidationReport rep;
    rep.window_days = window_days;
    rep.detections = detections.size();
    rep.matches.reserve(detections.size());
    for (const auto& d : detections) {
        DetectionMatch m;
        m.detection = d;
        long best = std::numeric_limits<long>::max();
        for (const auto& e : events) {
            const long dist = (d.date - e.date).count();
            if (std::abs(dist) < best) {
                best = std::abs(dist);
                m.event_date = e.date;
                m.event_types = e.types;
                m.distance_days = dist;
            }
        }
        rep.matches.push_back(std::move(m));
        if (d.outlier) ++rep.outliers;
    }

    // (outlier, |distance|, detection, event)
    std::vector<std::tuple<bool, long, std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < detections.size(); ++i) {
        for (std::size_t j = 0; j < events.size(); ++j) {
            const long dist = std::abs((detections[i].date - events[j].date).count());
            if (dist <= window_days) pairs.emplace_back(detections[i].outlier, dist, i, j);
        }
    }
    std::sort(pairs.begin(), pairs.end());
    std::vector<bool> det_used(detections.size(), false), ev_used(events.size(), false);
    for (const auto& [outlier, dist, i, j] : pairs) {
        if (det_used[i] || ev_used[j]) continue;
        det_used[i] = ev_used[j] = true;
        auto& m = rep.matches[i];
        m.validated = true;
        m.event_date = events[j].date;
        m.event_types = events[j].types;
        m.distance_days = (detections[i].date - events[j].date).count();
        ++rep.validations;
    }

    std::size_t clean_validated = 0;
    for (const auto& m : rep.matches) {
        if (m.validated && !m.detection.outlier) ++clean_validated;
    }
    if (rep.detections > 0) {
        rep.percent_with_outliers = 100.0 * static_cast<double>(rep.validations) / static_cast<double>(rep.detections);
    }
    if (rep.detections > rep.outliers) {
        rep.percent_without_outliers =
            100.0 * static_cast<double>(clean_validated) / static_cast<double>(rep.detections - rep.outliers);
    }
    return rep;
}

Date changepoint_date(std::span<const Date> dates, std::size_t changepoint) {
    if (changepoint == 0 || changepoint > dates.size()) throw std::invalid_argument("changepoint_date: index out of range");
    return dates[changepoint - 1];
}

std::vector<bool> classify_outliers(const Segmentation& seg, std::span<const Date> dates, const MonthlyStd& sigma,
                                    const MonthIndex& months, const OutlierRule& rule) {
    if (dates.size() != seg.n() || months.size() != seg.n()) {
        throw std::invalid_argument("classify_outliers: dates or months do not match the segmentation");
    }
    const auto cps = seg.changepoints();
    const auto mu = seg.means();
    std::vector<bool> flags(cps.size(), false);
    // Segment k + 1 (0-based) lies between change-points k and k + 1.
    for (std::size_t k = 0; k + 1 < cps.size(); ++k) {
        const std::size_t first = cps[k];
        const std::size_t last = cps[k + 1] - 1;
        const long days = (dates[last] - dates[first]).count() + 1;
        if (days > rule.gap_days) continue;
        const double up = mu[k + 1] - mu[k];
        const double down = mu[k + 2] - mu[k + 1];
        if (!(up * down < 0.0)) continue;
        const double s = sigma.of(months.month_of(first));
        if (std::abs(up) > rule.amp_factor * s && std::abs(down) > rule.amp_factor * s) {
            flags[k] = flags[k + 1] = true;
        }
    }
    return flags;
}

AggregateRow aggregate(std::span<const ValidationReport> reports) {
    AggregateRow row;
    row.stations = reports.size();
    if (reports.empty()) return row;
    row.min_detections = std::numeric_limits<std::size_t>::max();
    std::size_t clean = 0, clean_validated = 0;
    for (const auto& r : reports) {
        if (r.detections > 0) ++row.stations_with_changepoints;
        row.min_detections = std::min(row.min_detections, r.detections);
        row.max_detections = std::max(row.max_detections, r.detections);
        row.detections += r.detections;
        row.outliers += r.outliers;
        row.validations += r.validations;
        clean += r.detections - r.outliers;
        for (const auto& m : r.matches) {
            if (m.validated && !m.detection.outlier) ++clean_validated;
        }
    }
    row.mean_detections = static_cast<double>(row.detections) / static_cast<double>(reports.size());
    if (row.detections > 0) {
        row.percent_with_outliers = 100.0 * static_cast<double>(row.validations) / static_cast<double>(row.detections);
    }
    if (clean > 0) row.percent_without_outliers = 100.0 * static_cast<double>(clean_validated) / static_cast<double>(clean);
    return row;
}

}  // namespace segiwv
