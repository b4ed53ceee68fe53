#pragma once

#include "segiwv/types.hpp"

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace segiwv {

/// Receiver, antenna, radome or processing change.
enum class ChangeType : char { Receiver = 'R', Antenna = 'A', Radome = 'D', Processing = 'P' };

ChangeType parse_change_type(std::string_view text);

struct MetadataEvent {
    std::string station;
    Date date;
    ChangeType type{ChangeType::Receiver};
};

/// Documented changes; events of one station on one date are merged into a
/// single event carrying several types.
class MetadataLog {
public:
    MetadataLog() = default;
    explicit MetadataLog(std::vector<MetadataEvent> events);

    struct Event {
        Date date;
        /// Types in R, A, D, P order, e.g. "R+A".
        std::string types;
    };

    [[nodiscard]] bool empty() const noexcept { return events_.empty(); }
    [[nodiscard]] std::size_t size() const noexcept { return events_.size(); }
    [[nodiscard]] bool has_station(const std::string& station) const;
    [[nodiscard]] std::vector<std::string> stations() const;
    /// Merged events of a station sorted by date.
    [[nodiscard]] std::vector<Event> events_for(const std::string& station) const;

private:
    std::vector<MetadataEvent> events_;
};

/// CSV with header `station,date,type`. Throws DataError naming the line.
MetadataLog read_metadata_csv(std::istream& in);

struct Detection {
    Date date;
    double offset{0.0};
    bool outlier{false};
};

struct DetectionMatch {
    Detection detection;
    /// Nearest documented event (the matched one when validated).
    std::optional<Date> event_date;
    std::string event_types;
    /// detection date minus event date, in days.
    std::optional<long> distance_days;
    bool validated{false};
};

struct ValidationReport {
    std::string station;
    long window_days{30};
    std::vector<DetectionMatch> matches;
    std::size_t detections{0};
    std::size_t outliers{0};
    std::size_t validations{0};
    /// 100 validations / detections.
    double percent_with_outliers{0.0};
    /// 100 validated non-outliers / non-outlier detections.
    double percent_without_outliers{0.0};
};

/// Matches detections and events one to one, greedily by increasing
/// absolute distance within the window (non-outliers served first).
ValidationReport validate(std::span<const Detection> detections, std::span<const MetadataLog::Event> events,
                          long window_days = 30);

struct OutlierRule {
    long gap_days{30};
    double amp_factor{2.0};
};

/// A segment of at most gap_days calendar days whose two bounding offsets
/// have opposite signs and both exceed amp_factor times the noise scale of
/// the segment's first month marks both bounding change-points as outliers.
/// Returns one flag per change-point.
std::vector<bool> classify_outliers(const Segmentation& seg, std::span<const Date> dates, const MonthlyStd& sigma,
                                    const MonthIndex& months, const OutlierRule& rule = {});

/// Date of a change-point: the last day of the segment it closes.
Date changepoint_date(std::span<const Date> dates, std::size_t changepoint);

/// Aggregate over stations: number of stations with change-points,
/// min/mean/max detections per station, totals and both percentages.
struct AggregateRow {
    std::size_t stations{0};
    std::size_t stations_with_changepoints{0};
    std::size_t min_detections{0};
    double mean_detections{0.0};
    std::size_t max_detections{0};
    std::size_t detections{0};
    std::size_t outliers{0};
    std::size_t validations{0};
    double percent_with_outliers{0.0};
    double percent_without_outliers{0.0};
};

AggregateRow aggregate(std::span<const ValidationReport> reports);

}  // namespace segiwv
