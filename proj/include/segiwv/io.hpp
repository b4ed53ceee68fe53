#pragma once

#include "segiwv/inference.hpp"
#include "segiwv/model_selection.hpp"
#include "segiwv/types.hpp"
#include "segiwv/validation.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace segiwv {

/// Reads `date,value` or `date,gnss,erai` (value = gnss - erai). Empty,
/// NaN or infinite values are dropped and counted. Malformed rows raise
/// DataError with the line number.
IngestResult read_series_csv(std::istream& in);
IngestResult read_series_csv(const std::filesystem::path& path);

/// One criterion's retained segmentation.
struct CriterionReport {
    Criterion criterion{Criterion::BM1};
    std::size_t K{1};
    double constant{0.0};
    std::vector<std::size_t> changepoints;
    std::vector<std::string> changepoint_dates;
    /// mu_{k+1} - mu_k at each change-point.
    std::vector<double> offsets;
    std::vector<bool> outliers;
    std::vector<double> means;
    std::vector<double> fourier;
    std::vector<bool> fourier_active;
    int iterations{0};
    bool converged{false};

    bool operator==(const CriterionReport&) const = default;
};

struct RunResult {
    std::string station;
    std::string first_date;
    std::string last_date;
    std::size_t n{0};
    std::size_t dropped_non_finite{0};
    char variant{'a'};
    std::string init{"default"};
    std::size_t k_max{30};
    int fourier_order{4};
    double period{365.25};
    std::string sigma_source;
    /// Per calendar month; absent months are null in JSON and NaN here.
    std::vector<double> sigma;
    std::vector<double> ssr;
    std::vector<int> iterations;
    std::vector<bool> converged;
    std::vector<CriterionReport> selections;
    double runtime_seconds{0.0};

    [[nodiscard]] const CriterionReport* find(Criterion c) const;
    bool operator==(const RunResult& other) const;
};

/// Packs inference and selection output for the series.
RunResult make_run_result(const std::string& station, const IngestResult& data, const SegmentationProblem& problem,
                          const InferenceResult& inference, const SelectionResult& selection,
                          const InferenceOptions& opts, const OutlierRule& rule = {});

void write_result_json(std::ostream& out, const RunResult& result);
RunResult read_result_json(std::istream& in);

/// date,y,mu,f,residual for one retained fit.
void write_series_fit_csv(std::ostream& out, const SegmentationProblem& problem, const FixedKResult& fit);

/// Detections of one criterion, ready for validation.
std::vector<Detection> detections_of(const CriterionReport& report);

}  // namespace segiwv
