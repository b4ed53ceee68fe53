#pragma once

#include "segiwv/inference.hpp"
#include "segiwv/model_selection.hpp"
#include "segiwv/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace segiwv {

/// Synthetic design: two pseudo-months of 50 days alternating, 7 segments
/// with means 0/1, a cosine bias of period 100 and month-dependent noise.
struct SimConfig {
    std::size_t n{400};
    std::size_t days_per_month{50};
    int months_per_year{2};
    std::vector<std::size_t> changepoints{55, 77, 177, 222, 300, 366};
    std::vector<double> means{0, 1, 0, 1, 0, 1, 0};
    double amplitude{0.7};
    double period{100.0};
    double sigma1{0.5};
    double sigma2{0.1};
    std::size_t replicates{100};
    std::uint64_t seed{20190101};

    void validate() const;
    /// Noise standard deviation of pseudo-month m (1-based, odd -> sigma1).
    [[nodiscard]] double sigma_of_month(int m) const { return (m % 2 == 1) ? sigma1 : sigma2; }
};

struct SimulatedSeries {
    SegmentationProblem problem;
    Segmentation truth;
    std::vector<double> mu;
    std::vector<double> f;
    MonthlyStd sigma;
};

/// Seed of replicate `index` derived from the base seed (splitmix64).
std::uint64_t replicate_seed(std::uint64_t base, std::uint64_t index);

/// y = mu* + f* + noise on consecutive days from 2000-01-01, pseudo-month
/// labels, phase t = 1..n.
SimulatedSeries generate(const SimConfig& config, std::uint64_t seed);

struct Hausdorff {
    std::optional<double> d1;
    std::optional<double> d2;
};

/// d1 = max over estimated of the distance to the nearest true point,
/// d2 = max over true of the distance to the nearest estimated point.
/// Both are empty when no change-point was estimated.
Hausdorff hausdorff(std::span<const std::size_t> truth, std::span<const std::size_t> estimate);

double rmse(std::span<const double> truth, std::span<const double> estimate);

/// Label of the fixed-K condition in study outputs.
inline constexpr std::string_view kTrueK = "true";

struct ReplicateScore {
    std::string criterion;
    std::size_t K{1};
    long k_error{0};
    double rmse_mu{0.0};
    double rmse_f{0.0};
    std::optional<double> d1;
    std::optional<double> d2;
    std::vector<std::size_t> changepoints;
};

struct ReplicateRecord {
    double sigma1{0.0};
    double sigma2{0.0};
    std::size_t replicate{0};
    std::uint64_t seed{0};
    /// Estimated scale of pseudo-months 1 and 2.
    double sigma1_hat{0.0};
    double sigma2_hat{0.0};
    std::vector<ReplicateScore> scores;
};

struct StudyConfig {
    /// sigma2 is taken from the grid below.
    SimConfig sim;
    std::vector<double> sigma2_grid{0.1, 0.3, 0.5, 0.7, 0.9, 1.1, 1.3, 1.5};
    std::vector<Criterion> criteria{kAllCriteria[0], kAllCriteria[1], kAllCriteria[2], kAllCriteria[3]};
    bool include_true_k{true};
    InferenceOptions inference;
    /// A true change-point counts as detected when an estimate lies within
    /// this many indices.
    std::size_t detection_tolerance{5};
    std::size_t threads{0};
};

/// Scores one simulated series against its truth.
ReplicateScore score(const SimulatedSeries& sim, std::string criterion, const FixedKResult& fit);

/// Generate, infer for K = 1..k_max, select with each criterion and score;
/// also the fixed true-K fit when requested. Records are ordered by
/// (sigma2, replicate) whatever the thread count.
std::vector<ReplicateRecord> run_study(const StudyConfig& config);
ReplicateRecord run_replicate(const StudyConfig& config, double sigma2, std::size_t replicate);

struct SummaryRow {
    double sigma1{0.0};
    double sigma2{0.0};
    std::string criterion;
    std::string metric;
    /// Probability level, or the change-point position for detection rows.
    double quantile{0.0};
    double value{0.0};
};

/// Linear-interpolation quantile of an unsorted sample (non-empty).
double quantile(std::vector<double> sample, double p);

inline constexpr double kSummaryLevels[] = {0.1, 0.25, 0.5, 0.75, 0.9};

/// Quantiles of k_error, rmse_mu, rmse_f, d1, d2 per criterion, of the
/// scale errors (criterion "none"), per-true-position detection rates and
/// histograms of estimated positions ("detection_count").
std::vector<SummaryRow> summarize(std::span<const ReplicateRecord> records, std::span<const std::size_t> truth,
                                  std::size_t detection_tolerance);

void write_summary_csv(std::ostream& out, std::span<const SummaryRow> rows);
void write_replicates_jsonl(std::ostream& out, std::span<const ReplicateRecord> records);
std::vector<ReplicateRecord> read_replicates_jsonl(std::istream& in);

}  // namespace segiwv
