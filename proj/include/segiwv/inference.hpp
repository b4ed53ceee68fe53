#pragma once

#include "segiwv/periodic_fit.hpp"
#include "segiwv/segmentation.hpp"
#include "segiwv/types.hpp"

#include <optional>
#include <string_view>
#include <vector>

namespace segiwv {

/// (a) full model, (b) full model with significance selection of the
/// Fourier terms, (c) segmentation only, (d) homogeneous variance.
enum class Variant { Full, Selection, SegmentationOnly, Homogeneous };

enum class Initialization {
    UnweightedFunctionFirst,  // OLS fit of f with an intercept on y
    SegmentationFirst,        // DP on y, f = 0
    WeightedFunctionFirst,    // weighted fit of f on y
    WeightedFunctionCentered  // weighted fit of f on y - mean(y)
};

Variant parse_variant(std::string_view text);
Initialization parse_initialization(std::string_view text);
char variant_letter(Variant v);
std::string_view initialization_name(Initialization init);

struct InferenceOptions {
    std::size_t k_max{30};
    Variant variant{Variant::Full};
    Initialization init{Initialization::UnweightedFunctionFirst};
    double stop_tol{1e-6};
    int max_iters{100};
    bool accelerate{false};
    /// When the DP returns the change-points of the previous iteration,
    /// means and coefficients are re-estimated jointly (the exact minimiser
    /// for that segmentation) instead of by one alternating half-step.
    bool joint_refit{true};
    int fourier_order{4};
    double selection_alpha{0.001};
    bool refit_after_selection{true};
    bool update_variance{false};
    /// f = a_1 cos(w_1 phase) only.
    bool known_shape{false};
    std::size_t min_segment_length{1};
    /// Workers used across K by infer_all_k (0 = thread_count()).
    std::size_t threads{0};

    /// Throws std::invalid_argument on out-of-range values.
    void validate() const;
    /// Order actually fitted once variant (c) and the known-shape switch
    /// are taken into account.
    [[nodiscard]] int effective_order() const;
};

/// The series together with its month labels and Fourier phase.
struct SegmentationProblem {
    TimeSeries series;
    MonthIndex months;
    std::vector<double> phase;
    double period{365.25};

    SegmentationProblem(TimeSeries series, MonthIndex months, std::vector<double> phase, double period);
    /// Calendar months, day-of-year phase and L = 365.25.
    static SegmentationProblem from_series(const TimeSeries& series);

    [[nodiscard]] std::size_t size() const noexcept { return series.size(); }
    [[nodiscard]] std::span<const double> y() const noexcept { return series.values(); }
};

struct FixedKResult {
    std::size_t K{1};
    Segmentation segmentation;
    FourierModel model;
    MonthlyStd sigma;
    /// Weighted SSR sum w_t (y_t - mu_t - f_t)^2 of the returned iterate.
    double ssr{0.0};
    int iterations{0};
    bool converged{false};
    /// Objective after initialisation and after every accepted iteration.
    /// Weighted SSR, or the negative Gaussian log-likelihood (up to a
    /// constant) when the variance is updated.
    std::vector<double> objective;
};

/// Alternates a weighted fit of f on y - mu and an exact DP segmentation of
/// y - f with weights 1/sigma^2, until the relative sup-norm change of the
/// fitted mu + f falls below stop_tol. Without convergence the iterate with
/// the best objective is returned with converged = false.
FixedKResult infer_fixed_k(const SegmentationProblem& problem, const MonthlyStd& sigma, std::size_t K,
                           const InferenceOptions& opts);

struct InferenceResult {
    MonthlyStd sigma;
    /// per_k[K-1].
    std::vector<FixedKResult> per_k;

    [[nodiscard]] std::vector<double> ssr_curve() const;
    [[nodiscard]] std::vector<Segmentation> segmentations() const;
    [[nodiscard]] const FixedKResult& at(std::size_t K) const { return per_k.at(K - 1); }
};

/// Variance estimation (robust per month, or homogeneous for variant (d))
/// followed by infer_fixed_k for K = 1..k_max, run concurrently over K.
InferenceResult infer_all_k(const SegmentationProblem& problem, const InferenceOptions& opts);
/// Same with a caller-supplied variance.
InferenceResult infer_all_k(const SegmentationProblem& problem, const MonthlyStd& sigma,
                            const InferenceOptions& opts);
InferenceResult infer_all_k(const TimeSeries& series, const InferenceOptions& opts);

/// Scale estimate that infer_all_k would use for this problem.
MonthlyStd estimate_sigma(const SegmentationProblem& problem, Variant variant);

}  // namespace segiwv
