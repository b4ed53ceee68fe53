#pragma once

#include "segiwv/types.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace segiwv {

/// Columns cos(w_i phase), sin(w_i phase), i = 1..order, w_i = 2 pi i / L.
class HarmonicDesign {
public:
    HarmonicDesign(std::span<const double> phase, double period, int order);

    [[nodiscard]] int order() const noexcept { return order_; }
    [[nodiscard]] double period() const noexcept { return period_; }
    [[nodiscard]] std::size_t rows() const noexcept { return static_cast<std::size_t>(x_.rows()); }
    [[nodiscard]] std::size_t cols() const noexcept { return static_cast<std::size_t>(x_.cols()); }
    [[nodiscard]] const Eigen::MatrixXd& matrix() const noexcept { return x_; }

private:
    int order_;
    double period_;
    Eigen::MatrixXd x_;
};

/// f on the design rows; equals evaluate_fourier on the design's phases.
std::vector<double> evaluate_fourier(const FourierModel& model, const HarmonicDesign& design);

/// Per-coefficient inference in the known-variance regime. Inactive
/// coefficients carry estimate 0, standard error 0 and p-value 1.
struct FitDiagnostics {
    std::vector<double> estimate;
    std::vector<double> std_error;
    std::vector<double> t_stat;
    std::vector<double> p_value;
    double weighted_rss{0.0};
};

struct HarmonicFit {
    FourierModel model;
    FitDiagnostics diagnostics;
};

/// Two-sided Gaussian p-value of a t-statistic.
double gaussian_p_value(double t);

/// Minimises sum w_t (residual_t - f_t)^2 over the active coefficients by a
/// column-pivoted QR of the row-scaled design. Standard errors come from
/// (X' W X)^{-1}, i.e. the weights are read as inverse variances.
/// Throws RankDeficientError when the active columns are not of full rank.
HarmonicFit fit_weighted(std::span<const double> residual, std::span<const double> weights,
                         const HarmonicDesign& design, const std::vector<bool>& active);
HarmonicFit fit_weighted(std::span<const double> residual, std::span<const double> weights,
                         const HarmonicDesign& design);

/// Joint weighted least squares of the signal on the segment indicators of
/// `seg` and the active harmonic columns. Diagnostics cover the harmonic
/// coefficients only.
struct JointFit {
    HarmonicFit harmonic;
    std::vector<double> means;
};
JointFit fit_weighted_joint(std::span<const double> signal, std::span<const double> weights,
                            const HarmonicDesign& design, const std::vector<bool>& active, const Segmentation& seg);

/// Ordinary least squares on the raw signal with an extra intercept column.
/// The intercept is returned separately and is not part of the model.
struct UnweightedFit {
    FourierModel model;
    double intercept{0.0};
};
UnweightedFit fit_unweighted(std::span<const double> signal, const HarmonicDesign& design);

/// Masks every coefficient whose p-value is >= alpha. With `refit` the
/// surviving columns are re-estimated alone, otherwise the dropped ones are
/// simply zeroed. Removing every term yields the zero function.
HarmonicFit select_significant(const HarmonicFit& fit, double alpha, const HarmonicDesign& design,
                               std::span<const double> residual, std::span<const double> weights,
                               bool refit = true);

}  // namespace segiwv
