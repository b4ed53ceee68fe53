#include "segiwv/inference.hpp"

#include "segiwv/parallel.hpp"
#include "segiwv/robust_scale.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace segiwv {

Variant parse_variant(std::string_view text) {
    if (text == "a") return Variant::Full;
    if (text == "b") return Variant::Selection;
    if (text == "c") return Variant::SegmentationOnly;
    if (text == "d") return Variant::Homogeneous;
    throw std::invalid_argument("unknown variant '" + std::string(text) + "' (expected a, b, c or d)");
}

Initialization parse_initialization(std::string_view text) {
    if (text == "default") return Initialization::UnweightedFunctionFirst;
    if (text == "seg-first") return Initialization::SegmentationFirst;
    if (text == "weighted") return Initialization::WeightedFunctionFirst;
    if (text == "weighted-centered") return Initialization::WeightedFunctionCentered;
    throw std::invalid_argument("unknown initialization '" + std::string(text) + "'");
}

char variant_letter(Variant v) {
    switch (v) {
        case Variant::Full: return 'a';
        case Variant::Selection: return 'b';
        case Variant::SegmentationOnly: return 'c';
        case Variant::Homogeneous: return 'd';
    }
    return '?';
}

std::string_view initialization_name(Initialization init) {
    switch (init) {
        case Initialization::UnweightedFunctionFirst: return "default";
        case Initialization::SegmentationFirst: return "seg-first";
        case Initialization::WeightedFunctionFirst: return "weighted";
        case Initialization::WeightedFunctionCentered: return "weighted-centered";
    }
    return "?";
}

void InferenceOptions::validate() const {
    if (k_max < 1) throw std::invalid_argument("k_max must be >= 1");
    if (!(stop_tol > 0.0)) throw std::invalid_argument("stop_tol must be positive");
    if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
    if (fourier_order < 0) throw std::invalid_argument("fourier_order must be >= 0");
    if (!(selection_alpha > 0.0 && selection_alpha <= 1.0)) {
        throw std::invalid_argument("selection_alpha must lie in (0, 1]");
    }
    if (min_segment_length < 1) throw std::invalid_argument("min_segment_length must be >= 1");
}

int InferenceOptions::effective_order() const {
    if (variant == Variant::SegmentationOnly) return 0;
    if (known_shape) return 1;
    return fourier_order;
}

SegmentationProblem::SegmentationProblem(TimeSeries series_, MonthIndex months_, std::vector<double> phase_,
                                         double period_)
    : series(std::move(series_)), months(std::move(months_)), phase(std::move(phase_)), period(period_) {
    if (months.size() != series.size() || phase.size() != series.size()) {
        throw std::invalid_argument("SegmentationProblem: month labels or phases do not match the series");
    }
    if (!(period > 0.0)) throw std::invalid_argument("SegmentationProblem: period must be positive");
}

SegmentationProblem SegmentationProblem::from_series(const TimeSeries& series) {
    return {series, month_index(series), calendar_phase(series), 365.25};
}

MonthlyStd estimate_sigma(const SegmentationProblem& problem, Variant variant) {
    if (variant == Variant::Homogeneous) return homogeneous_std(problem.series);
    return monthly_std(problem.series, problem.months);
}

namespace {

struct Iterate {
    Segmentation seg;
    FourierModel model;
    std::vector<double> mu;
    std::vector<double> f;
    MonthlyStd sigma;
    std::vector<double> w;
    double objective{0.0};
    bool from_dp{false};
};

class Solver {
public:
    Solver(const SegmentationProblem& problem, const MonthlyStd& sigma, std::size_t K, const InferenceOptions& opts)
        : p_(problem), o_(opts), K_(K), order_(opts.effective_order()),
          design_(problem.phase, problem.period, order_), sigma0_(sigma), w0_(sigma.weights(problem.months)) {
        mask_.assign(design_.cols(), true);
        if (o_.known_shape && order_ == 1) mask_[1] = false;
    }

    Iterate initial() const {
        const auto y = p_.y();
        const std::size_t n = y.size();
        Iterate it;
        it.sigma = sigma0_;
        it.w = w0_;
        double level = 0.0;
        switch (o_.init) {
            case Initialization::UnweightedFunctionFirst: {
                const auto uf = fit_unweighted(y, design_);
                it.model = uf.model;
                for (std::size_t j = 0; j < mask_.size(); ++j) {
                    if (!mask_[j]) {
                        it.model.coeffs[j] = 0.0;
                        it.model.active[j] = false;
                    }
                }
                level = uf.intercept;
                break;
            }
            case Initialization::SegmentationFirst:
                it.model = FourierModel(order_, p_.period);
                level = weighted_mean(y, it.w);
                break;
            case Initialization::WeightedFunctionFirst:
                it.model = fit_weighted(y, it.w, design_, mask_).model;
                break;
            case Initialization::WeightedFunctionCentered: {
                const double ybar = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
                std::vector<double> centred(y.begin(), y.end());
                for (auto& v : centred) v -= ybar;
                it.model = fit_weighted(centred, it.w, design_, mask_).model;
                level = ybar;
                break;
            }
        }
        it.f = evaluate_fourier(it.model, design_);
        it.seg = Segmentation(n, {}, {level});
        it.mu.assign(n, level);
        it.objective = objective(it);
        return it;
    }

    /// One full iteration: segmentation given f, then f given the
    /// segmentation, then (optionally) the variance.
    Iterate step(const Iterate& from) const {
        const auto y = p_.y();
        const std::size_t n = y.size();
        Iterate it;
        it.sigma = from.sigma;
        it.w = from.w;

        std::vector<double> z(n);
        for (std::size_t t = 0; t < n; ++t) z[t] = y[t] - from.f[t];
        auto dp = dp_segment(z, it.w, K_, o_.min_segment_length);
        it.seg = std::move(dp.segmentations.back());
        it.mu = it.seg.expand();

        const bool repeated = from.from_dp && order_ > 0 && o_.joint_refit &&
                              std::ranges::equal(it.seg.changepoints(), from.seg.changepoints());
        if (repeated) {
            auto joint = fit_joint(it.w, it.seg);
            it.seg = Segmentation(n, {it.seg.changepoints().begin(), it.seg.changepoints().end()},
                                  std::move(joint.means));
            it.mu = it.seg.expand();
            it.model = std::move(joint.harmonic.model);
        } else {
            std::vector<double> r(n);
            for (std::size_t t = 0; t < n; ++t) r[t] = y[t] - it.mu[t];
            it.model = fit_function(r, it.w);
        }
        it.f = evaluate_fourier(it.model, design_);
        it.from_dp = true;

        if (o_.update_variance) update_variance(it);
        it.objective = objective(it);
        return it;
    }

    /// Iterate whose function part carries the given coefficients.
    Iterate with_coefficients(const Iterate& base, const std::vector<double>& coeffs) const {
        Iterate it = base;
        it.model.coeffs = coeffs;
        it.model.active = mask_;
        for (std::size_t j = 0; j < mask_.size(); ++j) {
            if (!mask_[j]) it.model.coeffs[j] = 0.0;
        }
        it.f = evaluate_fourier(it.model, design_);
        return it;
    }

private:
    FourierModel fit_function(std::span<const double> r, std::span<const double> w) const {
        if (order_ == 0) return FourierModel(0, p_.period);
        auto fit = fit_weighted(r, w, design_, mask_);
        if (o_.variant == Variant::Selection) {
            fit = select_significant(fit, o_.selection_alpha, design_, r, w, o_.refit_after_selection);
        }
        return std::move(fit.model);
    }

    JointFit fit_joint(std::span<const double> w, const Segmentation& seg) const {
        auto joint = fit_weighted_joint(p_.y(), w, design_, mask_, seg);
        if (o_.variant != Variant::Selection) return joint;
        std::vector<bool> keep(mask_.size());
        bool dropped = false;
        for (std::size_t j = 0; j < keep.size(); ++j) {
            keep[j] = mask_[j] && joint.harmonic.diagnostics.p_value[j] < o_.selection_alpha;
            dropped = dropped || (mask_[j] && !keep[j]);
        }
        if (!dropped) return joint;
        if (o_.refit_after_selection) return fit_weighted_joint(p_.y(), w, design_, keep, seg);
        for (std::size_t j = 0; j < keep.size(); ++j) {
            if (keep[j]) continue;
            joint.harmonic.model.coeffs[j] = 0.0;
            joint.harmonic.model.active[j] = false;
        }
        return joint;
    }

    // Per-month maximum-likelihood variance of the current residuals,
    // floored at a tiny fraction of the initial estimate.
    void update_variance(Iterate& it) const {
        const auto y = p_.y();
        std::array<long double, kMonths> ss{};
        for (std::size_t t = 0; t < y.size(); ++t) {
            const double e = y[t] - it.mu[t] - it.f[t];
            ss[p_.months.month_of(t) - 1] += static_cast<long double>(e) * e;
        }
        for (int m = 0; m < kMonths; ++m) {
            const std::size_t nm = p_.months.count(m + 1);
            if (nm == 0) continue;
            const double s = std::sqrt(static_cast<double>(ss[m] / static_cast<long double>(nm)));
            it.sigma.sigma[m] = std::max(s, 1e-6 * sigma0_.sigma[m]);
        }
        it.w = it.sigma.weights(p_.months);
    }

    double objective(const Iterate& it) const {
        const auto y = p_.y();
        long double total = 0.0L;
        for (std::size_t t = 0; t < y.size(); ++t) {
            const double e = y[t] - it.mu[t] - it.f[t];
            total += static_cast<long double>(it.w[t]) * e * e;
        }
        if (o_.update_variance) {
            total *= 0.5L;
            for (std::size_t t = 0; t < y.size(); ++t) total += 0.5L * std::log(static_cast<long double>(1.0 / it.w[t]));
        }
        return static_cast<double>(total);
    }

    const SegmentationProblem& p_;
    const InferenceOptions& o_;
    std::size_t K_;
    int order_;
    HarmonicDesign design_;
    MonthlyStd sigma0_;
    std::vector<double> w0_;
    std::vector<bool> mask_;
};

double relative_change(const Iterate& prev, const Iterate& next) {
    const std::size_t n = prev.mu.size();
    double num = 0.0, den = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        const double a = prev.mu[t] + prev.f[t];
        const double b = next.mu[t] + next.f[t];
        num = std::max(num, std::abs(b - a));
        den = std::max(den, std::abs(a));
    }
    return num / (1.0 + den);
}

// Squared extrapolation on the coefficient fixed-point map, falling back to
// the plain double step whenever the extrapolated point does worse.
Iterate squarem_step(const Solver& solver, const Iterate& x0) {
    Iterate x1 = solver.step(x0);
    Iterate x2 = solver.step(x1);
    const auto& t0 = x0.model.coeffs;
    const auto& t1 = x1.model.coeffs;
    const auto& t2 = x2.model.coeffs;
    double rr = 0.0, vv = 0.0;
    std::vector<double> r(t0.size()), v(t0.size());
    for (std::size_t j = 0; j < t0.size(); ++j) {
        r[j] = t1[j] - t0[j];
        v[j] = t2[j] - t1[j] - r[j];
        rr += r[j] * r[j];
        vv += v[j] * v[j];
    }
    if (!(vv > 0.0)) return x2;
    const double alpha = std::min(-std::sqrt(rr / vv), -1.0);
    if (alpha == -1.0) return x2;
    std::vector<double> t(t0.size());
    for (std::size_t j = 0; j < t0.size(); ++j) t[j] = t0[j] - 2.0 * alpha * r[j] + alpha * alpha * v[j];
    Iterate x3 = solver.step(solver.with_coefficients(x2, t));
    return x3.objective <= x2.objective ? x3 : x2;
}

}  // namespace

FixedKResult infer_fixed_k(const SegmentationProblem& problem, const MonthlyStd& sigma, std::size_t K,
                           const InferenceOptions& opts) {
    opts.validate();
    const std::size_t n = problem.size();
    if (K < 1 || K * opts.min_segment_length > n) {
        throw DataError("infer_fixed_k: K = " + std::to_string(K) + " is not feasible for n = " + std::to_string(n));
    }
    const Solver solver(problem, sigma, K, opts);
    const bool single_pass = opts.effective_order() == 0 && !opts.update_variance;
    const bool accelerate = opts.accelerate && !opts.update_variance && !single_pass;

    Iterate cur = solver.initial();
    std::vector<double> trace{cur.objective};
    int iterations = 0;
    bool converged = false;
    std::optional<Iterate> best;
    while (iterations < opts.max_iters) {
        Iterate next = accelerate ? squarem_step(solver, cur) : solver.step(cur);
        ++iterations;
        trace.push_back(next.objective);
        const double change = relative_change(cur, next);
        if (!best || next.objective <= best->objective) best = next;
        cur = std::move(next);
        if (single_pass || change < opts.stop_tol) {
            converged = true;
            break;
        }
    }
    Iterate chosen = converged ? std::move(cur) : std::move(*best);

    FixedKResult out;
    out.K = K;
    const auto y = problem.y();
    long double ssr = 0.0L;
    for (std::size_t t = 0; t < n; ++t) {
        const double e = y[t] - chosen.mu[t] - chosen.f[t];
        ssr += static_cast<long double>(chosen.w[t]) * e * e;
    }
    out.ssr = static_cast<double>(ssr);
    out.segmentation = std::move(chosen.seg);
    out.model = std::move(chosen.model);
    out.sigma = std::move(chosen.sigma);
    out.iterations = iterations;
    out.converged = converged;
    out.objective = std::move(trace);
    return out;
}

std::vector<double> InferenceResult::ssr_curve() const {
    std::vector<double> s;
    s.reserve(per_k.size());
    for (const auto& r : per_k) s.push_back(r.ssr);
    return s;
}

std::vector<Segmentation> InferenceResult::segmentations() const {
    std::vector<Segmentation> s;
    s.reserve(per_k.size());
    for (const auto& r : per_k) s.push_back(r.segmentation);
    return s;
}

InferenceResult infer_all_k(const SegmentationProblem& problem, const MonthlyStd& sigma,
                            const InferenceOptions& opts) {
    opts.validate();
    const std::size_t n = problem.size();
    if (opts.k_max * opts.min_segment_length > n) {
        throw DataError("infer_all_k: k_max = " + std::to_string(opts.k_max) + " is too large for n = " +
                        std::to_string(n));
    }
    InferenceResult out;
    out.sigma = sigma;
    out.per_k.resize(opts.k_max);

    if (opts.effective_order() == 0 && !opts.update_variance) {
        // f = 0: one DP delivers every K.
        const auto w = sigma.weights(problem.months);
        const auto y = problem.y();
        auto dp = dp_segment(y, w, opts.k_max, opts.min_segment_length);
        const double j0 = Solver(problem, sigma, 1, opts).initial().objective;
        for (std::size_t K = 1; K <= opts.k_max; ++K) {
            auto& r = out.per_k[K - 1];
            r.K = K;
            r.segmentation = dp.at(K);
            r.model = FourierModel(0, problem.period);
            r.sigma = sigma;
            r.ssr = dp.ssr[K - 1];
            r.iterations = 1;
            r.converged = true;
            r.objective = {j0, r.ssr};
        }
        return out;
    }

    // Larger K cost more, so they are handed out first.
    parallel_for(opts.k_max, [&](std::size_t i) {
        const std::size_t K = opts.k_max - i;
        out.per_k[K - 1] = infer_fixed_k(problem, sigma, K, opts);
    }, opts.threads);
    return out;
}

InferenceResult infer_all_k(const SegmentationProblem& problem, const InferenceOptions& opts) {
    return infer_all_k(problem, estimate_sigma(problem, opts.variant), opts);
}

InferenceResult infer_all_k(const TimeSeries& series, const InferenceOptions& opts) {
    return infer_all_k(SegmentationProblem::from_series(series), opts);
}

}  // namespace segiwv
