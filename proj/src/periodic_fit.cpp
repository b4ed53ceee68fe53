#include "segiwv/periodic_fit.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace segiwv {

HarmonicDesign::HarmonicDesign(std::span<const double> phase, double period, int order)
    : order_(order), period_(period), x_(static_cast<Eigen::Index>(phase.size()), 2 * std::max(order, 0)) {
    if (order < 0) throw std::invalid_argument("HarmonicDesign: negative order");
    if (!(period > 0.0)) throw std::invalid_argument("HarmonicDesign: period must be positive");
    for (int i = 1; i <= order; ++i) {
        const double w = 2.0 * std::numbers::pi * i / period;
        for (std::size_t t = 0; t < phase.size(); ++t) {
            const auto r = static_cast<Eigen::Index>(t);
            x_(r, 2 * (i - 1)) = std::cos(w * phase[t]);
            x_(r, 2 * (i - 1) + 1) = std::sin(w * phase[t]);
        }
    }
}

std::vector<double> evaluate_fourier(const FourierModel& model, const HarmonicDesign& design) {
    if (model.order != design.order()) throw std::invalid_argument("evaluate_fourier: order differs from design");
    std::vector<double> f(design.rows(), 0.0);
    const auto& x = design.matrix();
    for (std::size_t j = 0; j < design.cols(); ++j) {
        if (!model.active[j] || model.coeffs[j] == 0.0) continue;
        const double c = model.coeffs[j];
        for (std::size_t t = 0; t < f.size(); ++t) {
            f[t] += c * x(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j));
        }
    }
    return f;
}

double gaussian_p_value(double t) { return std::erfc(std::abs(t) / std::numbers::sqrt2); }

namespace {

struct LsSolution {
    Eigen::VectorXd beta;
    Eigen::MatrixXd cov;
};

// Least squares of b on A; cov = (A'A)^{-1}.
LsSolution solve_ls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
    const Eigen::Index p = a.cols();
    if (p == 0) return {Eigen::VectorXd(0), Eigen::MatrixXd(0, 0)};
    if (a.rows() < p) {
        throw RankDeficientError("harmonic fit: " + std::to_string(a.rows()) + " observations for " +
                                 std::to_string(p) + " coefficients");
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    qr.setThreshold(1e-10);
    if (qr.rank() < p) {
        throw RankDeficientError("harmonic fit: design matrix is rank deficient (rank " +
                                 std::to_string(qr.rank()) + " of " + std::to_string(p) + ")");
    }
    LsSolution out;
    out.beta = qr.solve(b);
    const Eigen::MatrixXd r = qr.matrixR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
    const Eigen::MatrixXd rinv =
        r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
    const Eigen::MatrixXd cov_perm = rinv * rinv.transpose();
    const auto& perm = qr.colsPermutation();
    out.cov = perm * cov_perm * perm.transpose();
    return out;
}

void check_lengths(std::size_t a, std::size_t b, std::size_t rows) {
    if (a != rows || b != rows) throw std::invalid_argument("harmonic fit: length mismatch with design");
}

}  // namespace

HarmonicFit fit_weighted(std::span<const double> residual, std::span<const double> weights,
                         const HarmonicDesign& design, const std::vector<bool>& active) {
    const std::size_t n = design.rows();
    const std::size_t p = design.cols();
    check_lengths(residual.size(), weights.size(), n);
    if (active.size() != p) throw std::invalid_argument("fit_weighted: mask size differs from column count");

    std::vector<Eigen::Index> cols;
    for (std::size_t j = 0; j < p; ++j) {
        if (active[j]) cols.push_back(static_cast<Eigen::Index>(j));
    }
    Eigen::MatrixXd a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cols.size()));
    Eigen::VectorXd b(static_cast<Eigen::Index>(n));
    for (std::size_t t = 0; t < n; ++t) {
        if (!(weights[t] > 0.0)) throw std::invalid_argument("fit_weighted: weights must be positive");
        const double s = std::sqrt(weights[t]);
        const auto r = static_cast<Eigen::Index>(t);
        for (std::size_t c = 0; c < cols.size(); ++c) {
            a(r, static_cast<Eigen::Index>(c)) = s * design.matrix()(r, cols[c]);
        }
        b(r) = s * residual[t];
    }
    const LsSolution ls = solve_ls(a, b);

    HarmonicFit fit{FourierModel(design.order(), design.period()), {}};
    fit.model.active = active;
    auto& d = fit.diagnostics;
    d.estimate.assign(p, 0.0);
    d.std_error.assign(p, 0.0);
    d.t_stat.assign(p, 0.0);
    d.p_value.assign(p, 1.0);
    for (std::size_t c = 0; c < cols.size(); ++c) {
        const auto j = static_cast<std::size_t>(cols[c]);
        const auto ci = static_cast<Eigen::Index>(c);
        fit.model.coeffs[j] = ls.beta(ci);
        d.estimate[j] = ls.beta(ci);
        d.std_error[j] = std::sqrt(std::max(ls.cov(ci, ci), 0.0));
        d.t_stat[j] = d.std_error[j] > 0.0 ? d.estimate[j] / d.std_error[j] : 0.0;
        d.p_value[j] = gaussian_p_value(d.t_stat[j]);
    }
    const Eigen::VectorXd e = cols.empty() ? b : Eigen::VectorXd(b - a * ls.beta);
    d.weighted_rss = e.squaredNorm();
    return fit;
}

HarmonicFit fit_weighted(std::span<const double> residual, std::span<const double> weights,
                         const HarmonicDesign& design) {
    return fit_weighted(residual, weights, design, std::vector<bool>(design.cols(), true));
}

JointFit fit_weighted_joint(std::span<const double> signal, std::span<const double> weights,
                            const HarmonicDesign& design, const std::vector<bool>& active, const Segmentation& seg) {
    const std::size_t n = design.rows();
    const std::size_t p = design.cols();
    check_lengths(signal.size(), weights.size(), n);
    if (seg.n() != n) throw std::invalid_argument("fit_weighted_joint: segmentation length differs from design");
    if (active.size() != p) throw std::invalid_argument("fit_weighted_joint: mask size differs from column count");

    std::vector<Eigen::Index> cols;
    for (std::size_t j = 0; j < p; ++j) {
        if (active[j]) cols.push_back(static_cast<Eigen::Index>(j));
    }
    const auto K = static_cast<Eigen::Index>(seg.K());
    const auto q = static_cast<Eigen::Index>(cols.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), K + q);
    Eigen::VectorXd b(static_cast<Eigen::Index>(n));
    const auto bounds = seg.boundaries();
    for (Eigen::Index k = 0; k < K; ++k) {
        for (std::size_t t = bounds[static_cast<std::size_t>(k)]; t < bounds[static_cast<std::size_t>(k) + 1]; ++t) {
            if (!(weights[t] > 0.0)) throw std::invalid_argument("fit_weighted_joint: weights must be positive");
            const double s = std::sqrt(weights[t]);
            const auto r = static_cast<Eigen::Index>(t);
            a(r, k) = s;
            for (Eigen::Index c = 0; c < q; ++c) a(r, K + c) = s * design.matrix()(r, cols[static_cast<std::size_t>(c)]);
            b(r) = s * signal[t];
        }
    }
    const LsSolution ls = solve_ls(a, b);

    JointFit out{{FourierModel(design.order(), design.period()), {}}, std::vector<double>(seg.K())};
    for (Eigen::Index k = 0; k < K; ++k) out.means[static_cast<std::size_t>(k)] = ls.beta(k);
    auto& fit = out.harmonic;
    fit.model.active = active;
    auto& d = fit.diagnostics;
    d.estimate.assign(p, 0.0);
    d.std_error.assign(p, 0.0);
    d.t_stat.assign(p, 0.0);
    d.p_value.assign(p, 1.0);
    for (Eigen::Index c = 0; c < q; ++c) {
        const auto j = static_cast<std::size_t>(cols[static_cast<std::size_t>(c)]);
        fit.model.coeffs[j] = ls.beta(K + c);
        d.estimate[j] = ls.beta(K + c);
        d.std_error[j] = std::sqrt(std::max(ls.cov(K + c, K + c), 0.0));
        d.t_stat[j] = d.std_error[j] > 0.0 ? d.estimate[j] / d.std_error[j] : 0.0;
        d.p_value[j] = gaussian_p_value(d.t_stat[j]);
    }
    d.weighted_rss = (b - a * ls.beta).squaredNorm();
    return out;
}

UnweightedFit fit_unweighted(std::span<const double> signal, const HarmonicDesign& design) {
    const std::size_t n = design.rows();
    const std::size_t p = design.cols();
    check_lengths(signal.size(), signal.size(), n);
    Eigen::MatrixXd a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p + 1));
    a.leftCols(static_cast<Eigen::Index>(p)) = design.matrix();
    a.col(static_cast<Eigen::Index>(p)).setOnes();
    const Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(signal.data(), static_cast<Eigen::Index>(n));
    const LsSolution ls = solve_ls(a, b);

    UnweightedFit out{FourierModel(design.order(), design.period()), ls.beta(static_cast<Eigen::Index>(p))};
    for (std::size_t j = 0; j < p; ++j) out.model.coeffs[j] = ls.beta(static_cast<Eigen::Index>(j));
    return out;
}

HarmonicFit select_significant(const HarmonicFit& fit, double alpha, const HarmonicDesign& design,
                               std::span<const double> residual, std::span<const double> weights,
                               bool refit) {
    const std::size_t p = design.cols();
    if (fit.diagnostics.p_value.size() != p) {
        throw std::invalid_argument("select_significant: diagnostics do not match the design");
    }
    std::vector<bool> keep(p, false);
    bool dropped = false;
    for (std::size_t j = 0; j < p; ++j) {
        keep[j] = fit.model.active[j] && fit.diagnostics.p_value[j] < alpha;
        dropped = dropped || (fit.model.active[j] && !keep[j]);
    }
    if (!dropped) return fit;
    if (refit) return fit_weighted(residual, weights, design, keep);

    HarmonicFit out = fit;
    for (std::size_t j = 0; j < p; ++j) {
        if (keep[j]) continue;
        out.model.active[j] = false;
        out.model.coeffs[j] = 0.0;
        out.diagnostics.estimate[j] = 0.0;
        out.diagnostics.std_error[j] = 0.0;
        out.diagnostics.t_stat[j] = 0.0;
        out.diagnostics.p_value[j] = 1.0;
    }
    long double rss = 0.0L;
    const auto f = evaluate_fourier(out.model, design);
    for (std::size_t t = 0; t < residual.size(); ++t) {
        const double e = residual[t] - f[t];
        rss += static_cast<long double>(weights[t]) * e * e;
    }
    out.diagnostics.weighted_rss = static_cast<double>(rss);
    return out;
}

}  // namespace segiwv
