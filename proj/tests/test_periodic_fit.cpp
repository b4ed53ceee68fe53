#include "segiwv/periodic_fit.hpp"
#include "segiwv/simulation.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace segiwv;

namespace {

std::vector<double> cosine(std::size_t n, double amp, double period, double offset = 0.0) {
    std::vector<double> y(n);
    for (std::size_t t = 0; t < n; ++t) y[t] = offset + amp * std::cos(2.0 * std::numbers::pi * (t + 1.0) / period);
    return y;
}

// Weighted least squares via normal equations, independent of the library path.
Eigen::VectorXd normal_equations(const Eigen::MatrixXd& x, std::span<const double> y, std::span<const double> w) {
    const Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(y.size()));
    const Eigen::Map<const Eigen::VectorXd> wv(w.data(), static_cast<Eigen::Index>(w.size()));
    const Eigen::MatrixXd xtw = x.transpose() * wv.asDiagonal();
    return (xtw * x).ldlt().solve(xtw * yv);
}

}  // namespace

TEST_CASE("harmonic design") {
    const auto phase = index_phase(200);
    const HarmonicDesign d(phase, 100.0, 4);
    CHECK(d.cols() == 8);
    CHECK(d.rows() == 200);
    CHECK(d.matrix().cwiseAbs().maxCoeff() <= 1.0);
    CHECK(d.matrix()(0, 0) == doctest::Approx(std::cos(2.0 * std::numbers::pi / 100.0)));
    CHECK(d.matrix()(0, 7) == doctest::Approx(std::sin(8.0 * std::numbers::pi / 100.0)));

    FourierModel m(4, 100.0);
    for (std::size_t j = 0; j < 8; ++j) m.coeffs[j] = 0.1 * (j + 1.0);
    const auto via_design = evaluate_fourier(m, d);
    const auto direct = evaluate_fourier(m, phase);
    for (std::size_t t = 0; t < 200; ++t) CHECK(via_design[t] == doctest::Approx(direct[t]).epsilon(1e-12));
}

TEST_CASE("exact recovery of a pure cosine") {
    const auto phase = index_phase(400);
    const HarmonicDesign d(phase, 100.0, 1);
    const std::vector<double> w(400, 1.0);
    const auto fit = fit_weighted(cosine(400, 0.7, 100.0), w, d);
    CHECK(std::abs(fit.model.a(1) - 0.7) < 1e-9);
    CHECK(std::abs(fit.model.b(1)) < 1e-9);
    CHECK(fit.diagnostics.weighted_rss < 1e-18);
}

TEST_CASE("zero residual gives zero coefficients") {
    const HarmonicDesign d(index_phase(150), 100.0, 4);
    const auto fit = fit_weighted(std::vector<double>(150, 0.0), std::vector<double>(150, 2.0), d);
    for (const double c : fit.model.coeffs) CHECK(c == 0.0);
    for (const double se : fit.diagnostics.std_error) CHECK(se > 0.0);
}

TEST_CASE("heavier weights pull the fit toward their subsample") {
    const std::size_t n = 400;
    const auto phase = index_phase(n);
    const HarmonicDesign d(phase, 100.0, 2);
    auto y = cosine(n, 0.7, 100.0);
    const auto e = testing::normal_sample(n, 17, 0.0, 0.5);
    for (std::size_t t = 0; t < n; ++t) y[t] += e[t];
    std::vector<double> w(n);
    for (std::size_t t = 0; t < n; ++t) w[t] = (t % 2 == 0) ? 100.0 : 1.0;

    const auto fit = fit_weighted(y, w, d);
    const auto reference = normal_equations(d.matrix(), y, w);
    for (std::size_t j = 0; j < 4; ++j) CHECK(fit.model.coeffs[j] == doctest::Approx(reference(j)).epsilon(1e-9));

    std::vector<double> only_heavy(n), ones(n, 1.0);
    for (std::size_t t = 0; t < n; ++t) only_heavy[t] = (t % 2 == 0) ? 1.0 : 1e-12;
    const auto heavy = normal_equations(d.matrix(), y, only_heavy);
    const auto plain = normal_equations(d.matrix(), y, ones);
    double to_heavy = 0.0, to_plain = 0.0;
    for (std::size_t j = 0; j < 4; ++j) {
        to_heavy += std::pow(fit.model.coeffs[j] - heavy(j), 2);
        to_plain += std::pow(fit.model.coeffs[j] - plain(j), 2);
    }
    CHECK(to_heavy < to_plain);
}

TEST_CASE("weighted residuals are orthogonal to the active columns") {
    const std::size_t n = 365;
    const HarmonicDesign d(index_phase(n), 365.25, 4);
    const auto y = testing::normal_sample(n, 3);
    std::vector<double> w(n);
    for (std::size_t t = 0; t < n; ++t) w[t] = 1.0 + (t % 7);
    std::vector<bool> active(8, true);
    active[3] = false;
    const auto fit = fit_weighted(y, w, d, active);
    CHECK(fit.model.coeffs[3] == 0.0);
    CHECK(fit.diagnostics.p_value[3] == 1.0);
    const auto f = evaluate_fourier(fit.model, d);
    for (std::size_t j = 0; j < 8; ++j) {
        if (!active[j]) continue;
        double dot = 0.0;
        for (std::size_t t = 0; t < n; ++t) dot += w[t] * (y[t] - f[t]) * d.matrix()(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j));
        CHECK(std::abs(dot) < 1e-8);
    }
}

TEST_CASE("refitting the fitted values is idempotent") {
    const std::size_t n = 300;
    const HarmonicDesign d(index_phase(n), 100.0, 4);
    const auto y = testing::normal_sample(n, 8);
    std::vector<double> w(n);
    for (std::size_t t = 0; t < n; ++t) w[t] = (t / 50) % 2 ? 4.0 : 0.25;
    const auto first = fit_weighted(y, w, d);
    const auto second = fit_weighted(evaluate_fourier(first.model, d), w, d);
    for (std::size_t j = 0; j < 8; ++j) CHECK(std::abs(first.model.coeffs[j] - second.model.coeffs[j]) < 1e-10);
}

TEST_CASE("coefficients do not depend on the weight scale") {
    const std::size_t n = 250;
    const HarmonicDesign d(index_phase(n), 100.0, 3);
    const auto y = testing::normal_sample(n, 12);
    std::vector<double> w(n), w2(n);
    for (std::size_t t = 0; t < n; ++t) {
        w[t] = 0.5 + (t % 3);
        w2[t] = 37.0 * w[t];
    }
    const auto a = fit_weighted(y, w, d);
    const auto b = fit_weighted(y, w2, d);
    for (std::size_t j = 0; j < 6; ++j) CHECK(std::abs(a.model.coeffs[j] - b.model.coeffs[j]) < 1e-10);
}

TEST_CASE("rank deficiency is reported") {
    const HarmonicDesign short_design(index_phase(5), 100.0, 4);
    CHECK_THROWS_AS(fit_weighted(std::vector<double>(5, 1.0), std::vector<double>(5, 1.0), short_design),
                    RankDeficientError);
    CHECK_THROWS_AS(fit_unweighted(std::vector<double>(8, 1.0), HarmonicDesign(index_phase(8), 100.0, 4)),
                    RankDeficientError);
    // Integer phases with period 2: every sine column vanishes.
    const HarmonicDesign aliased(index_phase(50), 2.0, 1);
    CHECK_THROWS_AS(fit_weighted(std::vector<double>(50, 1.0), std::vector<double>(50, 1.0), aliased),
                    RankDeficientError);
}

TEST_CASE("unweighted fit absorbs the offset in the intercept") {
    const HarmonicDesign d(index_phase(200), 100.0, 4);
    const auto fit = fit_unweighted(cosine(200, 1.0, 100.0, 2.0), d);
    CHECK(std::abs(fit.model.a(1) - 1.0) < 1e-9);
    CHECK(std::abs(fit.intercept - 2.0) < 1e-9);
}

TEST_CASE("unweighted fit on the simulated design stays near the true amplitude") {
    SimConfig c;
    int inside = 0;
    for (std::uint64_t r = 0; r < 100; ++r) {
        const auto sim = generate(c, replicate_seed(5, r));
        const HarmonicDesign d(sim.problem.phase, sim.problem.period, 4);
        const auto fit = fit_unweighted(sim.problem.y(), d);
        if (std::abs(fit.model.a(1) - 0.7) < 0.15) ++inside;
    }
    CHECK(inside >= 95);
}

TEST_CASE("significance selection keeps only the cosine") {
    const std::size_t n = 400;
    const auto phase = index_phase(n);
    const HarmonicDesign d(phase, 100.0, 4);
    const std::vector<double> w(n, 1.0 / 0.01);
    int exact = 0;
    for (std::uint64_t s = 0; s < 100; ++s) {
        auto y = cosine(n, 0.7, 100.0);
        const auto e = testing::normal_sample(n, 500 + s, 0.0, 0.1);
        for (std::size_t t = 0; t < n; ++t) y[t] += e[t];
        const auto sel = select_significant(fit_weighted(y, w, d), 0.001, d, y, w);
        if (sel.model.active_count() == 1 && sel.model.active[0]) ++exact;
    }
    CHECK(exact >= 95);
}

TEST_CASE("significance selection removes pure noise") {
    const std::size_t n = 400;
    const HarmonicDesign d(index_phase(n), 100.0, 4);
    const std::vector<double> w(n, 1.0);
    int empty = 0;
    for (std::uint64_t s = 0; s < 200; ++s) {
        const auto y = testing::normal_sample(n, 900 + s);
        const auto sel = select_significant(fit_weighted(y, w, d), 0.001, d, y, w);
        if (sel.model.active_count() == 0) {
            ++empty;
            for (const double v : evaluate_fourier(sel.model, d)) CHECK(v == 0.0);
        }
    }
    CHECK(empty >= 198);
}

TEST_CASE("alpha = 1 keeps the model") {
    const std::size_t n = 200;
    const HarmonicDesign d(index_phase(n), 100.0, 4);
    const auto y = testing::normal_sample(n, 2);
    const std::vector<double> w(n, 1.0);
    const auto fit = fit_weighted(y, w, d);
    for (const bool refit : {true, false}) {
        const auto sel = select_significant(fit, 1.0, d, y, w, refit);
        CHECK(sel.model.active_count() == 8);
        for (std::size_t j = 0; j < 8; ++j) CHECK(sel.model.coeffs[j] == doctest::Approx(fit.model.coeffs[j]));
    }
}

TEST_CASE("selection without refit zeroes the dropped terms only") {
    const std::size_t n = 400;
    const HarmonicDesign d(index_phase(n), 100.0, 2);
    auto y = cosine(n, 0.7, 100.0);
    const auto e = testing::normal_sample(n, 31, 0.0, 0.2);
    for (std::size_t t = 0; t < n; ++t) y[t] += e[t];
    const std::vector<double> w(n, 25.0);
    const auto fit = fit_weighted(y, w, d);
    const auto sel = select_significant(fit, 0.001, d, y, w, false);
    REQUIRE(sel.model.active[0]);
    CHECK(sel.model.coeffs[0] == fit.model.coeffs[0]);
    for (std::size_t j = 1; j < 4; ++j) {
        if (!sel.model.active[j]) CHECK(sel.model.coeffs[j] == 0.0);
    }
}

TEST_CASE("gaussian p-values") {
    CHECK(gaussian_p_value(0.0) == doctest::Approx(1.0));
    CHECK(gaussian_p_value(1.959963984540054) == doctest::Approx(0.05).epsilon(1e-9));
    CHECK(gaussian_p_value(-1.959963984540054) == doctest::Approx(0.05).epsilon(1e-9));
}

TEST_CASE("joint fit equals the stacked least-squares problem") {
    const std::size_t n = 300;
    const HarmonicDesign d(index_phase(n), 100.0, 2);
    auto y = cosine(n, 0.7, 100.0);
    const auto e = testing::normal_sample(n, 70, 0.0, 0.3);
    for (std::size_t t = 0; t < n; ++t) y[t] += e[t] + (t >= 120 ? 1.0 : 0.0);
    std::vector<double> w(n);
    for (std::size_t t = 0; t < n; ++t) w[t] = (t / 50) % 2 ? 1.0 : 9.0;
    const Segmentation seg(n, {120}, {0, 0});
    const auto joint = fit_weighted_joint(y, w, d, std::vector<bool>(4, true), seg);

    Eigen::MatrixXd x(n, 6);
    for (std::size_t t = 0; t < n; ++t) {
        const auto r = static_cast<Eigen::Index>(t);
        x(r, 0) = t < 120 ? 1.0 : 0.0;
        x(r, 1) = t < 120 ? 0.0 : 1.0;
        x.row(r).tail(4) = d.matrix().row(r);
    }
    const auto ref = normal_equations(x, y, w);
    CHECK(joint.means[0] == doctest::Approx(ref(0)).epsilon(1e-9));
    CHECK(joint.means[1] == doctest::Approx(ref(1)).epsilon(1e-9));
    for (std::size_t j = 0; j < 4; ++j) {
        CHECK(joint.harmonic.model.coeffs[j] == doctest::Approx(ref(static_cast<Eigen::Index>(j + 2))).epsilon(1e-9));
    }
}
