#include "segiwv/segmentation.hpp"

#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>

using namespace segiwv;
using segiwv::testing::brute_force_segment;
using segiwv::testing::direct_cost;

namespace {

std::vector<double> uniform_weights(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.2, 5.0);
    std::vector<double> w(n);
    for (auto& v : w) v = u(rng);
    return w;
}

}  // namespace

TEST_CASE("weighted_mean") {
    const std::vector<double> z{1, 3}, w{1, 3};
    CHECK(weighted_mean(z, w) == doctest::Approx(2.5));
    const std::vector<double> z3{2, 4, 9}, ones{1, 1, 1};
    CHECK(weighted_mean(z3, ones) == doctest::Approx(5.0));
    const std::vector<double> one{7.25}, w1{0.3};
    CHECK(weighted_mean(one, w1) == 7.25);
    CHECK_THROWS_AS(weighted_mean(std::span<const double>{}, std::span<const double>{}), std::invalid_argument);
}

TEST_CASE("cost matrix matches direct summation") {
    std::mt19937_64 rng(5);
    const auto z = testing::normal_sample(60, 6, 1e3, 0.01);
    const auto w = uniform_weights(60, rng);
    const CostMatrix c(z, w);
    for (std::size_t i = 0; i < 60; ++i) {
        CHECK(c(i, i + 1) == 0.0);
        for (std::size_t j = i + 1; j <= 60; ++j) {
            const double direct = static_cast<double>(direct_cost(std::span(z).subspan(i, j - i),
                                                                  std::span(w).subspan(i, j - i), {}));
            CHECK(c(i, j) >= 0.0);
            CHECK(std::abs(c(i, j) - direct) <= 1e-9 * std::max(direct, 1e-12) + 1e-12);
        }
    }
}

TEST_CASE("noiseless two-segment signal") {
    const std::vector<double> z{0, 0, 0, 5, 5, 5}, w(6, 1.0);
    const auto r = dp_segment(z, w, 2);
    const auto& s = r.at(2);
    CHECK(s.changepoints().size() == 1);
    CHECK(s.changepoints()[0] == 3);
    CHECK(s.means()[0] == 0.0);
    CHECK(s.means()[1] == 5.0);
    CHECK(r.ssr[1] == 0.0);
}

TEST_CASE("K = 1 is the weighted mean") {
    std::mt19937_64 rng(1);
    const auto z = testing::normal_sample(30, 2);
    const auto w = uniform_weights(30, rng);
    const auto r = dp_segment(z, w, 1);
    CHECK(r.at(1).changepoints().empty());
    CHECK(r.at(1).means()[0] == doctest::Approx(weighted_mean(z, w)).epsilon(1e-14));
    CHECK(r.ssr[0] == doctest::Approx(CostMatrix(z, w)(0, 30)).epsilon(1e-12));
}

TEST_CASE("dp agrees with exhaustive enumeration") {
    std::mt19937_64 rng(20);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 6 + rng() % 20;
        const std::size_t k_max = 1 + rng() % 5;
        auto z = testing::normal_sample(n, rng());
        if (trial % 4 == 0) {
            for (std::size_t t = n / 2; t < n; ++t) z[t] += 3.0;
        }
        const auto w = uniform_weights(n, rng);
        const auto r = dp_segment(z, w, k_max);
        for (std::size_t K = 1; K <= k_max; ++K) {
            const auto oracle = brute_force_segment(z, w, K);
            const double expected = static_cast<double>(oracle.cost);
            CHECK(r.ssr[K - 1] == doctest::Approx(expected).epsilon(1e-9));
            const auto cps = r.at(K).changepoints();
            CHECK(std::vector<std::size_t>(cps.begin(), cps.end()) == oracle.changepoints);
        }
    }
}

TEST_CASE("ties go to the smallest last change-point") {
    const std::vector<double> z(8, 0.0), w(8, 1.0);
    const auto r = dp_segment(z, w, 4);
    for (std::size_t K = 1; K <= 4; ++K) {
        const auto oracle = brute_force_segment(z, w, K);
        const auto cps = r.at(K).changepoints();
        CHECK(std::vector<std::size_t>(cps.begin(), cps.end()) == oracle.changepoints);
        CHECK(r.ssr[K - 1] == 0.0);
    }
    const auto cps = r.at(4).changepoints();
    CHECK(std::vector<std::size_t>(cps.begin(), cps.end()) == std::vector<std::size_t>{1, 2, 3});
}

TEST_CASE("ssr_of") {
    const std::vector<double> z{0, 1}, w{1, 1};
    CHECK(ssr_of(Segmentation(2, {}, {0.0}), z, w) == doctest::Approx(0.5));

    const std::vector<double> flat(10, 4.0), w10(10, 2.0);
    CHECK(ssr_of(Segmentation(10, {3, 7}, {0, 0, 0}), flat, w10) == 0.0);

    std::mt19937_64 rng(3);
    const auto y = testing::normal_sample(80, 4);
    const auto wy = uniform_weights(80, rng);
    const auto r = dp_segment(y, wy, 8);
    for (std::size_t K = 1; K <= 8; ++K) {
        CHECK(std::abs(ssr_of(r.at(K), y, wy) - r.ssr[K - 1]) <= 1e-9 * r.ssr[K - 1]);
    }
}

TEST_CASE("ssr is non-increasing and positive below the true number of segments") {
    auto z = testing::normal_sample(300, 11, 0.0, 0.3);
    for (std::size_t t = 100; t < 200; ++t) z[t] += 2.0;
    for (std::size_t t = 200; t < 300; ++t) z[t] -= 1.0;
    const std::vector<double> w(300, 1.0);
    const auto r = dp_segment(z, w, 12);
    for (std::size_t K = 1; K < 12; ++K) CHECK(r.ssr[K] <= r.ssr[K - 1]);
    for (std::size_t K = 1; K < 3; ++K) CHECK(r.ssr[K - 1] > 0.0);
    const auto cps = r.at(3).changepoints();
    CHECK(std::vector<std::size_t>(cps.begin(), cps.end()) == std::vector<std::size_t>{100, 200});
}

TEST_CASE("scaling the weights scales the ssr and keeps the change-points") {
    std::mt19937_64 rng(44);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 50 + rng() % 50;
        auto z = testing::normal_sample(n, rng());
        for (std::size_t t = n / 3; t < n; ++t) z[t] += 1.5;
        const auto w = uniform_weights(n, rng);
        std::vector<double> w2(w);
        for (auto& v : w2) v *= 4.0;  // exact in binary
        const auto a = dp_segment(z, w, 6);
        const auto b = dp_segment(z, w2, 6);
        for (std::size_t K = 1; K <= 6; ++K) {
            CHECK(b.ssr[K - 1] == doctest::Approx(4.0 * a.ssr[K - 1]).epsilon(1e-10));
            CHECK(std::ranges::equal(a.at(K).changepoints(), b.at(K).changepoints()));
        }
    }
}

TEST_CASE("permuting values inside a segment leaves the ssr unchanged") {
    std::mt19937_64 rng(9);
    auto z = testing::normal_sample(40, 10);
    const std::vector<double> w(40, 1.0);
    const Segmentation seg(40, {12, 30}, {0, 0, 0});
    const double before = ssr_of(seg, z, w);
    std::shuffle(z.begin(), z.begin() + 12, rng);
    std::shuffle(z.begin() + 12, z.begin() + 30, rng);
    std::shuffle(z.begin() + 30, z.end(), rng);
    CHECK(ssr_of(seg, z, w) == doctest::Approx(before).epsilon(1e-12));
}

TEST_CASE("dp input validation") {
    const std::vector<double> z{1, 2, 3};
    CHECK_THROWS_AS(dp_segment(z, std::vector<double>{1, 1, 1}, 4), std::invalid_argument);
    CHECK_THROWS_AS(dp_segment(z, std::vector<double>{1, 0, 1}, 2), std::invalid_argument);
    CHECK_THROWS_AS(dp_segment(z, std::vector<double>{1, -1, 1}, 2), std::invalid_argument);
    CHECK_THROWS_AS(dp_segment(z, std::vector<double>{1, 1, 1}, 0), std::invalid_argument);
}

TEST_CASE("minimum segment length") {
    const std::vector<double> z{0, 9, 0, 0, 0, 0, 5, 5, 5, 5}, w(10, 1.0);
    const auto r = dp_segment(z, w, 3, 3);
    for (std::size_t K = 1; K <= 3; ++K) {
        for (const auto len : r.at(K).segment_lengths()) CHECK(len >= 3);
    }
    CHECK(std::ranges::equal(r.at(2).changepoints(), std::vector<std::size_t>{6}));
}

TEST_CASE("refit_means") {
    const std::vector<double> z{1, 3, 10, 20}, w{1, 1, 1, 3};
    const auto s = refit_means(Segmentation(4, {2}, {0, 0}), z, w);
    CHECK(s.means()[0] == doctest::Approx(2.0));
    CHECK(s.means()[1] == doctest::Approx(17.5));
}
