#include "segiwv/model_selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace segiwv {

std::string_view criterion_name(Criterion c) {
    switch (c) {
        case Criterion::MBIC: return "mbic";
        case Criterion::Lavielle: return "lav";
        case Criterion::BM1: return "bm1";
        case Criterion::BM2: return "bm2";
    }
    return "?";
}

Criterion parse_criterion(std::string_view text) {
    for (const auto c : kAllCriteria) {
        if (criterion_name(c) == text) return c;
    }
    throw std::invalid_argument("unknown criterion '" + std::string(text) + "' (expected bm1, bm2, lav or mbic)");
}

std::vector<Criterion> parse_criteria(std::string_view text) {
    std::vector<Criterion> out;
    while (!text.empty()) {
        const auto comma = text.find(',');
        const auto item = text.substr(0, comma);
        if (!item.empty()) {
            const auto c = parse_criterion(item);
            if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
        }
        if (comma == std::string_view::npos) break;
        text.remove_prefix(comma + 1);
    }
    if (out.empty()) throw std::invalid_argument("empty criteria list");
    return out;
}

std::optional<std::size_t> SelectionResult::K(Criterion c) const {
    for (const auto& ch : choices) {
        if (ch.criterion == c) return ch.K;
    }
    return std::nullopt;
}

double bm_penalty_shape(std::size_t K, std::size_t n) {
    const double k = static_cast<double>(K);
    return k * (5.0 + 2.0 * std::log(static_cast<double>(n) / k));
}

namespace {

// Values within a relative 1e-9 of the curve's range above its minimum are
// treated as equal to the minimum, so exact fits tie exactly.
std::vector<double> snapped(std::span<const double> ssr) {
    if (ssr.empty()) throw std::invalid_argument("model selection: empty SSR curve");
    for (const double v : ssr) {
        if (!std::isfinite(v)) throw std::invalid_argument("model selection: non-finite SSR value");
    }
    const auto [lo, hi] = std::minmax_element(ssr.begin(), ssr.end());
    const double floor = *lo;
    const double tol = 1e-9 * (*hi - *lo);
    std::vector<double> out(ssr.begin(), ssr.end());
    for (auto& v : out) {
        if (v - floor <= tol) v = floor;
    }
    return out;
}

// Smallest K minimising ssr_K + alpha pen_K.
std::size_t argmin_penalised(std::span<const double> ssr, std::span<const double> pen, double alpha) {
    std::size_t best = 0;
    double best_value = ssr[0] + alpha * pen[0];
    for (std::size_t k = 1; k < ssr.size(); ++k) {
        const double v = ssr[k] + alpha * pen[k];
        if (v < best_value) {
            best_value = v;
            best = k;
        }
    }
    return best + 1;
}

std::vector<double> penalties(std::size_t k_max, std::size_t n) {
    std::vector<double> pen(k_max);
    for (std::size_t K = 1; K <= k_max; ++K) pen[K - 1] = bm_penalty_shape(K, n);
    return pen;
}

}  // namespace

CriterionChoice select_mbic(std::span<const double> ssr, std::span<const Segmentation> segmentations,
                            std::size_t n) {
    if (segmentations.size() != ssr.size()) {
        throw std::invalid_argument("select_mbic: one segmentation per K is required");
    }
    const auto s = snapped(ssr);
    CriterionChoice out{Criterion::MBIC, 1, 0.0, std::vector<double>(s.size())};
    const double log_n = std::log(static_cast<double>(n));
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < s.size(); ++k) {
        const auto& seg = segmentations[k];
        if (seg.K() != k + 1 || seg.n() != n) {
            throw std::invalid_argument("select_mbic: segmentation " + std::to_string(k + 1) + " has the wrong shape");
        }
        double sum_log = 0.0;
        for (const auto len : seg.segment_lengths()) sum_log += std::log(static_cast<double>(len));
        const double K = static_cast<double>(k + 1);
        const double v = -0.5 * s[k] - 0.5 * sum_log + (0.5 - K) * log_n;
        out.values[k] = v;
        if (v > best) {
            best = v;
            out.K = k + 1;
        }
    }
    return out;
}

CriterionChoice select_lavielle(std::span<const double> ssr, double threshold) {
    const auto s = snapped(ssr);
    const std::size_t k_max = s.size();
    CriterionChoice out{Criterion::Lavielle, 1, threshold, std::vector<double>(k_max, 0.0)};
    if (k_max < 3) return out;
    const double range = s.front() - s.back();
    if (!(range > 0.0)) return out;
    std::vector<double> j(k_max);
    for (std::size_t k = 0; k < k_max; ++k) {
        j[k] = 1.0 + static_cast<double>(k_max - 1) * (s[k] - s.back()) / range;
    }
    for (std::size_t k = 1; k + 1 < k_max; ++k) {
        out.values[k] = j[k - 1] - 2.0 * j[k] + j[k + 1];
        if (out.values[k] > threshold) out.K = k + 1;
    }
    return out;
}

CriterionChoice select_bm_jump(std::span<const double> ssr, std::size_t n) {
    const auto s = snapped(ssr);
    const std::size_t k_max = s.size();
    const auto pen = penalties(k_max, n);
    CriterionChoice out{Criterion::BM1, 1, 0.0, std::vector<double>(k_max, 0.0)};

    // K(alpha -> 0): the smallest K reaching the minimal SSR.
    const std::size_t k0 = static_cast<std::size_t>(std::min_element(s.begin(), s.end()) - s.begin()) + 1;
    if (k0 == 1) {
        out.values = s;
        return out;
    }
    double first_break = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < k0; ++k) {
        first_break = std::min(first_break, (s[k - 1] - s[k0 - 1]) / (pen[k0 - 1] - pen[k - 1]));
    }
    // Beyond this alpha every K > 1 loses to K = 1.
    double last_break = 0.0;
    for (std::size_t k = 2; k <= k_max; ++k) {
        last_break = std::max(last_break, (s[0] - s[k - 1]) / (pen[k - 1] - pen[0]));
    }
    const double alpha_lo = 0.25 * first_break;
    const double alpha_hi = std::max(2.0 * last_break, 4.0 * alpha_lo);

    constexpr int kGrid = 500;
    std::size_t previous = k_max;
    std::size_t largest_jump = 0;
    double alpha_star = alpha_lo;
    const double ratio = std::log(alpha_hi / alpha_lo) / (kGrid - 1);
    for (int i = 0; i < kGrid; ++i) {
        const double alpha = alpha_lo * std::exp(ratio * i);
        const std::size_t k = argmin_penalised(s, pen, alpha);
        const std::size_t jump = previous > k ? previous - k : 0;
        if (jump > 0 && jump >= largest_jump) {
            largest_jump = jump;
            alpha_star = alpha;
        }
        previous = k;
    }
    out.constant = 2.0 * alpha_star;
    for (std::size_t k = 0; k < k_max; ++k) out.values[k] = s[k] + out.constant * pen[k];
    out.K = argmin_penalised(s, pen, out.constant);
    return out;
}

CriterionChoice select_bm_slope(std::span<const double> ssr, std::size_t n) {
    const auto s = snapped(ssr);
    const std::size_t k_max = s.size();
    const auto pen = penalties(k_max, n);
    CriterionChoice out{Criterion::BM2, 1, 0.0, std::vector<double>(k_max, 0.0)};
    if (k_max < 2 || !(s.front() > *std::min_element(s.begin(), s.end()))) {
        out.values = s;
        return out;
    }
    const std::size_t first = std::max<std::size_t>((k_max + 1) / 2, 1) - 1;
    // The LAD line passes through at least two of the points.
    double best_loss = std::numeric_limits<double>::infinity();
    double slope = 0.0;
    for (std::size_t a = first; a < k_max; ++a) {
        for (std::size_t b = a + 1; b < k_max; ++b) {
            const double m = (s[b] - s[a]) / (pen[b] - pen[a]);
            const double c = s[a] - m * pen[a];
            double loss = 0.0;
            for (std::size_t k = first; k < k_max; ++k) loss += std::abs(s[k] - c - m * pen[k]);
            if (loss < best_loss) {
                best_loss = loss;
                slope = m;
            }
        }
    }
    const double alpha = std::max(-slope, 0.0);
    out.constant = 2.0 * alpha;
    for (std::size_t k = 0; k < k_max; ++k) out.values[k] = s[k] + out.constant * pen[k];
    out.K = argmin_penalised(s, pen, out.constant);
    return out;
}

SelectionResult select_all(std::span<const double> ssr, std::span<const Segmentation> segmentations, std::size_t n,
                           std::span<const Criterion> criteria) {
    SelectionResult out;
    for (const auto c : criteria) {
        switch (c) {
            case Criterion::MBIC: out.choices.push_back(select_mbic(ssr, segmentations, n)); break;
            case Criterion::Lavielle: out.choices.push_back(select_lavielle(ssr)); break;
            case Criterion::BM1: out.choices.push_back(select_bm_jump(ssr, n)); break;
            case Criterion::BM2: out.choices.push_back(select_bm_slope(ssr, n)); break;
        }
    }
    return out;
}

}  // namespace segiwv
