#pragma once

#include "segiwv/types.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace segiwv {

enum class Criterion { MBIC, Lavielle, BM1, BM2 };

inline constexpr Criterion kAllCriteria[] = {Criterion::BM1, Criterion::BM2, Criterion::Lavielle, Criterion::MBIC};

/// "mbic", "lav", "bm1", "bm2".
std::string_view criterion_name(Criterion c);
Criterion parse_criterion(std::string_view text);
/// Comma-separated list, e.g. "bm1,bm2,lav,mbic".
std::vector<Criterion> parse_criteria(std::string_view text);

struct CriterionChoice {
    Criterion criterion{Criterion::MBIC};
    std::size_t K{1};
    /// Penalty constant actually used: alpha for BM1/BM2 (already doubled),
    /// the threshold S for Lavielle, 0 for mBIC.
    double constant{0.0};
    /// values[K-1]: the criterion for each K (to be maximised for mBIC,
    /// minimised for BM, second differences D_K for Lavielle).
    std::vector<double> values;
};

struct SelectionResult {
    std::vector<CriterionChoice> choices;

    [[nodiscard]] std::optional<std::size_t> K(Criterion c) const;
};

/// K (1..K_max) of the Birge-Massart penalty shape K (5 + 2 log(n / K)).
double bm_penalty_shape(std::size_t K, std::size_t n);

/// argmax_K -SSR_K/2 - (1/2) sum_k log n_k + (1/2 - K) log n, with each K's
/// own segment lengths; ties go to the smaller K.
CriterionChoice select_mbic(std::span<const double> ssr, std::span<const Segmentation> segmentations,
                            std::size_t n);

/// Adaptive elbow rule: J normalised affinely to J_1 = K_max, J_{K_max} = 1,
/// D_K = J_{K-1} - 2 J_K + J_{K+1}; the largest K with D_K > S, else 1.
CriterionChoice select_lavielle(std::span<const double> ssr, double threshold = 0.75);

/// Dimension jump: K(alpha) = argmin SSR_K + alpha pen(K) on a geometric
/// grid of 500 alphas; alpha* sits at the largest jump of K(alpha) (ties to
/// the larger alpha) and the result is K(2 alpha*).
CriterionChoice select_bm_jump(std::span<const double> ssr, std::size_t n);

/// Data-driven slope: least-absolute-deviation line of SSR_K against pen(K)
/// over K in [ceil(K_max/2), K_max]; alpha = -slope and the result is
/// argmin SSR_K + 2 alpha pen(K).
CriterionChoice select_bm_slope(std::span<const double> ssr, std::size_t n);

SelectionResult select_all(std::span<const double> ssr, std::span<const Segmentation> segmentations, std::size_t n,
                           std::span<const Criterion> criteria);

}  // namespace segiwv
