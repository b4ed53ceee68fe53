#include "segiwv/simulation.hpp"

#include "segiwv/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

namespace segiwv {

void SimConfig::validate() const {
    if (n < 2) throw std::invalid_argument("SimConfig: n must be at least 2");
    if (days_per_month == 0 || months_per_year < 1 || months_per_year > kMonths) {
        throw std::invalid_argument("SimConfig: invalid pseudo-calendar");
    }
    if (means.size() != changepoints.size() + 1) {
        throw std::invalid_argument("SimConfig: need one mean per segment");
    }
    std::size_t prev = 0;
    for (const auto t : changepoints) {
        if (t <= prev || t >= n) throw std::invalid_argument("SimConfig: change-points must increase and stay below n");
        prev = t;
    }
    if (!(period > 0.0)) throw std::invalid_argument("SimConfig: period must be positive");
    if (!(sigma1 >= 0.0) || !(sigma2 >= 0.0)) throw std::invalid_argument("SimConfig: negative noise level");
}

std::uint64_t replicate_seed(std::uint64_t base, std::uint64_t index) {
    std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

SimulatedSeries generate(const SimConfig& config, std::uint64_t seed) {
    config.validate();
    const std::size_t n = config.n;
    Segmentation truth(n, config.changepoints, config.means);
    auto mu = truth.expand();
    auto phase = index_phase(n);
    std::vector<double> f(n);
    for (std::size_t t = 0; t < n; ++t) {
        f[t] = config.amplitude * std::cos(2.0 * std::numbers::pi * phase[t] / config.period);
    }
    auto months = pseudo_month_index(n, config.days_per_month, config.months_per_year);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<double> y(n);
    std::vector<Date> dates(n);
    const Date start = parse_date("2000-01-01");
    for (std::size_t t = 0; t < n; ++t) {
        const double s = config.sigma_of_month(months.month_of(t));
        y[t] = mu[t] + f[t] + (s > 0.0 ? s * noise(rng) : 0.0);
        dates[t] = start + std::chrono::days{static_cast<long>(t)};
    }

    MonthlyStd sigma;
    for (int m = 1; m <= config.months_per_year; ++m) {
        sigma.sigma[m - 1] = config.sigma_of_month(m);
        sigma.present[m - 1] = true;
    }
    sigma.source = ScaleSource::Provided;

    return {SegmentationProblem(TimeSeries(std::move(dates), std::move(y)), std::move(months), std::move(phase),
                                config.period),
            std::move(truth), std::move(mu), std::move(f), sigma};
}

Hausdorff hausdorff(std::span<const std::size_t> truth, std::span<const std::size_t> estimate) {
    if (truth.empty()) throw std::invalid_argument("hausdorff: the true change-point set is empty");
    if (estimate.empty()) return {};
    const auto directed = [](std::span<const std::size_t> from, std::span<const std::size_t> to) {
        double worst = 0.0;
        for (const auto a : from) {
            double nearest = std::numeric_limits<double>::infinity();
            for (const auto b : to) {
                nearest = std::min(nearest, std::abs(static_cast<double>(a) - static_cast<double>(b)));
            }
            worst = std::max(worst, nearest);
        }
        return worst;
    };
    return {directed(estimate, truth), directed(truth, estimate)};
}

double rmse(std::span<const double> truth, std::span<const double> estimate) {
    if (truth.size() != estimate.size()) throw std::invalid_argument("rmse: length mismatch");
    if (truth.empty()) return 0.0;
    long double s = 0.0L;
    for (std::size_t t = 0; t < truth.size(); ++t) {
        const double d = estimate[t] - truth[t];
        s += static_cast<long double>(d) * d;
    }
    return static_cast<double>(std::sqrt(s / static_cast<long double>(truth.size())));
}

ReplicateScore score(const SimulatedSeries& sim, std::string criterion, const FixedKResult& fit) {
    ReplicateScore s;
    s.criterion = std::move(criterion);
    s.K = fit.segmentation.K();
    s.k_error = static_cast<long>(s.K) - static_cast<long>(sim.truth.K());
    s.rmse_mu = rmse(sim.mu, fit.segmentation.expand());
    s.rmse_f = rmse(sim.f, evaluate_fourier(fit.model, sim.problem.phase));
    const auto h = hausdorff(sim.truth.changepoints(), fit.segmentation.changepoints());
    s.d1 = h.d1;
    s.d2 = h.d2;
    s.changepoints.assign(fit.segmentation.changepoints().begin(), fit.segmentation.changepoints().end());
    return s;
}

ReplicateRecord run_replicate(const StudyConfig& config, double sigma2, std::size_t replicate) {
    SimConfig sc = config.sim;
    sc.sigma2 = sigma2;
    ReplicateRecord rec;
    rec.sigma1 = sc.sigma1;
    rec.sigma2 = sigma2;
    rec.replicate = replicate;
    // Same noise stream for a replicate index across the sigma2 grid.
    rec.seed = replicate_seed(sc.seed, replicate);
    const auto sim = generate(sc, rec.seed);

    InferenceOptions opts = config.inference;
    opts.threads = 1;
    const auto result = infer_all_k(sim.problem, opts);
    rec.sigma1_hat = result.sigma.of(1);
    rec.sigma2_hat = sc.months_per_year >= 2 ? result.sigma.of(2) : rec.sigma1_hat;

    const auto ssr = result.ssr_curve();
    const auto segs = result.segmentations();
    const auto selection = select_all(ssr, segs, sim.problem.size(), config.criteria);
    for (const auto& choice : selection.choices) {
        rec.scores.push_back(score(sim, std::string(criterion_name(choice.criterion)), result.at(choice.K)));
    }
    if (config.include_true_k) {
        const std::size_t k_true = sim.truth.K();
        const auto fixed = k_true <= result.per_k.size() ? result.at(k_true)
                                                         : infer_fixed_k(sim.problem, result.sigma, k_true, opts);
        rec.scores.push_back(score(sim, std::string(kTrueK), fixed));
    }
    return rec;
}

std::vector<ReplicateRecord> run_study(const StudyConfig& config) {
    config.sim.validate();
    const std::size_t reps = config.sim.replicates;
    const std::size_t cells = config.sigma2_grid.size() * reps;
    std::vector<ReplicateRecord> out(cells);
    parallel_for(cells, [&](std::size_t i) {
        out[i] = run_replicate(config, config.sigma2_grid[i / reps], i % reps);
    }, config.threads);
    return out;
}

double quantile(std::vector<double> sample, double p) {
    if (sample.empty()) throw std::invalid_argument("quantile: empty sample");
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile: level outside [0, 1]");
    std::sort(sample.begin(), sample.end());
    const double h = p * static_cast<double>(sample.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sample.size() - 1);
    return sample[lo] + (h - static_cast<double>(lo)) * (sample[hi] - sample[lo]);
}

std::vector<SummaryRow> summarize(std::span<const ReplicateRecord> records, std::span<const std::size_t> truth,
                                  std::size_t detection_tolerance) {
    using Key = std::pair<double, double>;
    std::map<Key, std::vector<const ReplicateRecord*>> cells;
    for (const auto& r : records) cells[{r.sigma1, r.sigma2}].push_back(&r);

    std::vector<SummaryRow> rows;
    const auto emit_quantiles = [&](const Key& key, const std::string& crit, const std::string& metric,
                                    const std::vector<double>& sample) {
        if (sample.empty()) return;
        for (const double p : kSummaryLevels) rows.push_back({key.first, key.second, crit, metric, p, quantile(sample, p)});
    };

    for (const auto& [key, recs] : cells) {
        std::vector<double> e1, e2;
        for (const auto* r : recs) {
            e1.push_back(r->sigma1_hat - r->sigma1);
            e2.push_back(r->sigma2_hat - r->sigma2);
        }
        emit_quantiles(key, "none", "sigma1_error", e1);
        emit_quantiles(key, "none", "sigma2_error", e2);

        std::vector<std::string> order;
        std::map<std::string, std::vector<const ReplicateScore*>> by_crit;
        for (const auto* r : recs) {
            for (const auto& s : r->scores) {
                if (!by_crit.contains(s.criterion)) order.push_back(s.criterion);
                by_crit[s.criterion].push_back(&s);
            }
        }
        for (const auto& crit : order) {
            const auto& scores = by_crit[crit];
            std::vector<double> ke, rm, rf, d1, d2;
            for (const auto* s : scores) {
                ke.push_back(static_cast<double>(s->k_error));
                rm.push_back(s->rmse_mu);
                rf.push_back(s->rmse_f);
                if (s->d1) d1.push_back(*s->d1);
                if (s->d2) d2.push_back(*s->d2);
            }
            emit_quantiles(key, crit, "k_error", ke);
            emit_quantiles(key, crit, "rmse_mu", rm);
            emit_quantiles(key, crit, "rmse_f", rf);
            emit_quantiles(key, crit, "d1", d1);
            emit_quantiles(key, crit, "d2", d2);

            const double total = static_cast<double>(scores.size());
            for (const auto pos : truth) {
                std::size_t hits = 0;
                for (const auto* s : scores) {
                    const bool hit = std::any_of(s->changepoints.begin(), s->changepoints.end(), [&](std::size_t c) {
                        return (c > pos ? c - pos : pos - c) <= detection_tolerance;
                    });
                    hits += hit ? 1 : 0;
                }
                rows.push_back({key.first, key.second, crit, "detection_rate", static_cast<double>(pos),
                                static_cast<double>(hits) / total});
            }
            std::map<std::size_t, std::size_t> histogram;
            for (const auto* s : scores) {
                for (const auto c : s->changepoints) ++histogram[c];
            }
            for (const auto& [pos, count] : histogram) {
                rows.push_back({key.first, key.second, crit, "detection_count", static_cast<double>(pos),
                                static_cast<double>(count)});
            }
        }
    }
    return rows;
}

void write_summary_csv(std::ostream& out, std::span<const SummaryRow> rows) {
    out << "sigma1,sigma2,criterion,metric,quantile,value\n";
    for (const auto& r : rows) {
        out << format_number(r.sigma1) << ',' << format_number(r.sigma2) << ',' << r.criterion << ',' << r.metric
            << ',' << format_number(r.quantile) << ',' << format_number(r.value) << '\n';
    }
}

namespace {

nlohmann::json optional_number(const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::optional<double> read_optional(const nlohmann::json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<double>();
}

}  // namespace

void write_replicates_jsonl(std::ostream& out, std::span<const ReplicateRecord> records) {
    for (const auto& r : records) {
        nlohmann::json j;
        j["sigma1"] = r.sigma1;
        j["sigma2"] = r.sigma2;
        j["replicate"] = r.replicate;
        j["seed"] = r.seed;
        j["sigma1_hat"] = r.sigma1_hat;
        j["sigma2_hat"] = r.sigma2_hat;
        auto& scores = j["scores"] = nlohmann::json::array();
        for (const auto& s : r.scores) {
            scores.push_back({{"criterion", s.criterion},
                              {"K", s.K},
                              {"k_error", s.k_error},
                              {"rmse_mu", s.rmse_mu},
                              {"rmse_f", s.rmse_f},
                              {"d1", optional_number(s.d1)},
                              {"d2", optional_number(s.d2)},
                              {"changepoints", s.changepoints}});
        }
        out << j.dump() << '\n';
    }
}

std::vector<ReplicateRecord> read_replicates_jsonl(std::istream& in) {
    std::vector<ReplicateRecord> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            ReplicateRecord r;
            r.sigma1 = j.at("sigma1").get<double>();
            r.sigma2 = j.at("sigma2").get<double>();
            r.replicate = j.at("replicate").get<std::size_t>();
            r.seed = j.at("seed").get<std::uint64_t>();
            r.sigma1_hat = j.at("sigma1_hat").get<double>();
            r.sigma2_hat = j.at("sigma2_hat").get<double>();
            for (const auto& s : j.at("scores")) {
                ReplicateScore sc;
                sc.criterion = s.at("criterion").get<std::string>();
                sc.K = s.at("K").get<std::size_t>();
                sc.k_error = s.at("k_error").get<long>();
                sc.rmse_mu = s.at("rmse_mu").get<double>();
                sc.rmse_f = s.at("rmse_f").get<double>();
                sc.d1 = read_optional(s.at("d1"));
                sc.d2 = read_optional(s.at("d2"));
                sc.changepoints = s.at("changepoints").get<std::vector<std::size_t>>();
                r.scores.push_back(std::move(sc));
            }
            out.push_back(std::move(r));
        } catch (const nlohmann::json::exception& e) {
            throw DataError("replicates line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace segiwv
