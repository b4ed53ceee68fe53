#include "segiwv/io.hpp"

#include "segiwv/periodic_fit.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace segiwv {

namespace {

std::string trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return std::string(s);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos
                                                                                           : comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

// Empty and NaN/Inf spellings give NaN, which ingestion drops.
double parse_value(const std::string& text, std::size_t line_no) {
    const auto l = lower(text);
    if (l.empty() || l == "nan" || l == "na" || l == "null") return std::numeric_limits<double>::quiet_NaN();
    if (l == "inf" || l == "+inf" || l == "-inf") return std::numeric_limits<double>::infinity();
    double v = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (*first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last) {
        throw DataError("line " + std::to_string(line_no) + ": cannot parse number '" + text + "'");
    }
    return v;
}

}  // namespace

IngestResult read_series_csv(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    int columns = 0;
    std::vector<RawRecord> records;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        const auto cells = split_csv(line);
        if (columns == 0) {
            std::vector<std::string> h;
            for (const auto& c : cells) h.push_back(lower(c));
            if (h == std::vector<std::string>{"date", "value"}) {
                columns = 2;
            } else if (h == std::vector<std::string>{"date", "gnss", "erai"}) {
                columns = 3;
            } else {
                throw DataError("line " + std::to_string(line_no) +
                                ": expected header 'date,value' or 'date,gnss,erai'");
            }
            continue;
        }
        if (static_cast<int>(cells.size()) != columns) {
            throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(columns) +
                            " fields, found " + std::to_string(cells.size()));
        }
        try {
            (void)parse_date(cells[0]);
        } catch (const DataError& e) {
            throw DataError("line " + std::to_string(line_no) + ": " + e.what());
        }
        double v = parse_value(cells[1], line_no);
        if (columns == 3) v -= parse_value(cells[2], line_no);
        records.push_back({cells[0], v});
    }
    if (columns == 0) throw DataError("empty input: missing header");
    if (records.empty()) throw DataError("no data rows");
    return ingest(records);
}

IngestResult read_series_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    try {
        return read_series_csv(in);
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

const CriterionReport* RunResult::find(Criterion c) const {
    for (const auto& s : selections) {
        if (s.criterion == c) return &s;
    }
    return nullptr;
}

namespace {

bool same_number(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

bool same_numbers(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), same_number);
}

}  // namespace

bool RunResult::operator==(const RunResult& o) const {
    return station == o.station && first_date == o.first_date && last_date == o.last_date && n == o.n &&
           dropped_non_finite == o.dropped_non_finite && variant == o.variant && init == o.init && k_max == o.k_max &&
           fourier_order == o.fourier_order && period == o.period && sigma_source == o.sigma_source &&
           same_numbers(sigma, o.sigma) && ssr == o.ssr && iterations == o.iterations && converged == o.converged &&
           selections == o.selections && runtime_seconds == o.runtime_seconds;
}

namespace {

std::string_view source_name(ScaleSource s) {
    switch (s) {
        case ScaleSource::RobustEstimated: return "robust-estimated";
        case ScaleSource::Homogeneous: return "homogeneous";
        case ScaleSource::Provided: return "provided";
    }
    return "?";
}

}  // namespace

RunResult make_run_result(const std::string& station, const IngestResult& data, const SegmentationProblem& problem,
                          const InferenceResult& inference, const SelectionResult& selection,
                          const InferenceOptions& opts, const OutlierRule& rule) {
    const auto& series = problem.series;
    RunResult r;
    r.station = station;
    r.first_date = format_date(series.date(0));
    r.last_date = format_date(series.date(series.size() - 1));
    r.n = series.size();
    r.dropped_non_finite = data.dropped_non_finite;
    r.variant = variant_letter(opts.variant);
    r.init = std::string(initialization_name(opts.init));
    r.k_max = opts.k_max;
    r.fourier_order = opts.effective_order();
    r.period = problem.period;
    r.sigma_source = std::string(source_name(inference.sigma.source));
    for (int m = 0; m < kMonths; ++m) {
        r.sigma.push_back(inference.sigma.present[m] ? inference.sigma.sigma[m]
                                                     : std::numeric_limits<double>::quiet_NaN());
    }
    r.ssr = inference.ssr_curve();
    for (const auto& k : inference.per_k) {
        r.iterations.push_back(k.iterations);
        r.converged.push_back(k.converged);
    }
    for (const auto& choice : selection.choices) {
        const auto& fit = inference.at(choice.K);
        const auto& seg = fit.segmentation;
        CriterionReport c;
        c.criterion = choice.criterion;
        c.K = choice.K;
        c.constant = choice.constant;
        c.changepoints.assign(seg.changepoints().begin(), seg.changepoints().end());
        for (std::size_t k = 0; k < c.changepoints.size(); ++k) {
            c.changepoint_dates.push_back(format_date(changepoint_date(series.dates(), c.changepoints[k])));
            c.offsets.push_back(seg.means()[k + 1] - seg.means()[k]);
        }
        c.outliers = classify_outliers(seg, series.dates(), fit.sigma, problem.months, rule);
        c.means.assign(seg.means().begin(), seg.means().end());
        c.fourier = fit.model.coeffs;
        c.fourier_active = fit.model.active;
        if (opts.variant == Variant::SegmentationOnly) {
            const auto terms = static_cast<std::size_t>(2 * opts.fourier_order);
            c.fourier.assign(terms, 0.0);
            c.fourier_active.assign(terms, false);
        }
        c.iterations = fit.iterations;
        c.converged = fit.converged;
        r.selections.push_back(std::move(c));
    }
    return r;
}

void write_result_json(std::ostream& out, const RunResult& r) {
    nlohmann::json j;
    j["station"] = r.station;
    j["first_date"] = r.first_date;
    j["last_date"] = r.last_date;
    j["n"] = r.n;
    j["dropped_non_finite"] = r.dropped_non_finite;
    j["variant"] = std::string(1, r.variant);
    j["init"] = r.init;
    j["k_max"] = r.k_max;
    j["fourier_order"] = r.fourier_order;
    j["period"] = r.period;
    j["sigma_source"] = r.sigma_source;
    auto& sigma = j["sigma"] = nlohmann::json::array();
    for (const double s : r.sigma) sigma.push_back(std::isnan(s) ? nlohmann::json(nullptr) : nlohmann::json(s));
    j["ssr"] = r.ssr;
    j["iterations"] = r.iterations;
    j["converged"] = r.converged;
    auto& sel = j["selections"] = nlohmann::json::array();
    for (const auto& c : r.selections) {
        sel.push_back({{"criterion", std::string(criterion_name(c.criterion))},
                       {"K", c.K},
                       {"constant", c.constant},
                       {"changepoints", c.changepoints},
                       {"changepoint_dates", c.changepoint_dates},
                       {"offsets", c.offsets},
                       {"outliers", c.outliers},
                       {"means", c.means},
                       {"fourier", c.fourier},
                       {"fourier_active", c.fourier_active},
                       {"iterations", c.iterations},
                       {"converged", c.converged}});
    }
    j["runtime_seconds"] = r.runtime_seconds;
    out << j.dump(2) << '\n';
}

RunResult read_result_json(std::istream& in) {
    try {
        const auto j = nlohmann::json::parse(in);
        RunResult r;
        r.station = j.at("station").get<std::string>();
        r.first_date = j.at("first_date").get<std::string>();
        r.last_date = j.at("last_date").get<std::string>();
        r.n = j.at("n").get<std::size_t>();
        r.dropped_non_finite = j.at("dropped_non_finite").get<std::size_t>();
        const auto v = j.at("variant").get<std::string>();
        if (v.size() != 1) throw DataError("result.json: bad variant '" + v + "'");
        r.variant = v[0];
        r.init = j.at("init").get<std::string>();
        r.k_max = j.at("k_max").get<std::size_t>();
        r.fourier_order = j.at("fourier_order").get<int>();
        r.period = j.at("period").get<double>();
        r.sigma_source = j.at("sigma_source").get<std::string>();
        for (const auto& s : j.at("sigma")) {
            r.sigma.push_back(s.is_null() ? std::numeric_limits<double>::quiet_NaN() : s.get<double>());
        }
        r.ssr = j.at("ssr").get<std::vector<double>>();
        r.iterations = j.at("iterations").get<std::vector<int>>();
        r.converged = j.at("converged").get<std::vector<bool>>();
        for (const auto& s : j.at("selections")) {
            CriterionReport c;
            c.criterion = parse_criterion(s.at("criterion").get<std::string>());
            c.K = s.at("K").get<std::size_t>();
            c.constant = s.at("constant").get<double>();
            c.changepoints = s.at("changepoints").get<std::vector<std::size_t>>();
            c.changepoint_dates = s.at("changepoint_dates").get<std::vector<std::string>>();
            c.offsets = s.at("offsets").get<std::vector<double>>();
            c.outliers = s.at("outliers").get<std::vector<bool>>();
            c.means = s.at("means").get<std::vector<double>>();
            c.fourier = s.at("fourier").get<std::vector<double>>();
            c.fourier_active = s.at("fourier_active").get<std::vector<bool>>();
            c.iterations = s.at("iterations").get<int>();
            c.converged = s.at("converged").get<bool>();
            r.selections.push_back(std::move(c));
        }
        r.runtime_seconds = j.at("runtime_seconds").get<double>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("result.json: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw DataError(std::string("result.json: ") + e.what());
    }
}

void write_series_fit_csv(std::ostream& out, const SegmentationProblem& problem, const FixedKResult& fit) {
    const auto mu = fit.segmentation.expand();
    const auto f = evaluate_fourier(fit.model, problem.phase);
    const auto y = problem.y();
    out << "date,y,mu,f,residual\n";
    for (std::size_t t = 0; t < y.size(); ++t) {
        out << format_date(problem.series.date(t)) << ',' << format_number(y[t]) << ',' << format_number(mu[t])
            << ',' << format_number(f[t]) << ',' << format_number(y[t] - mu[t] - f[t]) << '\n';
    }
}

std::vector<Detection> detections_of(const CriterionReport& report) {
    std::vector<Detection> out;
    for (std::size_t k = 0; k < report.changepoint_dates.size(); ++k) {
        out.push_back({parse_date(report.changepoint_dates[k]), report.offsets.at(k),
                       k < report.outliers.size() && report.outliers[k]});
    }
    return out;
}

}  // namespace segiwv
