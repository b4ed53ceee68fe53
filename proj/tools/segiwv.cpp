#include "segiwv/inference.hpp"
#include "segiwv/io.hpp"
#include "segiwv/model_selection.hpp"
#include "segiwv/simulation.hpp"
#include "segiwv/validation.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace segiwv;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kInternal = 3 };

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InferenceFlags {
    std::string variant{"a"};
    std::size_t kmax{30};
    std::string criteria{"bm1,bm2,lav,mbic"};
    int order{4};
    double alpha{0.001};
    double tol{1e-6};
    int max_iters{100};
    std::string init{"default"};
    bool update_variance{false};
    bool accelerate{false};
    bool known_shape{false};
    bool plain_alternation{false};
    std::size_t min_segment{1};

    void attach(CLI::App& app) {
        app.add_option("--variant", variant, "Method variant: a full, b selection, c segmentation only, d homogeneous")
            ->check(CLI::IsMember({"a", "b", "c", "d"}));
        app.add_option("--kmax", kmax, "Largest number of segments")->check(CLI::PositiveNumber);
        app.add_option("--criteria", criteria, "Comma-separated subset of bm1,bm2,lav,mbic");
        app.add_option("--order", order, "Fourier order")->check(CLI::NonNegativeNumber);
        app.add_option("--alpha", alpha, "p-value threshold of variant b");
        app.add_option("--tol", tol, "Relative stopping threshold");
        app.add_option("--max-iters", max_iters, "Iteration cap per K")->check(CLI::PositiveNumber);
        app.add_option("--init", init, "Initialisation")
            ->check(CLI::IsMember({"default", "seg-first", "weighted", "weighted-centered"}));
        app.add_flag("--update-variance", update_variance, "Re-estimate the monthly variances at every iteration");
        app.add_flag("--accelerate", accelerate, "Squared extrapolation of the Fourier coefficients");
        app.add_flag("--known-shape", known_shape, "Fit a_1 cos(w_1 t) only");
        app.add_flag("--plain-alternation", plain_alternation,
                     "Never replace an alternating step by the joint refit of a repeated segmentation");
        app.add_option("--min-segment", min_segment, "Minimum segment length")->check(CLI::PositiveNumber);
    }

    [[nodiscard]] InferenceOptions options() const {
        InferenceOptions o;
        o.k_max = kmax;
        o.variant = parse_variant(variant);
        o.init = parse_initialization(init);
        o.stop_tol = tol;
        o.max_iters = max_iters;
        o.accelerate = accelerate;
        o.joint_refit = !plain_alternation;
        o.fourier_order = order;
        o.selection_alpha = alpha;
        o.update_variance = update_variance;
        o.known_shape = known_shape;
        o.min_segment_length = min_segment;
        try {
            o.validate();
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
        return o;
    }

    [[nodiscard]] std::vector<Criterion> criteria_list() const {
        try {
            return parse_criteria(criteria);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
    }
};

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    return out;
}

void run_segment(const fs::path& input, std::string station, const InferenceFlags& flags, const fs::path& out_dir,
                 const OutlierRule& rule) {
    const auto opts = flags.options();
    const auto criteria = flags.criteria_list();
    if (station.empty()) station = input.stem().string();

    const auto t0 = std::chrono::steady_clock::now();
    const auto data = read_series_csv(input);
    const auto problem = SegmentationProblem::from_series(data.series);
    if (data.dropped_non_finite > 0) {
        std::cerr << "dropped " << data.dropped_non_finite << " non-finite values\n";
    }
    const auto inference = infer_all_k(problem, opts);
    const auto ssr = inference.ssr_curve();
    const auto segs = inference.segmentations();
    const auto selection = select_all(ssr, segs, problem.size(), criteria);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    for (const auto& k : inference.per_k) {
        std::cerr << "K=" << k.K << " iterations=" << k.iterations << (k.converged ? "" : " (not converged)")
                  << " ssr=" << std::setprecision(10) << k.ssr << '\n';
    }
    for (const auto& c : selection.choices) std::cerr << criterion_name(c.criterion) << ": K=" << c.K << '\n';
    std::cerr << "n=" << problem.size() << " wall time " << std::setprecision(4) << seconds << " s\n";

    auto result = make_run_result(station, data, problem, inference, selection, opts, rule);
    result.runtime_seconds = seconds;
    fs::create_directories(out_dir);
    {
        auto out = open_out(out_dir / "result.json");
        write_result_json(out, result);
    }
    if (!selection.choices.empty()) {
        auto out = open_out(out_dir / "series_fit.csv");
        write_series_fit_csv(out, problem, inference.at(selection.choices.front().K));
    }
}

void run_simulate(const InferenceFlags& flags, double sigma1, std::vector<double> sigma2, std::size_t replicates,
                  std::uint64_t seed, std::size_t tolerance, const fs::path& out_dir) {
    StudyConfig cfg;
    cfg.inference = flags.options();
    cfg.criteria = flags.criteria_list();
    cfg.sim.sigma1 = sigma1;
    cfg.sim.replicates = replicates;
    cfg.sim.seed = seed;
    cfg.detection_tolerance = tolerance;
    if (!sigma2.empty()) cfg.sigma2_grid = std::move(sigma2);
    if (!(sigma1 > 0.0)) throw UsageError("--sigma1 must be positive");
    for (const double s : cfg.sigma2_grid) {
        if (!(s > 0.0)) throw UsageError("--sigma2 values must be positive");
    }

    const auto t0 = std::chrono::steady_clock::now();
    const auto records = run_study(cfg);
    const auto rows = summarize(records, cfg.sim.changepoints, cfg.detection_tolerance);

    fs::create_directories(out_dir);
    const auto write_rows = [&](const std::string& name, auto keep) {
        std::vector<SummaryRow> sel;
        for (const auto& r : rows) {
            if (keep(r)) sel.push_back(r);
        }
        auto out = open_out(out_dir / name);
        write_summary_csv(out, sel);
    };
    write_rows("summary.csv", [](const SummaryRow&) { return true; });
    write_rows("figure3_sigma.csv", [](const SummaryRow& r) { return r.criterion == "none"; });
    write_rows("figure4_quality.csv", [](const SummaryRow& r) {
        return r.metric == "k_error" || r.metric == "rmse_mu" || r.metric == "d1" || r.metric == "d2";
    });
    write_rows("figure5_detection.csv", [](const SummaryRow& r) {
        return r.metric == "detection_rate" || r.metric == "detection_count";
    });
    write_rows("figure6_rmse_f.csv", [](const SummaryRow& r) { return r.metric == "rmse_f"; });
    {
        auto out = open_out(out_dir / "replicates.jsonl");
        write_replicates_jsonl(out, records);
    }
    std::cerr << records.size() << " replicates in "
              << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() << " s\n";
}

void run_validate(const std::vector<fs::path>& inputs, const fs::path& metadata_path, long window,
                  const std::string& criteria_text, const fs::path& out_dir) {
    std::ifstream meta_in(metadata_path);
    if (!meta_in) throw DataError("cannot open '" + metadata_path.string() + "'");
    const auto metadata = read_metadata_csv(meta_in);

    std::vector<RunResult> results;
    for (const auto& p : inputs) {
        std::ifstream in(p);
        if (!in) throw DataError("cannot open '" + p.string() + "'");
        results.push_back(read_result_json(in));
        if (!metadata.empty() && !metadata.has_station(results.back().station)) {
            throw DataError("station '" + results.back().station + "' has no entry in " + metadata_path.string());
        }
    }
    std::vector<Criterion> criteria;
    if (criteria_text.empty()) {
        for (const auto c : kAllCriteria) {
            if (!results.empty() && results.front().find(c)) criteria.push_back(c);
        }
    } else {
        try {
            criteria = parse_criteria(criteria_text);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
    }

    fs::create_directories(out_dir);
    auto det_out = open_out(out_dir / "validation_detections.csv");
    auto sta_out = open_out(out_dir / "validation_stations.csv");
    auto tab_out = open_out(out_dir / "validation_table.csv");
    det_out << "station,criterion,date,offset,outlier,event_date,event_types,distance_days,validated\n";
    sta_out << "station,criterion,detections,outliers,validations,percent_with_outliers,percent_without_outliers\n";
    tab_out << "criterion,window_days,stations,nsta,min,mean,max,detections,outliers,validations,"
               "percent_with_outliers,percent_without_outliers\n";
    for (const auto c : criteria) {
        std::vector<ValidationReport> reports;
        for (const auto& r : results) {
            const auto* rep = r.find(c);
            if (!rep) throw DataError("result for station '" + r.station + "' has no " +
                                      std::string(criterion_name(c)) + " selection");
            const auto events = metadata.events_for(r.station);
            auto v = validate(detections_of(*rep), events, window);
            v.station = r.station;
            for (const auto& m : v.matches) {
                det_out << r.station << ',' << criterion_name(c) << ',' << format_date(m.detection.date) << ','
                        << format_number(m.detection.offset) << ',' << (m.detection.outlier ? 1 : 0) << ','
                        << (m.event_date ? format_date(*m.event_date) : "") << ',' << m.event_types << ','
                        << (m.distance_days ? std::to_string(*m.distance_days) : "") << ','
                        << (m.validated ? 1 : 0) << '\n';
            }
            sta_out << r.station << ',' << criterion_name(c) << ',' << v.detections << ',' << v.outliers << ','
                    << v.validations << ',' << format_number(v.percent_with_outliers) << ','
                    << format_number(v.percent_without_outliers) << '\n';
            reports.push_back(std::move(v));
        }
        const auto row = aggregate(reports);
        tab_out << criterion_name(c) << ',' << window << ',' << row.stations << ',' << row.stations_with_changepoints
                << ',' << row.min_detections << ',' << format_number(row.mean_detections) << ',' << row.max_detections
                << ',' << row.detections << ',' << row.outliers << ',' << row.validations << ','
                << format_number(row.percent_with_outliers) << ',' << format_number(row.percent_without_outliers)
                << '\n';
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Segmentation of series with a periodic bias and monthly variance"};
    app.require_subcommand(1);

    InferenceFlags seg_flags;
    fs::path seg_input, seg_out{"."};
    std::string station;
    OutlierRule rule;
    auto* seg = app.add_subcommand("segment", "Segment one series and write result.json and series_fit.csv");
    seg->add_option("--input", seg_input, "CSV with date,value or date,gnss,erai")->required()->check(CLI::ExistingFile);
    seg->add_option("--station", station, "Station name (default: input file stem)");
    seg->add_option("--out", seg_out, "Output directory");
    seg->add_option("--outlier-gap-days", rule.gap_days, "Longest outlier segment in days");
    seg->add_option("--outlier-amp", rule.amp_factor, "Outlier offset threshold in noise standard deviations");
    seg_flags.attach(*seg);

    InferenceFlags sim_flags;
    double sigma1 = 0.5;
    std::vector<double> sigma2;
    std::size_t replicates = 100;
    std::uint64_t seed = 20190101;
    std::size_t tolerance = 5;
    fs::path sim_out{"."};
    auto* sim = app.add_subcommand("simulate", "Run the simulation study and write plot-ready tables");
    sim->add_option("--sigma1", sigma1, "Noise level of odd pseudo-months");
    sim->add_option("--sigma2", sigma2, "Noise levels of even pseudo-months (default 0.1..1.5 step 0.2)")
        ->delimiter(',');
    sim->add_option("--replicates", replicates, "Replicates per noise level");
    sim->add_option("--seed", seed, "Base seed");
    sim->add_option("--detection-tolerance", tolerance, "Index tolerance of the detection rate");
    sim->add_option("--out", sim_out, "Output directory");
    sim_flags.attach(*sim);

    std::vector<fs::path> val_inputs;
    fs::path metadata, val_out{"."};
    long window = 30;
    std::string val_criteria;
    auto* val = app.add_subcommand("validate", "Validate detections of result.json files against metadata");
    val->add_option("--input", val_inputs, "result.json files")->required()->check(CLI::ExistingFile);
    val->add_option("--metadata", metadata, "CSV station,date,type")->required()->check(CLI::ExistingFile);
    val->add_option("--window-days", window, "Validation half-window in days")->check(CLI::NonNegativeNumber);
    val->add_option("--criteria", val_criteria, "Criteria to validate (default: all in the results)");
    val->add_option("--out", val_out, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*seg) run_segment(seg_input, station, seg_flags, seg_out, rule);
        if (*sim) run_simulate(sim_flags, sigma1, sigma2, replicates, seed, tolerance, sim_out);
        if (*val) run_validate(val_inputs, metadata, window, val_criteria, val_out);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kData;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return kInternal;
    }
    return kOk;
}
