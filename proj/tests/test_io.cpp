#include "segiwv/io.hpp"

#include "support.hpp"

#include <doctest.h>

#include <chrono>
#include <cmath>
#include <sstream>

using namespace segiwv;

namespace {

// Two years of daily data with one step on 2001-03-01.
std::string step_csv() {
    std::ostringstream out;
    out << "date,value\n";
    const auto noise = testing::normal_sample(730, 3, 0.0, 0.2);
    const Date start = parse_date("2000-01-01");
    for (std::size_t t = 0; t < 730; ++t) {
        const Date d = start + std::chrono::days{t};
        out << format_date(d) << ',' << (d >= parse_date("2001-03-01") ? 1.5 : 0.0) + noise[t] << '\n';
    }
    return out.str();
}

}  // namespace

TEST_CASE("two-column csv") {
    std::istringstream in("date,value\n2000-01-02,1.5\n2000-01-01,+2\n\n2000-01-03,NaN\n2000-01-04,\n2000-01-05,-1e-3\r\n");
    const auto r = read_series_csv(in);
    CHECK(r.dropped_non_finite == 2);
    REQUIRE(r.series.size() == 3);
    CHECK(r.series.date(0) == parse_date("2000-01-01"));
    CHECK(r.series.values()[0] == 2.0);
    CHECK(r.series.values()[2] == -1e-3);
}

TEST_CASE("three-column csv is gnss minus erai") {
    std::istringstream in("date,gnss,erai\n2000-01-01,10.5,10\n2000-01-02,nan,3\n2000-01-03,4,inf\n2000-01-04,1,2\n");
    const auto r = read_series_csv(in);
    CHECK(r.dropped_non_finite == 2);
    REQUIRE(r.series.size() == 2);
    CHECK(r.series.values()[0] == 0.5);
    CHECK(r.series.values()[1] == -1.0);
}

TEST_CASE("malformed csv reports the line") {
    std::istringstream bad_number("date,value\n2000-01-01,1\n2000-01-02,abc\n");
    CHECK_THROWS_WITH_AS(read_series_csv(bad_number), doctest::Contains("line 3"), DataError);
    std::istringstream bad_date("date,value\n2000-02-30,1\n");
    CHECK_THROWS_WITH_AS(read_series_csv(bad_date), doctest::Contains("line 2"), DataError);
    std::istringstream bad_fields("date,value\n2000-01-01,1,2\n");
    CHECK_THROWS_WITH_AS(read_series_csv(bad_fields), doctest::Contains("line 2"), DataError);
    std::istringstream bad_header("when,value\n");
    CHECK_THROWS_WITH_AS(read_series_csv(bad_header), doctest::Contains("line 1"), DataError);
    std::istringstream duplicate("date,value\n2000-01-01,1\n2000-01-01,2\n");
    CHECK_THROWS_AS(read_series_csv(duplicate), DataError);
    std::istringstream empty("");
    CHECK_THROWS_AS(read_series_csv(empty), DataError);
    CHECK_THROWS_AS(read_series_csv(std::filesystem::path("/nonexistent/series.csv")), DataError);
}

TEST_CASE("result json round trip and series fit") {
    std::istringstream in(step_csv());
    const auto data = read_series_csv(in);
    const auto problem = SegmentationProblem::from_series(data.series);
    InferenceOptions opts;
    opts.k_max = 8;
    const auto inference = infer_all_k(problem, opts);
    const auto selection = select_all(inference.ssr_curve(), inference.segmentations(), problem.size(), kAllCriteria);
    auto result = make_run_result("TEST", data, problem, inference, selection, opts);
    result.runtime_seconds = 0.25;

    CHECK(result.n == 730);
    CHECK(result.first_date == "2000-01-01");
    CHECK(result.sigma.size() == 12);
    CHECK(result.ssr.size() == 8);
    const auto* bm1 = result.find(Criterion::BM1);
    REQUIRE(bm1 != nullptr);
    CHECK(bm1->K == 2);
    REQUIRE(bm1->changepoint_dates.size() == 1);
    CHECK(bm1->changepoint_dates[0] == "2001-02-28");
    CHECK(bm1->offsets[0] == doctest::Approx(1.5).epsilon(0.1));
    CHECK(bm1->fourier.size() == 8);

    std::stringstream json;
    write_result_json(json, result);
    const auto back = read_result_json(json);
    CHECK(back == result);

    std::ostringstream fit_csv;
    write_series_fit_csv(fit_csv, problem, inference.at(bm1->K));
    std::istringstream lines(fit_csv.str());
    std::string header, first;
    std::getline(lines, header);
    std::getline(lines, first);
    CHECK(header == "date,y,mu,f,residual");
    CHECK(first.starts_with("2000-01-01,"));

    const auto dets = detections_of(*bm1);
    REQUIRE(dets.size() == 1);
    CHECK(dets[0].date == parse_date("2001-02-28"));

    std::istringstream broken("{\"station\": 3}");
    CHECK_THROWS_AS(read_result_json(broken), DataError);
}
