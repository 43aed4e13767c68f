#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "factorcast/errors.hpp"
#include "factorcast/rng.hpp"
#include "factorcast/timeseries.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace factorcast;
namespace fs = std::filesystem;

namespace {

std::string temp_file(const std::string& name) {
    return (fs::temp_directory_path() / name).string();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

PriceSeries make_series(std::string ticker, std::vector<std::string> dates,
                        std::vector<std::optional<double>> close) {
    PriceSeries s;
    s.ticker = std::move(ticker);
    s.dates = std::move(dates);
    s.close = std::move(close);
    return s;
}

} // namespace

TEST_CASE("load_csv sorts rows by date") {
    const std::string path = temp_file("fc_unsorted.csv");
    write_text(path,
               "Date,Close\n"
               "2020-01-03,3.0\n"
               "2020-01-01,1.0\n"
               "2020-01-02,2.0\n");
    const PriceSeries s = load_csv(path);
    REQUIRE(s.size() == 3);
    CHECK(s.dates == std::vector<std::string>{"2020-01-01", "2020-01-02", "2020-01-03"});
    CHECK(*s.close[0] == 1.0);
    CHECK(*s.close[2] == 3.0);
}

TEST_CASE("load_csv turns null cells into gaps") {
    const std::string path = temp_file("fc_gap.csv");
    write_text(path,
               "Date,Close\n"
               "2020-01-01,1.0\n"
               "2020-01-02,null\n"
               "2020-01-03,3.0\n");
    const PriceSeries s = load_csv(path);
    REQUIRE(s.size() == 3);
    CHECK_FALSE(s.close[1].has_value());
    CHECK(s.has_gaps());
}

TEST_CASE("load_csv handles OHLCV layout and unparseable cells") {
    const std::string path = temp_file("fc_ohlcv.csv");
    write_text(path,
               "Date,Open,High,Low,Close,Volume\n"
               "2020-01-01,1,2,0.5,1.5,100\n"
               "2020-01-02,1,2,0.5,n/a,100\n"
               "2020-01-03,1,2,0.5,2.5,100\n");
    const PriceSeries s = load_csv(path);
    REQUIRE(s.size() == 3);
    CHECK(*s.close[0] == 1.5);
    CHECK_FALSE(s.close[1].has_value());
}

TEST_CASE("load_csv error contracts") {
    CHECK_THROWS_AS(load_csv("/nonexistent/file.csv"), IoError);

    const std::string no_close = temp_file("fc_noclose.csv");
    write_text(no_close, "Date,Adj Close\n2020-01-01,1.0\n");
    CHECK_THROWS_AS(load_csv(no_close), FormatError);

    const std::string all_gaps = temp_file("fc_allgaps.csv");
    write_text(all_gaps, "Date,Close\n2020-01-01,null\n2020-01-02,NaN\n");
    CHECK_THROWS_AS(load_csv(all_gaps), EmptyDataError);

    const std::string dup = temp_file("fc_dup.csv");
    write_text(dup, "Date,Close\n2020-01-01,1\n2020-01-01,2\n");
    CHECK_THROWS_AS(load_csv(dup), FormatError);
}

TEST_CASE("csv round-trip preserves dates, values and gaps") {
    PriceSeries s = make_series("RT", {"2020-01-01", "2020-01-02", "2020-01-03"},
                                {1.234567890123, std::nullopt, 3.999999999999});
    const std::string path = temp_file("fc_roundtrip.csv");
    write_csv(s, path);
    const PriceSeries back = load_csv(path);
    REQUIRE(back.size() == s.size());
    CHECK(back.dates == s.dates);
    for (std::size_t i = 0; i < s.size(); ++i) {
        REQUIRE(back.close[i].has_value() == s.close[i].has_value());
        if (s.close[i]) CHECK(*back.close[i] == *s.close[i]);
    }
}

TEST_CASE("interior gap is linearly interpolated") {
    const auto a = make_series("A", {"2020-01-01", "2020-01-02", "2020-01-03"},
                               {1.0, std::nullopt, 3.0});
    const auto b = make_series("B", {"2020-01-01", "2020-01-02", "2020-01-03"},
                               {5.0, 5.0, 5.0});
    const AlignedPanel panel = align_and_interpolate({a, b});
    REQUIRE(panel.days() == 3);
    CHECK(panel.values(0, 0) == 1.0);
    CHECK(panel.values(1, 0) == doctest::Approx(2.0));
    CHECK(panel.values(2, 0) == 3.0);
}

TEST_CASE("identical gap-free calendars stack unchanged") {
    const auto a = make_series("A", {"2020-01-01", "2020-01-02"}, {1.0, 2.0});
    const auto b = make_series("B", {"2020-01-01", "2020-01-02"}, {10.0, 20.0});
    const AlignedPanel panel = align_and_interpolate({a, b});
    CHECK(panel.values(0, 0) == 1.0);
    CHECK(panel.values(1, 0) == 2.0);
    CHECK(panel.values(0, 1) == 10.0);
    CHECK(panel.values(1, 1) == 20.0);
    CHECK(panel.tickers == std::vector<std::string>{"A", "B"});
}

TEST_CASE("intersection of a 7-day and a 5-day calendar keeps weekdays") {
    // 2021-03-01 is a Monday; crypto trades through the weekend.
    std::vector<std::string> seven = {"2021-03-01", "2021-03-02", "2021-03-03",
                                      "2021-03-04", "2021-03-05", "2021-03-06",
                                      "2021-03-07", "2021-03-08", "2021-03-09",
                                      "2021-03-10"};
    std::vector<std::string> five = {"2021-03-01", "2021-03-02", "2021-03-03",
                                     "2021-03-04", "2021-03-05", "2021-03-08",
                                     "2021-03-09", "2021-03-10"};
    std::vector<std::optional<double>> v7(seven.size(), 1.0);
    std::vector<std::optional<double>> v5(five.size(), 2.0);
    const AlignedPanel panel = align_and_interpolate(
        {make_series("BTC", seven, v7), make_series("IDX", five, v5)},
        CalendarPolicy::Intersection);
    CHECK(panel.dates == five); // the weekend rows drop out
}

TEST_CASE("union policy keeps all dates and interpolates the missing ones") {
    const auto a = make_series("A", {"2020-01-01", "2020-01-03"}, {1.0, 3.0});
    const auto b = make_series("B", {"2020-01-01", "2020-01-02", "2020-01-03"},
                               {1.0, 1.0, 1.0});
    const AlignedPanel panel = align_and_interpolate({a, b}, CalendarPolicy::Union);
    REQUIRE(panel.days() == 3);
    CHECK(panel.values(1, 0) == doctest::Approx(2.0));
}

TEST_CASE("leading and trailing gaps carry the nearest observation") {
    const auto a = make_series("A",
                               {"2020-01-01", "2020-01-02", "2020-01-03", "2020-01-04"},
                               {std::nullopt, 2.0, std::nullopt, std::nullopt});
    const auto b = make_series("B",
                               {"2020-01-01", "2020-01-02", "2020-01-03", "2020-01-04"},
                               {1.0, 1.0, 1.0, 1.0});
    const AlignedPanel panel = align_and_interpolate({a, b});
    CHECK(panel.values(0, 0) == 2.0);
    CHECK(panel.values(2, 0) == 2.0);
    CHECK(panel.values(3, 0) == 2.0);
}

TEST_CASE("alignment error contracts") {
    const auto a = make_series("A", {"2020-01-01"}, {1.0});
    const auto b = make_series("B", {"2021-01-01"}, {1.0});
    CHECK_THROWS_AS(align_and_interpolate({a, b}), AlignmentError);
    CHECK_THROWS_AS(align_and_interpolate({a}), AlignmentError);

    const auto g = make_series("G", {"2020-01-01"}, {std::nullopt});
    const auto c = make_series("C", {"2020-01-01"}, {1.0});
    CHECK_THROWS_AS(align_and_interpolate({g, c}), DegenerateSeriesError);
}

TEST_CASE("interpolation never alters observed values") {
    Rng rng(11);
    std::vector<std::string> dates;
    for (int i = 1; i <= 28; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "2020-02-%02d", i);
        dates.emplace_back(buf);
    }
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::optional<double>> values(dates.size());
        std::vector<bool> observed(dates.size());
        for (std::size_t i = 0; i < dates.size(); ++i) {
            if (rng.uniform() < 0.3) continue; // gap
            values[i] = 10.0 + rng.normal();
            observed[i] = true;
        }
        if (std::none_of(observed.begin(), observed.end(), [](bool b) { return b; }))
            continue;
        const auto a = make_series("A", dates, values);
        const auto b = make_series("B", dates,
                                   std::vector<std::optional<double>>(dates.size(), 1.0));
        const AlignedPanel panel = align_and_interpolate({a, b});
        for (std::size_t i = 0; i < dates.size(); ++i)
            if (observed[i]) CHECK(panel.values(i, 0) == *values[i]);
    }
}

namespace {

AlignedPanel synthetic_panel(int days, int width, std::uint64_t seed) {
    AlignedPanel panel;
    Rng rng(seed);
    for (int i = 0; i < days; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "2019-%02d-%02d", 1 + i / 28, 1 + i % 28);
        panel.dates.emplace_back(buf);
    }
    panel.values.resize(days, width);
    for (int c = 0; c < width; ++c) {
        panel.tickers.push_back("T" + std::to_string(c));
        double level = 100.0;
        for (int t = 0; t < days; ++t) {
            level *= std::exp(0.01 * rng.normal());
            panel.values(t, c) = level;
        }
    }
    return panel;
}

} // namespace

TEST_CASE("log_returns") {
    AlignedPanel panel = synthetic_panel(3, 1, 1);
    panel.values.col(0) << 100.0, 100.0, 100.0;
    auto r = log_returns(panel, 0);
    CHECK(r == std::vector<double>{0.0, 0.0});

    AlignedPanel e = synthetic_panel(2, 1, 1);
    e.values.col(0) << 100.0, 100.0 * std::exp(1.0);
    r = log_returns(e, 0);
    REQUIRE(r.size() == 1);
    CHECK(r[0] == doctest::Approx(1.0).epsilon(1e-15));

    AlignedPanel d = synthetic_panel(3, 1, 1);
    d.values.col(0) << 100.0, 105.0, 103.0;
    r = log_returns(d, 0);
    CHECK(r[0] == doctest::Approx(std::log(1.05)).epsilon(1e-15));
    CHECK(r[1] == doctest::Approx(std::log(103.0 / 105.0)).epsilon(1e-15));

    AlignedPanel bad = synthetic_panel(2, 1, 1);
    bad.values.col(0) << 100.0, -1.0;
    CHECK_THROWS_AS(log_returns(bad, 0), DomainError);
    CHECK_THROWS_AS(log_returns(panel, 7), DomainError);
}

TEST_CASE("make_windows sample counting and targets") {
    AlignedPanel panel = synthetic_panel(6, 2, 3);
    const WindowedDataset ds = make_windows(panel, {0, 1}, 5);
    REQUIRE(ds.size() == 1);
    CHECK(ds.inputs[0].rows() == 5);
    CHECK(ds.inputs[0].cols() == 2);
    CHECK(ds.targets[0] == panel.values(5, panel.target_index));
    CHECK(ds.sample_dates[0] == panel.dates[5]);

    const AlignedPanel year = synthetic_panel(601, 2, 4);
    CHECK(make_windows(year, {0, 1}, 5).size() == 596);

    CHECK_THROWS_AS(make_windows(panel, {0}, 6), InsufficientDataError);
    CHECK_THROWS_AS(make_windows(panel, {}, 5), DomainError);
}

TEST_CASE("exogenous-only windows exclude the target column") {
    AlignedPanel panel = synthetic_panel(10, 3, 5);
    panel.target_index = 0;
    const WindowedDataset ds = make_windows(panel, {1, 2}, 4);
    for (std::size_t s = 0; s < ds.size(); ++s)
        for (int t = 0; t < 4; ++t) {
            CHECK(ds.inputs[s](t, 0) != panel.values(s + t, 0));
            CHECK(ds.inputs[s](t, 0) == panel.values(s + t, 1));
        }
}

TEST_CASE("windows reconstruct the source columns in order") {
    const AlignedPanel panel = synthetic_panel(40, 2, 6);
    const int L = 5;
    const WindowedDataset ds = make_windows(panel, {0, 1}, L);
    for (std::size_t s = 0; s < ds.size(); ++s)
        for (int t = 0; t < L; ++t)
            for (int j = 0; j < 2; ++j)
                CHECK(ds.inputs[s](t, j) == panel.values(s + t, j));
}

TEST_CASE("chrono_split counts and ordering") {
    const AlignedPanel panel = synthetic_panel(15, 2, 7);
    const WindowedDataset ds = make_windows(panel, {0, 1}, 5); // 10 samples
    REQUIRE(ds.size() == 10);
    const auto [train, test] = chrono_split(ds, 0.8);
    CHECK(train.size() == 8);
    CHECK(test.size() == 2);
    CHECK(train.sample_dates.back() < test.sample_dates.front());

    CHECK_THROWS_AS(chrono_split(ds, 1.0), SplitError);
    CHECK_THROWS_AS(chrono_split(ds, 0.0), SplitError);
    CHECK_THROWS_AS(chrono_split(ds, 0.01), SplitError); // empty train side
}

TEST_CASE("chrono_split of the paper-sized dataset") {
    const AlignedPanel panel = synthetic_panel(601, 2, 8);
    const WindowedDataset ds = make_windows(panel, {0, 1}, 5);
    const auto [train, test] = chrono_split(ds, 0.8);
    CHECK(train.size() == 476); // floor(0.8 * 596)
    CHECK(test.size() == 120);
}

TEST_CASE("date validation") {
    CHECK(is_valid_date("2020-02-29"));
    CHECK_FALSE(is_valid_date("2019-02-29"));
    CHECK_FALSE(is_valid_date("2020-13-01"));
    CHECK_FALSE(is_valid_date("2020-1-01"));
    CHECK_FALSE(is_valid_date("20200101"));
}
