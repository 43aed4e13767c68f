#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "factorcast/adf.hpp"
#include "factorcast/correlation.hpp"
#include "factorcast/errors.hpp"
#include "factorcast/johansen.hpp"
#include "factorcast/rng.hpp"

#include "test_util.hpp"

#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>

using namespace factorcast;

namespace {

const std::string kOracleDir = ORACLE_DATA_DIR;

std::vector<double> random_walk(Rng& rng, int n, double drift = 0.0) {
    std::vector<double> y(n);
    double level = 100.0;
    for (int t = 0; t < n; ++t) {
        level += drift + rng.normal();
        y[t] = level;
    }
    return y;
}

AdfRegression regression_from_name(const std::string& name) {
    if (name == "no-constant") return AdfRegression::NoConstant;
    if (name == "constant") return AdfRegression::Constant;
    return AdfRegression::ConstantTrend;
}

JohansenDet det_from_name(const std::string& name) {
    if (name == "none") return JohansenDet::None;
    if (name == "restricted-constant") return JohansenDet::RestrictedConstant;
    return JohansenDet::UnrestrictedConstant;
}

} // namespace

TEST_CASE("adf statistics match the statsmodels reference fixtures") {
    const auto expected =
        nlohmann::json::parse(testutil::read_file(kOracleDir + "/expected.json"));
    // The full sweep lives in the acceptance suite; spot-check a sample here.
    int checked = 0;
    for (const auto& c : expected["adf"]) {
        if (checked >= 6) break;
        const auto series =
            testutil::read_value_csv(kOracleDir + "/" + c["series"].get<std::string>());
        const AdfResult r =
            adf_test(series, c["max_lags"].get<int>(), c["autolag"].get<bool>(),
                     regression_from_name(c["regression"].get<std::string>()));
        CHECK(r.statistic == doctest::Approx(c["stat"].get<double>()).epsilon(1e-10));
        CHECK(std::abs(r.p_value - c["pvalue"].get<double>()) < 1e-6);
        CHECK(r.lags_used == c["lags"].get<int>());
        CHECK(r.n_obs == c["nobs"].get<int>());
        ++checked;
    }
    CHECK(checked == 6);
}

TEST_CASE("random walk fails to reject, white noise rejects") {
    Rng rng(2024);
    const auto walk = random_walk(rng, 500);
    CHECK(adf_test(walk).p_value > 0.05);

    std::vector<double> noise(500);
    for (auto& v : noise) v = rng.normal();
    CHECK(adf_test(noise).p_value < 0.01);
}

TEST_CASE("adf error contracts") {
    const std::vector<double> constant(100, 5.0);
    CHECK_THROWS_AS(adf_test(constant), DegenerateRegressionError);

    const std::vector<double> tiny = {1.0, 2.0, 1.5};
    CHECK_THROWS_AS(adf_test(tiny, 4, false), InsufficientDataError);

    std::vector<double> bad(100, 0.0);
    bad[50] = std::nan("");
    CHECK_THROWS_AS(adf_test(bad), DomainError);
}

TEST_CASE("adf statistic is affine-invariant for the constant regression") {
    Rng rng(5);
    const auto y = random_walk(rng, 300);
    std::vector<double> scaled(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) scaled[i] = 3.5 * y[i] - 41.0;
    const AdfResult a = adf_test(y, 3, false);
    const AdfResult b = adf_test(scaled, 3, false);
    CHECK(a.statistic == doctest::Approx(b.statistic).epsilon(1e-9));
}

TEST_CASE("n_obs bookkeeping") {
    Rng rng(6);
    const auto y = random_walk(rng, 200);
    const AdfResult r = adf_test(y, 4, false);
    CHECK(r.lags_used == 4);
    CHECK(r.n_obs == static_cast<int>(y.size()) - r.lags_used - 1);
}

TEST_CASE("mackinnon p-values sit near the classic critical values") {
    CHECK(mackinnon_pvalue(-2.86, AdfRegression::Constant) == doctest::Approx(0.05).epsilon(0.05));
    CHECK(mackinnon_pvalue(-3.43, AdfRegression::Constant) == doctest::Approx(0.01).epsilon(0.10));
    CHECK(mackinnon_pvalue(-8.0, AdfRegression::Constant) < 1e-8);
    CHECK(mackinnon_pvalue(3.0, AdfRegression::Constant) == 1.0);
    CHECK(mackinnon_pvalue(-25.0, AdfRegression::Constant) == 0.0);
}

TEST_CASE("pearson correlation") {
    const std::vector<double> a = {1.0, 2.0, 3.0};
    CHECK(pearson_correlation(a, a) == doctest::Approx(1.0).epsilon(1e-15));
    const std::vector<double> rev = {3.0, 2.0, 1.0};
    CHECK(pearson_correlation(a, rev) == doctest::Approx(-1.0).epsilon(1e-15));
    const std::vector<double> x = {1.0, 2.0, 3.0, 4.0};
    const std::vector<double> y = {1.0, 3.0, 2.0, 4.0};
    CHECK(pearson_correlation(x, y) == doctest::Approx(0.8).epsilon(1e-15));

    const std::vector<double> flat = {2.0, 2.0, 2.0};
    CHECK_THROWS_AS(pearson_correlation(a, flat), UndefinedStatError);
    CHECK_THROWS_AS(pearson_correlation(a, x), ShapeError);
}

TEST_CASE("pearson symmetry and scale invariance") {
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> x(40), y(40);
        for (auto& v : x) v = rng.normal();
        for (auto& v : y) v = rng.normal();
        const double r = pearson_correlation(x, y);
        CHECK(pearson_correlation(y, x) == doctest::Approx(r).epsilon(1e-12));
        std::vector<double> ax(x.size());
        const double a = rng.uniform(0.1, 5.0);
        const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
        for (std::size_t i = 0; i < x.size(); ++i) ax[i] = sign * a * x[i] + 2.0;
        CHECK(pearson_correlation(ax, y) == doctest::Approx(sign * r).epsilon(1e-10));
        CHECK(r >= -1.0);
        CHECK(r <= 1.0);
    }
}

TEST_CASE("johansen trace statistics match the reference fixtures") {
    const auto expected =
        nlohmann::json::parse(testutil::read_file(kOracleDir + "/expected.json"));
    int checked = 0;
    for (const auto& c : expected["johansen"]) {
        if (checked >= 4) break;
        const auto y =
            testutil::read_value_csv(kOracleDir + "/" + c["y"].get<std::string>());
        const auto x =
            testutil::read_value_csv(kOracleDir + "/" + c["x"].get<std::string>());
        const JohansenResult r = johansen_pairwise(
            y, x, c["lag"].get<int>(), det_from_name(c["det"].get<std::string>()));
        for (int i = 0; i < 2; ++i) {
            const double want = c["trace"][i].get<double>();
            CHECK(std::abs(r.trace_stats[i] - want) <= 1e-8 * std::abs(want));
            CHECK(r.eigenvalues[i] ==
                  doctest::Approx(c["eig"][i].get<double>()).epsilon(1e-8));
        }
        ++checked;
    }
    CHECK(checked == 4);
}

TEST_CASE("cointegrated pair rejects rank 0, independent walks do not") {
    Rng rng(42);
    const int n = 500;
    const auto y = random_walk(rng, n);
    std::vector<double> x(n), s(n);
    s[0] = rng.normal();
    for (int t = 1; t < n; ++t) s[t] = 0.6 * s[t - 1] + rng.normal();
    for (int t = 0; t < n; ++t) x[t] = y[t] + s[t];

    const JohansenResult coint = johansen_pairwise(y, x, 1);
    CHECK(coint.trace_stats[0] > coint.critical_values_95[0]);
    CHECK(coint.p_values[0] < 0.05);

    const auto w1 = random_walk(rng, n);
    const auto w2 = random_walk(rng, n);
    const JohansenResult indep = johansen_pairwise(w1, w2, 1);
    CHECK(indep.trace_stats[0] < indep.critical_values_95[0]);
}

TEST_CASE("johansen invariants") {
    Rng rng(9);
    const auto y = random_walk(rng, 300);
    const auto x = random_walk(rng, 300);
    for (auto det : {JohansenDet::None, JohansenDet::RestrictedConstant,
                     JohansenDet::UnrestrictedConstant}) {
        const JohansenResult r = johansen_pairwise(y, x, 2, det);
        REQUIRE(r.eigenvalues.size() == 2);
        CHECK(r.eigenvalues[0] >= r.eigenvalues[1]);
        for (double ev : r.eigenvalues) {
            CHECK(ev >= 0.0);
            CHECK(ev < 1.0);
        }
        CHECK(r.trace_stats[0] >= r.trace_stats[1]);
        for (double p : r.p_values) {
            CHECK(p >= 0.001);
            CHECK(p <= 0.999);
        }
        CHECK(r.trace_stats[1] > 0.0);
        CHECK(r.n_obs == 300 - 1 - 2);
    }
}

TEST_CASE("johansen error contracts") {
    Rng rng(10);
    const auto y = random_walk(rng, 200);
    std::vector<double> x2(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) x2[i] = 2.0 * y[i];
    CHECK_THROWS_AS(johansen_pairwise(y, x2, 1), SingularMatrixError);

    const std::vector<double> shorty(10, 1.0);
    CHECK_THROWS_AS(johansen_pairwise(shorty, shorty, 1), InsufficientDataError);

    std::vector<double> other = y;
    other.pop_back();
    CHECK_THROWS_AS(johansen_pairwise(y, other, 1), ShapeError);
}

TEST_CASE("johansen size stays near nominal on independent walks") {
    // A 200-trial smoke version of the acceptance power/size run.
    Rng rng(31337);
    int rejections = 0;
    const int trials = 200;
    for (int i = 0; i < trials; ++i) {
        const auto a = random_walk(rng, 400);
        const auto b = random_walk(rng, 400);
        const JohansenResult r = johansen_pairwise(a, b, 1);
        if (r.trace_stats[0] > r.critical_values_95[0]) ++rejections;
    }
    const double rate = static_cast<double>(rejections) / trials;
    CHECK(rate > 0.005);
    CHECK(rate < 0.14);
}

TEST_CASE("critical value table lookups and interpolation") {
    const TraceCriticalTable& table = trace_table();
    CHECK(table.critical_value(JohansenDet::RestrictedConstant, 2, 0.05) ==
          doctest::Approx(19.96));
    CHECK(table.critical_value(JohansenDet::None, 1, 0.05) == doctest::Approx(4.1296));

    // Monotone decreasing in the statistic, clamped at both ends.
    double prev = 1.0;
    for (double stat = 0.0; stat < 60.0; stat += 0.5) {
        const double p = table.p_value(JohansenDet::RestrictedConstant, 2, stat);
        CHECK(p <= prev + 1e-12);
        CHECK(p >= 0.001);
        CHECK(p <= 0.999);
        prev = p;
    }
    CHECK(table.p_value(JohansenDet::RestrictedConstant, 2, 19.96) ==
          doctest::Approx(0.05).epsilon(1e-6));
    CHECK(table.p_value(JohansenDet::RestrictedConstant, 2, 500.0) == 0.001);
    CHECK(table.p_value(JohansenDet::RestrictedConstant, 2, 0.0) == 0.999);
}

TEST_CASE("table file loads with checksum verification") {
    const TraceCriticalTable table = load_trace_table_file(CV_TABLE_PATH);
    CHECK(table.critical_value(JohansenDet::RestrictedConstant, 1, 0.01) ==
          doctest::Approx(12.97));

    // Flip one payload byte: the checksum must catch it.
    std::string text = testutil::read_file(CV_TABLE_PATH);
    const auto pos = text.find("19.96");
    REQUIRE(pos != std::string::npos);
    text[pos] = '8';
    CHECK_THROWS_AS(TraceCriticalTable::parse(text), FormatError);
    CHECK_THROWS_AS(TraceCriticalTable::parse("garbage\n1 2 3\n"), FormatError);
}
