#include "factorcast/backtest.hpp"
#include "factorcast/errors.hpp"

#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numeric>

namespace factorcast {

int position(double v_d, double threshold) {
    if (!std::isfinite(v_d)) throw DomainError("position: non-finite deviation");
    if (!(threshold > 0.0)) throw DomainError("position: threshold must be positive");
    if (v_d > threshold) return 1;
    if (v_d < -threshold) return -1;
    return 0;
}

std::vector<double> deviations(const ForecastSeries& forecast) {
    if (forecast.size() == 0) throw DomainError("deviations: empty forecast");
    for (double p : forecast.actual)
        if (!(p > 0.0)) throw DomainError("deviations: non-positive price");
    std::vector<double> out;
    out.reserve(forecast.size() - 1);
    for (std::size_t n = 1; n < forecast.size(); ++n) {
        const double pred = forecast.point_estimate[n];
        if (!(pred > 0.0)) throw DomainError("deviations: non-positive prediction");
        out.push_back(pred / forecast.actual[n - 1] - 1.0);
    }
    return out;
}

double daily_return(int pos, double log_return) {
    if (!std::isfinite(log_return)) throw DomainError("daily_return: non-finite return");
    return std::exp(pos * log_return);
}

double cumulative_return(std::span<const double> daily_returns, ReturnMode mode) {
    if (daily_returns.empty()) throw DomainError("cumulative_return: empty input");
    if (mode == ReturnMode::PaperLiteral)
        return std::accumulate(daily_returns.begin(), daily_returns.end(), 0.0);
    double prod = 1.0;
    for (double g : daily_returns) prod *= g;
    return prod;
}

double baseline_cumulative(std::span<const double> spy_log_returns, ReturnMode mode) {
    if (spy_log_returns.empty()) throw DomainError("baseline_cumulative: empty input");
    std::vector<double> g;
    g.reserve(spy_log_returns.size());
    for (double r : spy_log_returns) g.push_back(daily_return(1, r));
    return cumulative_return(g, mode);
}

double sharpe_ratio(std::span<const double> period_returns, double risk_free_rate) {
    if (period_returns.size() < 2)
        throw DomainError("sharpe_ratio: need at least 2 returns");
    const double n = static_cast<double>(period_returns.size());
    const double mean =
        std::accumulate(period_returns.begin(), period_returns.end(), 0.0) / n;
    double ss = 0.0;
    for (double r : period_returns) ss += (r - mean) * (r - mean);
    const double stdev = std::sqrt(ss / (n - 1.0));
    if (stdev == 0.0) throw UndefinedStatError("sharpe_ratio: zero return dispersion");
    return (mean - risk_free_rate) / stdev;
}

BacktestResult run_backtest(const ForecastSeries& forecast,
                            std::span<const double> actual_prices,
                            double threshold, ReturnMode mode,
                            double risk_free_rate) {
    if (forecast.size() < 2)
        throw ShapeError("run_backtest: need at least 2 forecast days");
    if (actual_prices.size() != forecast.size())
        throw ShapeError("run_backtest: forecast and price series lengths differ");
    for (std::size_t i = 0; i < forecast.size(); ++i) {
        if (forecast.actual[i] != actual_prices[i])
            throw ShapeError("run_backtest: forecast.actual does not match prices at day " +
                             std::to_string(i));
        if (!(actual_prices[i] > 0.0))
            throw DomainError("run_backtest: non-positive price");
    }

    BacktestResult result;
    result.mode = mode;
    result.positions.deviations = deviations(forecast);
    const std::size_t days = result.positions.deviations.size();
    result.n_days = static_cast<int>(days);

    std::vector<double> portfolio_log; // signed log returns S_pos * r_n
    for (std::size_t n = 0; n < days; ++n) {
        result.positions.dates.push_back(forecast.dates[n + 1]);
        const int pos = position(result.positions.deviations[n], threshold);
        result.positions.positions.push_back(pos);
        const double r = std::log(actual_prices[n + 1] / actual_prices[n]);
        result.log_returns.push_back(r);
        result.daily_returns.push_back(daily_return(pos, r));
        portfolio_log.push_back(pos * r);
    }

    result.cumulative_portfolio = cumulative_return(result.daily_returns, mode);
    result.cumulative_baseline = baseline_cumulative(result.log_returns, mode);
    try {
        result.sharpe_portfolio = sharpe_ratio(portfolio_log, risk_free_rate);
    } catch (const Error&) {
        result.sharpe_portfolio = std::nullopt;
    }
    try {
        result.sharpe_baseline = sharpe_ratio(result.log_returns, risk_free_rate);
    } catch (const Error&) {
        result.sharpe_baseline = std::nullopt;
    }
    return result;
}

const char* return_mode_name(ReturnMode mode) {
    return mode == ReturnMode::PaperLiteral ? "paper-literal" : "compounded";
}

std::string backtest_report_json(const BacktestResult& result) {
    nlohmann::ordered_json j;
    j["mode"] = return_mode_name(result.mode);
    j["n_days"] = result.n_days;
    j["cumulative_portfolio_literal"] =
        cumulative_return(result.daily_returns, ReturnMode::PaperLiteral);
    j["cumulative_portfolio_compounded"] =
        cumulative_return(result.daily_returns, ReturnMode::Compounded);
    j["cumulative_baseline_literal"] =
        baseline_cumulative(result.log_returns, ReturnMode::PaperLiteral);
    j["cumulative_baseline_compounded"] =
        baseline_cumulative(result.log_returns, ReturnMode::Compounded);
    if (result.sharpe_portfolio)
        j["sharpe_portfolio"] = *result.sharpe_portfolio;
    else
        j["sharpe_portfolio"] = nullptr;
    if (result.sharpe_baseline)
        j["sharpe_baseline"] = *result.sharpe_baseline;
    else
        j["sharpe_baseline"] = nullptr;
    return j.dump(2);
}

void write_backtest_report(const BacktestResult& result, const std::string& path) {
    std::ofstream out(path);
    if (!out.is_open()) throw IoError("cannot write " + path);
    out << backtest_report_json(result) << '\n';
}

void write_daily_csv(const BacktestResult& result, const std::string& path) {
    std::ofstream out(path);
    if (!out.is_open()) throw IoError("cannot write " + path);
    out << "date,deviation,position,daily_return\n";
    char buf[128];
    for (std::size_t i = 0; i < result.daily_returns.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%s,%.17g,%d,%.17g",
                      result.positions.dates[i].c_str(),
                      result.positions.deviations[i],
                      result.positions.positions[i], result.daily_returns[i]);
        out << buf << '\n';
    }
}

} // namespace factorcast
