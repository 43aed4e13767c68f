// backtest.hpp
// Buy-Sell-Hold evaluation of a forecast series: threshold positions,
// daily and cumulative returns against an always-long baseline, and
// unannualized Sharpe ratios.

#pragma once

#include "factorcast/model.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace factorcast {

// PaperLiteral sums the daily return factors; Compounded multiplies them.
enum class ReturnMode { PaperLiteral, Compounded };

struct PositionSeries {
    std::vector<std::string> dates;
    std::vector<int> positions;     // each in {-1, 0, +1}
    std::vector<double> deviations; // predicted fractional move V_D
};

struct BacktestResult {
    PositionSeries positions;
    std::vector<double> log_returns;   // realized target log returns r_n
    std::vector<double> daily_returns; // g_n = exp(position * r_n)
    double cumulative_portfolio = 0.0; // in `mode`
    double cumulative_baseline = 0.0;
    std::optional<double> sharpe_portfolio; // nullopt when undefined
    std::optional<double> sharpe_baseline;
    int n_days = 0;
    ReturnMode mode = ReturnMode::Compounded;
};

// +1 above the band, -1 below, 0 inside (symmetric band around zero).
int position(double v_d, double threshold = 0.03);

// V_D at day n: predicted price for day n over the realized price of day
// n-1, minus one. Defined for days 1..T-1, so the result has T-1 entries.
std::vector<double> deviations(const ForecastSeries& forecast);

double daily_return(int position, double log_return);

double cumulative_return(std::span<const double> daily_returns, ReturnMode mode);

// Always-long counterpart computed from baseline log returns.
double baseline_cumulative(std::span<const double> spy_log_returns, ReturnMode mode);

// (mean - risk_free_rate) / sample standard deviation (n-1 denominator);
// no annualization. Throws UndefinedStatError on zero dispersion.
double sharpe_ratio(std::span<const double> period_returns, double risk_free_rate = 0.0);

// Composes deviations -> positions -> daily returns -> cumulative returns
// and Sharpe ratios. The position for day n uses only the prediction made
// from data through day n-1. actual_prices must align with the forecast.
BacktestResult run_backtest(const ForecastSeries& forecast,
                            std::span<const double> actual_prices,
                            double threshold = 0.03,
                            ReturnMode mode = ReturnMode::Compounded,
                            double risk_free_rate = 0.0);

const char* return_mode_name(ReturnMode mode);

// Report record with both cumulative conventions, clearly labeled.
std::string backtest_report_json(const BacktestResult& result);
void write_backtest_report(const BacktestResult& result, const std::string& path);

// Per-day CSV (date, deviation, position, daily return) for plotting.
void write_daily_csv(const BacktestResult& result, const std::string& path);

} // namespace factorcast
