// experiment.hpp
// Configuration-driven experiment runner: single pipeline cells
// (load -> align -> select -> window -> split -> train -> predict ->
// backtest) and the selection x loss x architecture grid.

#pragma once

#include "factorcast/backtest.hpp"
#include "factorcast/model.hpp"
#include "factorcast/selection.hpp"
#include "factorcast/timeseries.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace factorcast {

inline constexpr const char* kVersion = "0.1.0";

struct ExperimentConfig {
    std::string data_dir;
    std::string target_ticker;
    std::vector<std::string> candidate_tickers;
    std::string date_start, date_end; // empty: unbounded
    CalendarPolicy calendar = CalendarPolicy::Intersection;

    SelectionMethod selection_method = SelectionMethod::Cointegration;
    int selection_k = 5;
    int lag_order = 1;
    JohansenDet johansen_det = JohansenDet::RestrictedConstant;

    ModelConfig model;

    double threshold = 0.03;
    ReturnMode mode = ReturnMode::Compounded;
    double risk_free_rate = 0.0;

    double train_fraction = 0.8;
    std::string output_dir = "out";

    void validate() const; // throws ConfigError
};

// Section/key-value config file, '#' and ';' comments.
ExperimentConfig load_experiment_config(const std::string& path);

struct GridCell {
    SelectionMethod selection = SelectionMethod::All;
    LossConfig::Kind loss = LossConfig::Kind::Quantile;
    Architecture architecture = Architecture::Lstm;

    std::string label() const; // e.g. "Cointegration+Quantile+GRU"
};

struct GridRow {
    GridCell cell;
    bool ok = false;
    std::string error;
    double cumulative_literal = 0.0;
    double cumulative_compounded = 0.0;
    std::optional<double> sharpe;
};

struct GridReport {
    std::vector<GridRow> rows;
    std::uint64_t seed = 0;
    std::string date_start, date_end; // realized panel range
    double train_fraction = 0.8;
    std::string version = kVersion;
};

// "cointegration:quantile:gru" -> GridCell.
GridCell parse_cell_spec(const std::string& spec);

// The 12-cell grid: {all, correlation, cointegration} x {quantile, rmse}
// x {lstm, gru}.
std::vector<GridCell> paper_grid_cells();

// Loads, trims to the configured date range and aligns the configured
// series; the target becomes the panel's target column.
AlignedPanel load_panel(const ExperimentConfig& config);

// Runs one cell against a prepared panel, writing selection.json,
// forecaster.txt, forecast.csv, backtest.json and daily.csv under
// out_dir. Stage failures carry the stage name.
GridRow run_cell(const AlignedPanel& panel, const ExperimentConfig& config,
                 const GridCell& cell, const std::string& out_dir);

// Single-cell experiment using the config's own selection/loss/
// architecture; artifacts go to config.output_dir. Failures propagate
// as StageError with the failing stage attached.
GridRow run_experiment(const ExperimentConfig& config);

// Runs every cell with the same panel, split and seed on a bounded
// worker pool; a failed cell is recorded without aborting the rest.
// workers <= 0 picks a default.
GridReport run_grid(const ExperimentConfig& config,
                    const std::vector<GridCell>& cells, int workers = 0);

// Deterministic report: metadata header plus one TSV row per cell.
std::string grid_report_text(const GridReport& report);
void write_grid_report(const GridReport& report, const std::string& path);

// TSV table of per-ticker ADF p-values and pairwise cointegration
// p-values against the target.
std::string stattest_table(const AlignedPanel& panel, int lag_order,
                           JohansenDet det);

void write_panel_csv(const AlignedPanel& panel, const std::string& path);
void write_forecast_csv(const ForecastSeries& forecast, const std::string& path);

} // namespace factorcast
