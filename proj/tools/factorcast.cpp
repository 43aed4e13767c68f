// factorcast.cpp
// Command-line front end: data validation, the stationarity/cointegration
// table, factor selection, training, backtesting and the experiment grid.

#include "factorcast/adf.hpp"
#include "factorcast/errors.hpp"
#include "factorcast/experiment.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace factorcast;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir;
    std::string mode;
    std::int64_t seed = -1;
};

ExperimentConfig load_with_overrides(const CommonOpts& opts) {
    ExperimentConfig config = load_experiment_config(opts.config_path);
    if (!opts.out_dir.empty()) config.output_dir = opts.out_dir;
    if (opts.seed >= 0) config.model.seed = static_cast<std::uint64_t>(opts.seed);
    if (!opts.mode.empty()) {
        if (opts.mode == "literal") config.mode = ReturnMode::PaperLiteral;
        else if (opts.mode == "compounded") config.mode = ReturnMode::Compounded;
        else throw ConfigError("unknown --mode '" + opts.mode + "'");
    }
    return config;
}

void add_common(CLI::App* cmd, CommonOpts& opts, bool with_mode = true) {
    cmd->add_option("--config", opts.config_path, "experiment config file")->required();
    cmd->add_option("--out", opts.out_dir, "output directory override");
    cmd->add_option("--seed", opts.seed, "seed override");
    if (with_mode)
        cmd->add_option("--mode", opts.mode, "cumulative-return mode: literal|compounded");
}

// A forecast.csv written by the train step: date, actual, point estimate.
ForecastSeries load_forecast_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in.is_open()) throw IoError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw FormatError(path + ": empty file");
    ForecastSeries fc;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string date, actual, point;
        if (!std::getline(ss, date, ',') || !std::getline(ss, actual, ',') ||
            !std::getline(ss, point, ','))
            throw FormatError(path + ": bad row '" + line + "'");
        fc.dates.push_back(date);
        fc.actual.push_back(std::stod(actual));
        fc.point_estimate.push_back(std::stod(point));
        Eigen::VectorXd v(1);
        v(0) = fc.point_estimate.back();
        fc.predicted.push_back(v);
    }
    return fc;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"factor-selected recurrent forecasting and backtesting"};
    app.require_subcommand(1);

    CommonOpts opts;

    auto* ingest = app.add_subcommand("ingest", "validate, align and write the panel");
    add_common(ingest, opts, false);

    auto* test = app.add_subcommand("test", "per-ticker ADF and cointegration table");
    add_common(test, opts, false);

    auto* select = app.add_subcommand("select", "rank and choose input factors");
    add_common(select, opts, false);

    auto* train_cmd = app.add_subcommand("train", "train the configured forecaster");
    add_common(train_cmd, opts, false);

    auto* backtest_cmd = app.add_subcommand("backtest", "evaluate a forecast CSV");
    std::string forecast_path;
    add_common(backtest_cmd, opts);
    backtest_cmd->add_option("--forecast", forecast_path,
                             "forecast CSV (defaults to <out>/forecast.csv)");

    auto* grid = app.add_subcommand("grid", "run the experiment grid");
    std::string cells_spec;
    add_common(grid, opts);
    grid->add_option("--cells", cells_spec,
                     "comma-separated selection:loss:architecture triples "
                     "(default: the 12-cell grid)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (ingest->parsed()) {
            const ExperimentConfig config = load_with_overrides(opts);
            config.validate();
            const AlignedPanel panel = load_panel(config);
            fs::create_directories(config.output_dir);
            const std::string out = config.output_dir + "/panel.csv";
            write_panel_csv(panel, out);
            std::cout << "panel: " << panel.days() << " days x " << panel.width()
                      << " tickers (" << panel.dates.front() << ".."
                      << panel.dates.back() << ") -> " << out << "\n";
        } else if (test->parsed()) {
            const ExperimentConfig config = load_with_overrides(opts);
            config.validate();
            const AlignedPanel panel = load_panel(config);
            const std::string table =
                stattest_table(panel, config.lag_order, config.johansen_det);
            std::cout << table;
            fs::create_directories(config.output_dir);
            std::ofstream(config.output_dir + "/stattests.tsv") << table;
        } else if (select->parsed()) {
            const ExperimentConfig config = load_with_overrides(opts);
            config.validate();
            const AlignedPanel panel = load_panel(config);
            SelectionReport report;
            switch (config.selection_method) {
                case SelectionMethod::All: report = select_all(panel); break;
                case SelectionMethod::Correlation:
                    report = select_by_correlation(panel, config.selection_k);
                    break;
                case SelectionMethod::Cointegration:
                    report = select_by_cointegration(panel, config.selection_k,
                                                     config.lag_order, config.johansen_det);
                    break;
            }
            std::cout << selection_report_json(report) << "\n";
            fs::create_directories(config.output_dir);
            write_selection_report(report, config.output_dir + "/selection.json");
        } else if (train_cmd->parsed()) {
            const ExperimentConfig config = load_with_overrides(opts);
            const GridRow row = run_experiment(config);
            std::cout << row.cell.label() << ": cumulative "
                      << return_mode_name(config.mode) << " "
                      << (config.mode == ReturnMode::Compounded
                              ? row.cumulative_compounded
                              : row.cumulative_literal)
                      << ", artifacts in " << config.output_dir << "\n";
        } else if (backtest_cmd->parsed()) {
            const ExperimentConfig config = load_with_overrides(opts);
            const std::string path = forecast_path.empty()
                                         ? config.output_dir + "/forecast.csv"
                                         : forecast_path;
            const ForecastSeries forecast = load_forecast_csv(path);
            const BacktestResult result =
                run_backtest(forecast, forecast.actual, config.threshold, config.mode,
                             config.risk_free_rate);
            std::cout << backtest_report_json(result) << "\n";
            fs::create_directories(config.output_dir);
            write_backtest_report(result, config.output_dir + "/backtest.json");
            write_daily_csv(result, config.output_dir + "/daily.csv");
        } else if (grid->parsed()) {
            const ExperimentConfig config = load_with_overrides(opts);
            std::vector<GridCell> cells;
            if (cells_spec.empty()) {
                cells = paper_grid_cells();
            } else {
                std::stringstream ss(cells_spec);
                std::string item;
                while (std::getline(ss, item, ','))
                    if (!item.empty()) cells.push_back(parse_cell_spec(item));
            }
            const GridReport report = run_grid(config, cells);
            const std::string text = grid_report_text(report);
            std::cout << text;
            fs::create_directories(config.output_dir);
            write_grid_report(report, config.output_dir + "/grid_report.tsv");
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
