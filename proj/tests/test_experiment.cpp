#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "factorcast/errors.hpp"
#include "factorcast/experiment.hpp"

#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>

#include "test_util.hpp"

using namespace factorcast;
namespace fs = std::filesystem;

namespace {

const std::string kFixtureDir = FIXTURE_DATA_DIR;

std::string temp_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir.string();
}

std::string write_config(const std::string& dir, const std::string& extra = "") {
    const std::string path = dir + "/exp.ini";
    std::ofstream out(path);
    out << "[data]\n"
        << "dir = " << kFixtureDir << "\n"
        << "target = SPX\n"
        << "candidates = COIN1, COIN2, RW1, RW2, RW3, RW4\n"
        << "[selection]\n"
        << "method = cointegration\n"
        << "k = 2\n"
        << "[model]\n"
        << "architecture = gru\n"
        << "hidden_size = 8\n"
        << "epochs = 15\n"
        << "seed = 11\n"
        << "[split]\n"
        << "train_fraction = 0.8\n"
        << "[output]\n"
        << "dir = " << dir << "/out\n"
        << extra;
    return path;
}

} // namespace

TEST_CASE("config parsing picks up values and defaults") {
    const std::string dir = temp_dir("fc_cfg");
    const std::string path = write_config(dir);
    const ExperimentConfig c = load_experiment_config(path);
    CHECK(c.target_ticker == "SPX");
    REQUIRE(c.candidate_tickers.size() == 6);
    CHECK(c.candidate_tickers[0] == "COIN1");
    CHECK(c.selection_method == SelectionMethod::Cointegration);
    CHECK(c.selection_k == 2);
    CHECK(c.model.architecture == Architecture::Gru);
    CHECK(c.model.epochs == 15);
    CHECK(c.model.seed == 11);
    // defaults
    CHECK(c.model.window_len == 5);
    CHECK(c.model.batch_size == 32);
    CHECK(c.model.learning_rate == doctest::Approx(1e-3));
    CHECK(c.lag_order == 1);
    CHECK(c.threshold == doctest::Approx(0.03));
    CHECK(c.mode == ReturnMode::Compounded);
    CHECK(c.train_fraction == doctest::Approx(0.8));
    CHECK_NOTHROW(c.validate());
}

TEST_CASE("config validation failures") {
    const std::string dir = temp_dir("fc_cfg_bad");
    {
        const std::string path = dir + "/bad1.ini";
        std::ofstream out(path);
        out << "[data]\ndir = " << kFixtureDir
            << "\ntarget = SPX\ncandidates = SPX, COIN1\n";
        out.close();
        CHECK_THROWS_AS(load_experiment_config(path).validate(), ConfigError);
    }
    {
        const std::string path = dir + "/bad3.ini";
        std::ofstream(path) << "[data\n";
        CHECK_THROWS_AS(load_experiment_config(path), ConfigError);
    }
}

TEST_CASE("a missing csv surfaces as an ingest-stage error naming the path") {
    const std::string dir = temp_dir("fc_ingest");
    ExperimentConfig c = load_experiment_config(write_config(dir));
    c.candidate_tickers.push_back("GHOST");
    try {
        run_experiment(c);
        FAIL("expected StageError");
    } catch (const StageError& e) {
        CHECK(e.stage() == "ingest");
        CHECK(std::string(e.what()).find("GHOST") != std::string::npos);
    }
}

TEST_CASE("run_experiment propagates stage failures") {
    const std::string dir = temp_dir("fc_stagefail");
    ExperimentConfig c = load_experiment_config(write_config(dir));
    c.selection_k = 7; // more than the 6 candidates
    try {
        run_experiment(c);
        FAIL("expected StageError");
    } catch (const StageError& e) {
        CHECK(e.stage() == "select");
    }
}

TEST_CASE("cell specs and the paper grid") {
    const GridCell cell = parse_cell_spec("cointegration:quantile:gru");
    CHECK(cell.label() == "Cointegration+Quantile+GRU");
    CHECK_THROWS_AS(parse_cell_spec("nope"), ConfigError);
    CHECK_THROWS_AS(parse_cell_spec("all:nope:gru"), ConfigError);

    const auto cells = paper_grid_cells();
    REQUIRE(cells.size() == 12);
    CHECK(cells.front().label() == "All+Quantile+LSTM");
    CHECK(cells.back().label() == "Cointegration+RMSE+GRU");
}

TEST_CASE("run_experiment writes the full artifact set") {
    const std::string dir = temp_dir("fc_run");
    const ExperimentConfig c = load_experiment_config(write_config(dir));
    const GridRow row = run_experiment(c);
    INFO(row.error);
    REQUIRE(row.ok);
    CHECK(std::isfinite(row.cumulative_literal));
    CHECK(std::isfinite(row.cumulative_compounded));
    for (const char* name : {"selection.json", "forecaster.txt", "forecast.csv",
                             "backtest.json", "daily.csv"})
        CHECK(fs::exists(fs::path(c.output_dir) / name));

    const auto selection = nlohmann::json::parse(
        testutil::read_file(c.output_dir + "/selection.json"));
    CHECK(selection["method"] == "cointegration");
    CHECK(selection["chosen"].size() == 2);

    const TrainedForecaster model = load_forecaster(c.output_dir + "/forecaster.txt");
    CHECK(model.config.input_size == 3); // 2 chosen companions + target
}

TEST_CASE("panel date-range filter applies before alignment") {
    const std::string dir = temp_dir("fc_range");
    ExperimentConfig c = load_experiment_config(write_config(dir));
    c.date_start = "2021-03-01";
    c.date_end = "2021-06-30";
    const AlignedPanel panel = load_panel(c);
    CHECK(panel.dates.front() >= "2021-03-01");
    CHECK(panel.dates.back() <= "2021-06-30");
    CHECK(panel.tickers[panel.target_index] == "SPX");
}

TEST_CASE("grid runs cells independently and deterministically") {
    const std::string dir = temp_dir("fc_grid");
    const ExperimentConfig c = load_experiment_config(write_config(dir));
    const std::vector<GridCell> cells = {parse_cell_spec("all:rmse:rnn"),
                                         parse_cell_spec("correlation:quantile:gru")};
    const GridReport a = run_grid(c, cells, 2);
    REQUIRE(a.rows.size() == 2);
    CHECK(a.rows[0].cell.label() == "All+RMSE+RNN");
    CHECK(a.rows[1].cell.label() == "Correlation+Quantile+GRU");
    for (const auto& row : a.rows) {
        INFO(row.error);
        CHECK(row.ok);
    }

    const GridReport b = run_grid(c, cells, 1);
    CHECK(grid_report_text(a) == grid_report_text(b)); // worker count invisible

    const std::string text = grid_report_text(a);
    CHECK(text.find("# seed: 11") != std::string::npos);
    CHECK(text.find("All+RMSE+RNN") == std::string::npos); // TSV columns, not labels
    CHECK(text.find("All\tRMSE\tRNN") != std::string::npos);
}

TEST_CASE("a failing cell is reported without aborting the grid") {
    const std::string dir = temp_dir("fc_gridfail");
    ExperimentConfig c = load_experiment_config(write_config(dir));
    c.selection_k = 6; // correlation needs k <= candidates; make one cell fail
    const std::vector<GridCell> cells = {parse_cell_spec("correlation:rmse:gru"),
                                         parse_cell_spec("all:rmse:gru")};
    ExperimentConfig tight = c;
    tight.selection_k = 7; // more than the 6 candidates
    const GridReport report = run_grid(tight, cells, 2);
    REQUIRE(report.rows.size() == 2);
    CHECK_FALSE(report.rows[0].ok);
    CHECK(report.rows[0].error.find("select") != std::string::npos);
    CHECK(report.rows[1].ok);
    const std::string text = grid_report_text(report);
    CHECK(text.find("failed:") != std::string::npos);
}

TEST_CASE("stattest table covers every ticker and skips the self-test") {
    const std::string dir = temp_dir("fc_table");
    ExperimentConfig c = load_experiment_config(write_config(dir));
    const AlignedPanel panel = load_panel(c);
    const std::string table = stattest_table(panel, 1, JohansenDet::RestrictedConstant);
    CHECK(std::count(table.begin(), table.end(), '\n') ==
          1 + static_cast<long>(panel.width()));
    // the target row carries no cointegration columns
    std::istringstream lines(table);
    std::string line;
    std::getline(lines, line); // header
    bool saw_target = false;
    while (std::getline(lines, line)) {
        if (line.rfind("SPX\t", 0) == 0) {
            saw_target = true;
            CHECK(line.find("\t-\t-") != std::string::npos);
        }
    }
    CHECK(saw_target);
}
