#include "factorcast/experiment.hpp"
#include "factorcast/adf.hpp"
#include "factorcast/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;

namespace factorcast {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

using KvMap = std::map<std::pair<std::string, std::string>, std::string>;

KvMap parse_ini(const std::string& path) {
    std::ifstream in(path);
    if (!in.is_open()) throw IoError("cannot open config " + path);
    KvMap kv;
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto pos = line.find_first_of("#;"); pos != std::string::npos)
            line = line.substr(0, pos);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(path + ":" + std::to_string(lineno) + ": bad section");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
        kv[{section, trim(line.substr(0, eq))}] = trim(line.substr(eq + 1));
    }
    return kv;
}

std::string get_or(const KvMap& kv, const std::string& sec, const std::string& key,
                   const std::string& fallback) {
    const auto it = kv.find({sec, key});
    return it == kv.end() ? fallback : it->second;
}

double get_double(const KvMap& kv, const std::string& sec, const std::string& key,
                  double fallback) {
    const auto it = kv.find({sec, key});
    return it == kv.end() ? fallback : std::stod(it->second);
}

int get_int(const KvMap& kv, const std::string& sec, const std::string& key,
            int fallback) {
    const auto it = kv.find({sec, key});
    return it == kv.end() ? fallback : std::stoi(it->second);
}

SelectionMethod selection_from_name(const std::string& name) {
    if (name == "all") return SelectionMethod::All;
    if (name == "correlation") return SelectionMethod::Correlation;
    if (name == "cointegration") return SelectionMethod::Cointegration;
    throw ConfigError("unknown selection method '" + name + "'");
}

JohansenDet johansen_det_from_name(const std::string& name) {
    if (name == "none") return JohansenDet::None;
    if (name == "restricted-constant") return JohansenDet::RestrictedConstant;
    if (name == "unrestricted-constant") return JohansenDet::UnrestrictedConstant;
    throw ConfigError("unknown deterministic case '" + name + "'");
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

// Capitalized labels matching the published table layout.
const char* selection_label(SelectionMethod m) {
    switch (m) {
        case SelectionMethod::All: return "All";
        case SelectionMethod::Correlation: return "Correlation";
        case SelectionMethod::Cointegration: return "Cointegration";
    }
    return "?";
}
const char* loss_label(LossConfig::Kind k) {
    return k == LossConfig::Kind::Quantile ? "Quantile" : "RMSE";
}
const char* arch_label(Architecture a) {
    switch (a) {
        case Architecture::Rnn: return "RNN";
        case Architecture::Lstm: return "LSTM";
        case Architecture::Gru: return "GRU";
    }
    return "?";
}

} // namespace

void ExperimentConfig::validate() const {
    if (data_dir.empty()) throw ConfigError("data dir not set");
    if (target_ticker.empty()) throw ConfigError("target ticker not set");
    if (candidate_tickers.empty()) throw ConfigError("no candidate tickers");
    for (const auto& t : candidate_tickers)
        if (t == target_ticker)
            throw ConfigError("target ticker must not appear among candidates");
    if (!date_start.empty() && !is_valid_date(date_start))
        throw ConfigError("bad start date " + date_start);
    if (!date_end.empty() && !is_valid_date(date_end))
        throw ConfigError("bad end date " + date_end);
    if (selection_k < 1) throw ConfigError("selection k must be >= 1");
    if (lag_order < 0) throw ConfigError("lag order must be >= 0");
    if (!(threshold > 0.0)) throw ConfigError("threshold must be positive");
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw ConfigError("train_fraction must lie in (0, 1)");
    model.validate();
}

ExperimentConfig load_experiment_config(const std::string& path) {
    const KvMap kv = parse_ini(path);
    ExperimentConfig c;
    c.data_dir = get_or(kv, "data", "dir", "");
    // Relative data/output paths resolve against the config file location.
    const fs::path base = fs::path(path).parent_path();
    if (!c.data_dir.empty() && fs::path(c.data_dir).is_relative())
        c.data_dir = (base / c.data_dir).string();
    c.target_ticker = get_or(kv, "data", "target", "");
    c.candidate_tickers = split_list(get_or(kv, "data", "candidates", ""));
    c.date_start = get_or(kv, "data", "start", "");
    c.date_end = get_or(kv, "data", "end", "");
    const std::string cal = get_or(kv, "data", "calendar", "intersection");
    if (cal == "intersection") c.calendar = CalendarPolicy::Intersection;
    else if (cal == "union") c.calendar = CalendarPolicy::Union;
    else throw ConfigError("unknown calendar policy '" + cal + "'");

    c.selection_method = selection_from_name(get_or(kv, "selection", "method", "cointegration"));
    c.selection_k = get_int(kv, "selection", "k", 5);
    c.lag_order = get_int(kv, "selection", "lag_order", 1);
    c.johansen_det = johansen_det_from_name(
        get_or(kv, "selection", "deterministic", "restricted-constant"));

    c.model.architecture = architecture_from_name(get_or(kv, "model", "architecture", "lstm"));
    c.model.hidden_size = get_int(kv, "model", "hidden_size", 16);
    const std::string loss = get_or(kv, "model", "loss", "quantile");
    if (loss == "quantile") c.model.loss.kind = LossConfig::Kind::Quantile;
    else if (loss == "rmse") c.model.loss.kind = LossConfig::Kind::Rmse;
    else throw ConfigError("unknown loss '" + loss + "'");
    if (const auto qs = get_or(kv, "model", "quantiles", ""); !qs.empty()) {
        c.model.loss.quantiles.clear();
        for (const auto& q : split_list(qs)) c.model.loss.quantiles.push_back(std::stod(q));
    }
    c.model.learning_rate = get_double(kv, "model", "learning_rate", 1e-3);
    c.model.epochs = get_int(kv, "model", "epochs", 200);
    c.model.batch_size = get_int(kv, "model", "batch_size", 32);
    c.model.seed = std::stoull(get_or(kv, "model", "seed", "0"));
    c.model.window_len = get_int(kv, "model", "window_len", 5);
    c.model.grad_clip = get_double(kv, "model", "grad_clip", 0.0);

    c.threshold = get_double(kv, "backtest", "threshold", 0.03);
    const std::string mode = get_or(kv, "backtest", "mode", "compounded");
    if (mode == "compounded") c.mode = ReturnMode::Compounded;
    else if (mode == "literal" || mode == "paper-literal") c.mode = ReturnMode::PaperLiteral;
    else throw ConfigError("unknown return mode '" + mode + "'");
    c.risk_free_rate = get_double(kv, "backtest", "risk_free_rate", 0.0);

    c.train_fraction = get_double(kv, "split", "train_fraction", 0.8);
    c.output_dir = get_or(kv, "output", "dir", "out");
    if (fs::path(c.output_dir).is_relative())
        c.output_dir = (base / c.output_dir).string();
    return c;
}

std::string GridCell::label() const {
    return std::string(selection_label(selection)) + "+" + loss_label(loss) + "+" +
           arch_label(architecture);
}

GridCell parse_cell_spec(const std::string& spec) {
    const auto parts = [&] {
        std::vector<std::string> p;
        std::stringstream ss(spec);
        std::string item;
        while (std::getline(ss, item, ':')) p.push_back(trim(item));
        return p;
    }();
    if (parts.size() != 3)
        throw ConfigError("cell spec must be selection:loss:architecture, got '" + spec + "'");
    GridCell cell;
    std::string sel = parts[0], loss = parts[1], arch = parts[2];
    std::transform(sel.begin(), sel.end(), sel.begin(), ::tolower);
    std::transform(loss.begin(), loss.end(), loss.begin(), ::tolower);
    std::transform(arch.begin(), arch.end(), arch.begin(), ::tolower);
    cell.selection = selection_from_name(sel);
    if (loss == "quantile") cell.loss = LossConfig::Kind::Quantile;
    else if (loss == "rmse") cell.loss = LossConfig::Kind::Rmse;
    else throw ConfigError("unknown loss '" + loss + "'");
    cell.architecture = architecture_from_name(arch);
    return cell;
}

std::vector<GridCell> paper_grid_cells() {
    std::vector<GridCell> cells;
    for (auto sel : {SelectionMethod::All, SelectionMethod::Correlation,
                     SelectionMethod::Cointegration})
        for (auto loss : {LossConfig::Kind::Quantile, LossConfig::Kind::Rmse})
            for (auto arch : {Architecture::Lstm, Architecture::Gru})
                cells.push_back({sel, loss, arch});
    return cells;
}

AlignedPanel load_panel(const ExperimentConfig& config) {
    std::vector<PriceSeries> series;
    auto load_one = [&](const std::string& ticker) {
        const std::string path = (fs::path(config.data_dir) / (ticker + ".csv")).string();
        PriceSeries s;
        try {
            s = load_csv(path);
        } catch (const Error& e) {
            throw StageError("ingest", e.what());
        }
        s.ticker = ticker;
        if (!config.date_start.empty() || !config.date_end.empty()) {
            PriceSeries cut;
            cut.ticker = s.ticker;
            for (std::size_t i = 0; i < s.size(); ++i) {
                if (!config.date_start.empty() && s.dates[i] < config.date_start) continue;
                if (!config.date_end.empty() && s.dates[i] > config.date_end) continue;
                cut.dates.push_back(s.dates[i]);
                cut.close.push_back(s.close[i]);
            }
            if (cut.dates.empty())
                throw StageError("ingest", ticker + ": no rows in configured date range");
            s = std::move(cut);
        }
        series.push_back(std::move(s));
    };
    load_one(config.target_ticker);
    for (const auto& t : config.candidate_tickers) load_one(t);
    try {
        return align_and_interpolate(series, config.calendar, config.target_ticker);
    } catch (const Error& e) {
        throw StageError("align", e.what());
    }
}

namespace {

// Selection through backtest for one cell; throws StageError on failure.
GridRow run_cell_impl(const AlignedPanel& panel, const ExperimentConfig& config,
                      const GridCell& cell, const std::string& out_dir) {
    GridRow row;
    row.cell = cell;
    fs::create_directories(out_dir);

    SelectionReport selection;
    try {
        switch (cell.selection) {
            case SelectionMethod::All:
                selection = select_all(panel);
                break;
            case SelectionMethod::Correlation:
                selection = select_by_correlation(panel, config.selection_k);
                break;
            case SelectionMethod::Cointegration:
                selection = select_by_cointegration(panel, config.selection_k,
                                                    config.lag_order,
                                                    config.johansen_det);
                break;
        }
        write_selection_report(selection, out_dir + "/selection.json");
    } catch (const Error& e) {
        throw StageError("select", e.what());
    }

    WindowedDataset train_set, test_set;
    try {
        // The target's own history is always part of the feature set;
        // selection picks its exogenous companions.
        std::vector<int> cols;
        for (const auto& t : selection.chosen) cols.push_back(panel.column_of(t));
        cols.push_back(panel.target_index);
        const WindowedDataset all = make_windows(panel, cols, config.model.window_len);
        std::tie(train_set, test_set) = chrono_split(all, config.train_fraction);
    } catch (const Error& e) {
        throw StageError("window", e.what());
    }

    TrainedForecaster model;
    try {
        ModelConfig mc = config.model;
        mc.architecture = cell.architecture;
        mc.loss.kind = cell.loss;
        mc.input_size = 0; // adopt from the selected features
        model = train(mc, train_set);
        save_forecaster(model, out_dir + "/forecaster.txt");
    } catch (const Error& e) {
        throw StageError("train", e.what());
    }

    ForecastSeries forecast;
    try {
        forecast = predict(model, test_set);
        write_forecast_csv(forecast, out_dir + "/forecast.csv");
    } catch (const Error& e) {
        throw StageError("predict", e.what());
    }

    try {
        const BacktestResult result =
            run_backtest(forecast, forecast.actual, config.threshold, config.mode,
                         config.risk_free_rate);
        write_backtest_report(result, out_dir + "/backtest.json");
        write_daily_csv(result, out_dir + "/daily.csv");
        row.cumulative_literal =
            cumulative_return(result.daily_returns, ReturnMode::PaperLiteral);
        row.cumulative_compounded =
            cumulative_return(result.daily_returns, ReturnMode::Compounded);
        row.sharpe = result.sharpe_portfolio;
    } catch (const Error& e) {
        throw StageError("backtest", e.what());
    }

    row.ok = true;
    return row;
}

} // namespace

GridRow run_cell(const AlignedPanel& panel, const ExperimentConfig& config,
                 const GridCell& cell, const std::string& out_dir) {
    try {
        return run_cell_impl(panel, config, cell, out_dir);
    } catch (const std::exception& e) {
        GridRow row;
        row.cell = cell;
        row.ok = false;
        row.error = e.what();
        return row;
    }
}

GridRow run_experiment(const ExperimentConfig& config) {
    config.validate();
    const AlignedPanel panel = load_panel(config);
    const GridCell cell{config.selection_method, config.model.loss.kind,
                        config.model.architecture};
    return run_cell_impl(panel, config, cell, config.output_dir);
}

GridReport run_grid(const ExperimentConfig& config, const std::vector<GridCell>& cells,
                    int workers) {
    config.validate();
    if (cells.empty()) throw ConfigError("run_grid: no cells requested");
    const AlignedPanel panel = load_panel(config);

    GridReport report;
    report.seed = config.model.seed;
    report.date_start = panel.dates.front();
    report.date_end = panel.dates.back();
    report.train_fraction = config.train_fraction;
    report.rows.resize(cells.size());

    if (workers <= 0) {
        const unsigned hw = std::thread::hardware_concurrency();
        workers = static_cast<int>(std::min<std::size_t>(
            cells.size(), std::max(1u, std::min(hw, 4u))));
    }
    workers = std::min<int>(workers, static_cast<int>(cells.size()));

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cells.size()) break;
            const std::string out_dir =
                (fs::path(config.output_dir) / cells[i].label()).string();
            report.rows[i] = run_cell(panel, config, cells[i], out_dir);
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    return report;
}

std::string grid_report_text(const GridReport& report) {
    std::ostringstream out;
    out << "# factorcast grid report\n";
    out << "# version: " << report.version << '\n';
    out << "# seed: " << report.seed << '\n';
    out << "# dates: " << report.date_start << ".." << report.date_end << '\n';
    out << "# train_fraction: " << fmt(report.train_fraction) << '\n';
    out << "# cells: " << report.rows.size() << '\n';
    out << "selection\tloss\tarchitecture\tcumulative_literal\tcumulative_compounded"
           "\tsharpe\tstatus\n";
    for (const GridRow& row : report.rows) {
        out << selection_label(row.cell.selection) << '\t'
            << loss_label(row.cell.loss) << '\t'
            << arch_label(row.cell.architecture) << '\t';
        if (row.ok) {
            out << fmt(row.cumulative_literal) << '\t'
                << fmt(row.cumulative_compounded) << '\t'
                << (row.sharpe ? fmt(*row.sharpe) : std::string("undefined")) << '\t'
                << "ok\n";
        } else {
            std::string msg = row.error;
            std::replace(msg.begin(), msg.end(), '\t', ' ');
            std::replace(msg.begin(), msg.end(), '\n', ' ');
            out << "-\t-\t-\tfailed: " << msg << '\n';
        }
    }
    return out.str();
}

void write_grid_report(const GridReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out.is_open()) throw IoError("cannot write " + path);
    out << grid_report_text(report);
}

std::string stattest_table(const AlignedPanel& panel, int lag_order, JohansenDet det) {
    std::ostringstream out;
    out << "ticker\tadf_stat\tadf_p\tcoint_trace\tcoint_p\n";
    const auto& v = panel.values;
    std::vector<double> target(v.col(panel.target_index).begin(),
                               v.col(panel.target_index).end());
    for (int c = 0; c < static_cast<int>(panel.width()); ++c) {
        std::vector<double> col(v.col(c).begin(), v.col(c).end());
        out << panel.tickers[c] << '\t';
        try {
            const AdfResult adf = adf_test(col);
            out << fmt(adf.statistic) << '\t' << fmt(adf.p_value) << '\t';
        } catch (const Error&) {
            out << "-\t-\t";
        }
        if (c == panel.target_index) {
            out << "-\t-\n"; // the target is not tested against itself
            continue;
        }
        try {
            const JohansenResult j = johansen_pairwise(target, col, lag_order, det);
            out << fmt(j.trace_stats[0]) << '\t' << fmt(j.p_values[0]) << '\n';
        } catch (const Error&) {
            out << "-\t-\n";
        }
    }
    return out.str();
}

void write_panel_csv(const AlignedPanel& panel, const std::string& path) {
    std::ofstream out(path);
    if (!out.is_open()) throw IoError("cannot write " + path);
    out << "Date";
    for (const auto& t : panel.tickers) out << ',' << t;
    out << '\n';
    char buf[64];
    for (std::size_t i = 0; i < panel.days(); ++i) {
        out << panel.dates[i];
        for (std::size_t c = 0; c < panel.width(); ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", panel.values(i, c));
            out << ',' << buf;
        }
        out << '\n';
    }
}

void write_forecast_csv(const ForecastSeries& forecast, const std::string& path) {
    std::ofstream out(path);
    if (!out.is_open()) throw IoError("cannot write " + path);
    const int Q = forecast.predicted.empty() ? 0
                      : static_cast<int>(forecast.predicted[0].size());
    out << "date,actual,point_estimate";
    for (int j = 0; j < Q; ++j) out << ",predicted_" << j;
    out << '\n';
    char buf[64];
    auto emit = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << ',' << buf;
    };
    for (std::size_t i = 0; i < forecast.size(); ++i) {
        out << forecast.dates[i];
        emit(forecast.actual[i]);
        emit(forecast.point_estimate[i]);
        for (int j = 0; j < Q; ++j) emit(forecast.predicted[i](j));
        out << '\n';
    }
}

} // namespace factorcast
