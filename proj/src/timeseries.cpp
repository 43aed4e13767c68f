#include "factorcast/timeseries.hpp"
#include "factorcast/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

namespace factorcast {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string to_lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return s;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

} // namespace

bool is_valid_date(const std::string& date) {
    if (date.size() != 10 || date[4] != '-' || date[7] != '-') return false;
    for (int i : {0, 1, 2, 3, 5, 6, 8, 9})
        if (!std::isdigit(static_cast<unsigned char>(date[i]))) return false;
    const int y = std::stoi(date.substr(0, 4));
    const int m = std::stoi(date.substr(5, 2));
    const int d = std::stoi(date.substr(8, 2));
    if (m < 1 || m > 12 || d < 1) return false;
    static const int mdays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    int dim = mdays[m - 1];
    if (m == 2 && is_leap(y)) dim = 29;
    return d <= dim;
}

bool PriceSeries::has_gaps() const {
    return std::any_of(close.begin(), close.end(),
                       [](const auto& v) { return !v.has_value(); });
}

int AlignedPanel::column_of(const std::string& ticker) const {
    const auto it = std::find(tickers.begin(), tickers.end(), ticker);
    return it == tickers.end() ? -1 : static_cast<int>(it - tickers.begin());
}

PriceSeries load_csv(const std::string& path) {
    std::ifstream file(path);
    if (!file.is_open()) throw IoError("cannot open " + path);

    std::string line;
    if (!std::getline(file, line)) throw FormatError(path + ": empty file");

    const auto header = split_csv_line(line);
    int date_col = -1, close_col = -1;
    for (std::size_t i = 0; i < header.size(); ++i) {
        const auto name = to_lower(header[i]);
        if (name == "date" && date_col < 0) date_col = static_cast<int>(i);
        if (name == "close" && close_col < 0) close_col = static_cast<int>(i);
    }
    if (date_col < 0 || close_col < 0)
        throw FormatError(path + ": header must contain Date and Close columns");

    std::vector<std::pair<std::string, std::optional<double>>> rows;
    std::size_t parseable = 0;
    while (std::getline(file, line)) {
        if (trim(line).empty()) continue;
        const auto cells = split_csv_line(line);
        if (static_cast<int>(cells.size()) <= std::max(date_col, close_col)) continue;

        std::string date = cells[date_col];
        if (date.size() > 10) date = date.substr(0, 10); // tolerate full ISO timestamps
        if (!is_valid_date(date)) continue;

        const std::string raw = cells[close_col];
        const std::string lowered = to_lower(raw);
        std::optional<double> value;
        if (!raw.empty() && lowered != "null" && lowered != "nan" && lowered != "na") {
            char* end = nullptr;
            const double v = std::strtod(raw.c_str(), &end);
            if (end == raw.c_str() + raw.size() && std::isfinite(v)) value = v;
        }
        if (value) ++parseable;
        rows.emplace_back(std::move(date), value);
    }
    if (parseable == 0) throw EmptyDataError(path + ": no parseable price rows");

    std::stable_sort(rows.begin(), rows.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (rows[i].first == rows[i - 1].first)
            throw FormatError(path + ": duplicate date " + rows[i].first);

    PriceSeries out;
    // Ticker from the file name stem.
    auto slash = path.find_last_of("/\\");
    std::string stem = slash == std::string::npos ? path : path.substr(slash + 1);
    if (auto dot = stem.find_last_of('.'); dot != std::string::npos) stem = stem.substr(0, dot);
    out.ticker = stem;
    out.dates.reserve(rows.size());
    out.close.reserve(rows.size());
    for (auto& [date, value] : rows) {
        out.dates.push_back(std::move(date));
        out.close.push_back(value);
    }
    return out;
}

void write_csv(const PriceSeries& series, const std::string& path) {
    std::ofstream file(path);
    if (!file.is_open()) throw IoError("cannot write " + path);
    file << "Date,Close\n";
    char buf[64];
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (series.close[i]) {
            std::snprintf(buf, sizeof buf, "%.17g", *series.close[i]);
            file << series.dates[i] << ',' << buf << '\n';
        } else {
            file << series.dates[i] << ",null\n";
        }
    }
}

AlignedPanel align_and_interpolate(const std::vector<PriceSeries>& series,
                                   CalendarPolicy policy,
                                   const std::string& target_ticker) {
    if (series.size() < 2)
        throw AlignmentError("alignment needs at least 2 series");

    // Common calendar: intersection or union of each series' date set.
    std::set<std::string> calendar(series[0].dates.begin(), series[0].dates.end());
    for (std::size_t s = 1; s < series.size(); ++s) {
        const std::set<std::string> other(series[s].dates.begin(), series[s].dates.end());
        std::set<std::string> merged;
        if (policy == CalendarPolicy::Intersection) {
            std::set_intersection(calendar.begin(), calendar.end(),
                                  other.begin(), other.end(),
                                  std::inserter(merged, merged.begin()));
        } else {
            std::set_union(calendar.begin(), calendar.end(),
                           other.begin(), other.end(),
                           std::inserter(merged, merged.begin()));
        }
        calendar.swap(merged);
    }
    if (calendar.empty()) throw AlignmentError("series have no overlapping dates");

    AlignedPanel panel;
    panel.dates.assign(calendar.begin(), calendar.end());
    const auto T = static_cast<Eigen::Index>(panel.dates.size());
    const auto N = static_cast<Eigen::Index>(series.size());
    panel.values.resize(T, N);

    for (Eigen::Index s = 0; s < N; ++s) {
        panel.tickers.push_back(series[s].ticker);
        std::unordered_map<std::string, double> observed;
        for (std::size_t i = 0; i < series[s].size(); ++i)
            if (series[s].close[i]) observed.emplace(series[s].dates[i], *series[s].close[i]);
        if (observed.empty())
            throw DegenerateSeriesError(series[s].ticker + ": series is entirely gaps");

        // Mark observations on the panel calendar, then fill gaps:
        // interior linearly, edges by nearest-observation carry.
        std::vector<double> col(T, std::numeric_limits<double>::quiet_NaN());
        for (Eigen::Index t = 0; t < T; ++t)
            if (auto it = observed.find(panel.dates[t]); it != observed.end())
                col[t] = it->second;

        Eigen::Index first = -1, last = -1;
        for (Eigen::Index t = 0; t < T; ++t)
            if (!std::isnan(col[t])) { if (first < 0) first = t; last = t; }
        if (first < 0)
            throw DegenerateSeriesError(series[s].ticker +
                                        ": no observations on the aligned calendar");

        for (Eigen::Index t = 0; t < first; ++t) col[t] = col[first];
        for (Eigen::Index t = last + 1; t < T; ++t) col[t] = col[last];
        Eigen::Index prev = first;
        for (Eigen::Index t = first + 1; t <= last; ++t) {
            if (std::isnan(col[t])) continue;
            for (Eigen::Index g = prev + 1; g < t; ++g) {
                const double w = static_cast<double>(g - prev) / static_cast<double>(t - prev);
                col[g] = col[prev] + w * (col[t] - col[prev]);
            }
            prev = t;
        }
        for (Eigen::Index t = 0; t < T; ++t) panel.values(t, s) = col[t];
    }

    panel.target_index = 0;
    if (!target_ticker.empty()) {
        const int idx = panel.column_of(target_ticker);
        if (idx < 0) throw AlignmentError("target ticker " + target_ticker + " not in panel");
        panel.target_index = idx;
    }
    return panel;
}

std::vector<double> log_returns(const AlignedPanel& panel, int column) {
    if (column < 0 || column >= static_cast<int>(panel.width()))
        throw DomainError("log_returns: column out of range");
    const auto T = static_cast<Eigen::Index>(panel.days());
    std::vector<double> out;
    out.reserve(T > 0 ? T - 1 : 0);
    for (Eigen::Index t = 0; t + 1 < T; ++t) {
        const double p0 = panel.values(t, column);
        const double p1 = panel.values(t + 1, column);
        if (p0 <= 0.0 || p1 <= 0.0)
            throw DomainError("log_returns: non-positive price in column " +
                              panel.tickers[column]);
        out.push_back(std::log(p1 / p0));
    }
    return out;
}

WindowedDataset make_windows(const AlignedPanel& panel,
                             const std::vector<int>& feature_columns,
                             int window_len) {
    if (window_len < 1) throw DomainError("make_windows: window_len must be >= 1");
    if (feature_columns.empty()) throw DomainError("make_windows: no feature columns");
    for (int c : feature_columns)
        if (c < 0 || c >= static_cast<int>(panel.width()))
            throw DomainError("make_windows: feature column out of range");
    const auto T = static_cast<int>(panel.days());
    if (window_len >= T)
        throw InsufficientDataError("make_windows: window_len >= panel length");

    WindowedDataset ds;
    const int p = static_cast<int>(feature_columns.size());
    ds.inputs.reserve(T - window_len);
    for (int d = window_len; d < T; ++d) {
        Eigen::MatrixXd w(window_len, p);
        for (int j = 0; j < p; ++j)
            w.col(j) = panel.values.col(feature_columns[j]).segment(d - window_len, window_len);
        ds.inputs.push_back(std::move(w));
        ds.targets.push_back(panel.values(d, panel.target_index));
        ds.sample_dates.push_back(panel.dates[d]);
    }
    return ds;
}

std::pair<WindowedDataset, WindowedDataset>
chrono_split(const WindowedDataset& dataset, double train_fraction) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw SplitError("train_fraction must lie strictly in (0, 1)");
    const auto total = dataset.size();
    const auto n_train = static_cast<std::size_t>(
        std::floor(train_fraction * static_cast<double>(total)));
    if (n_train == 0 || n_train == total)
        throw SplitError("split leaves an empty side (" + std::to_string(total) +
                         " samples, fraction " + std::to_string(train_fraction) + ")");

    WindowedDataset train, test;
    auto copy_range = [&](WindowedDataset& dst, std::size_t b, std::size_t e) {
        dst.inputs.assign(dataset.inputs.begin() + b, dataset.inputs.begin() + e);
        dst.targets.assign(dataset.targets.begin() + b, dataset.targets.begin() + e);
        dst.sample_dates.assign(dataset.sample_dates.begin() + b,
                                dataset.sample_dates.begin() + e);
    };
    copy_range(train, 0, n_train);
    copy_range(test, n_train, total);
    return {std::move(train), std::move(test)};
}

} // namespace factorcast
