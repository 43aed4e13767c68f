// timeseries.hpp
// Price ingestion, calendar alignment, gap interpolation, windowing and
// chronological splitting. All types are immutable after construction;
// the operations are pure functions.

#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

namespace factorcast {

// Validates "YYYY-MM-DD" (basic calendar rules, no timezone handling).
bool is_valid_date(const std::string& date);

// One ticker's dated close-price sequence. Dates are strictly increasing
// ISO-8601 strings; close entries may be gaps (std::nullopt) until the
// series has been through align_and_interpolate.
struct PriceSeries {
    std::string ticker;
    std::vector<std::string> dates;
    std::vector<std::optional<double>> close;

    std::size_t size() const { return dates.size(); }
    bool has_gaps() const;
};

// Date-aligned, gap-free matrix of N series over T days.
struct AlignedPanel {
    std::vector<std::string> dates;   // T, ascending
    std::vector<std::string> tickers; // N
    Eigen::MatrixXd values;           // T x N, all finite
    int target_index = 0;             // column of the prediction target

    std::size_t days() const { return dates.size(); }
    std::size_t width() const { return tickers.size(); }
    int column_of(const std::string& ticker) const; // -1 if absent
};

// Supervised samples: each input is an L x p slice of consecutive days,
// the target is the next day's target-column price.
struct WindowedDataset {
    std::vector<Eigen::MatrixXd> inputs; // each L x p
    std::vector<double> targets;
    std::vector<std::string> sample_dates; // date of each target

    std::size_t size() const { return inputs.size(); }
};

enum class CalendarPolicy { Intersection, Union };

// Reads a CSV with Date and Close columns (extra columns ignored, row
// order irrelevant). Cells "null", "NaN" or empty become gaps; any
// other unparseable Close cell is also treated as a gap.
PriceSeries load_csv(const std::string& path);

// Inverse of load_csv: two-column Date,Close file; gaps written as "null".
void write_csv(const PriceSeries& series, const std::string& path);

// Aligns series on the chosen calendar and fills every gap: interior gaps
// by linear interpolation between nearest observed neighbors, leading and
// trailing gaps by nearest-observation carry.
AlignedPanel align_and_interpolate(const std::vector<PriceSeries>& series,
                                   CalendarPolicy policy = CalendarPolicy::Intersection,
                                   const std::string& target_ticker = "");

// Element n is ln(P_{n+1} / P_n) for the given column; length T - 1.
std::vector<double> log_returns(const AlignedPanel& panel, int column);

// Builds T - window_len samples over the given feature columns.
WindowedDataset make_windows(const AlignedPanel& panel,
                             const std::vector<int>& feature_columns,
                             int window_len = 5);

// Chronological split: |train| = floor(train_fraction * total), train
// strictly precedes test. Errors if either side would be empty.
std::pair<WindowedDataset, WindowedDataset>
chrono_split(const WindowedDataset& dataset, double train_fraction);

} // namespace factorcast
