// selection.hpp
// Ranks candidate factors against the panel target and picks the model's
// exogenous companions by one of three strategies.

#pragma once

#include "factorcast/johansen.hpp"
#include "factorcast/timeseries.hpp"

#include <optional>
#include <string>
#include <vector>

namespace factorcast {

enum class SelectionMethod { All, Correlation, Cointegration };

struct RankedFactor {
    std::string ticker;
    std::optional<double> score; // nullopt: undefined (e.g. zero variance)
};

struct SelectionReport {
    SelectionMethod method = SelectionMethod::All;
    std::vector<RankedFactor> ranked;  // sorted by selection preference
    std::vector<std::string> chosen;   // prefix of ranked
    int k = 0;
    std::vector<std::string> excluded; // candidates dropped as collinear

    // "correlation-coefficient", "cointegration-p-value" or "none"
    const char* scores_meaning() const;
};

// Every non-target column, input order preserved.
SelectionReport select_all(const AlignedPanel& panel);

// Pearson correlation of each candidate against the target on price
// levels; ranked descending, ties broken by input order. Zero-variance
// candidates rank last with an undefined score.
SelectionReport select_by_correlation(const AlignedPanel& panel, int k);

// Pairwise Johansen rank-0 trace p-value of (target, candidate); ranked
// ascending, ties broken by input order. Collinear candidates are
// excluded and listed in the report.
SelectionReport select_by_cointegration(const AlignedPanel& panel, int k,
                                        int lag_order = 1,
                                        JohansenDet det = JohansenDet::RestrictedConstant);

const char* selection_method_name(SelectionMethod method);

std::string selection_report_json(const SelectionReport& report);
void write_selection_report(const SelectionReport& report, const std::string& path);

} // namespace factorcast
