#include "factorcast/selection.hpp"
#include "factorcast/correlation.hpp"
#include "factorcast/errors.hpp"

#include <algorithm>
#include <fstream>
#include <nlohmann/json.hpp>

namespace factorcast {

namespace {

std::vector<int> candidate_columns(const AlignedPanel& panel) {
    std::vector<int> cols;
    for (int c = 0; c < static_cast<int>(panel.width()); ++c)
        if (c != panel.target_index) cols.push_back(c);
    return cols;
}

std::vector<double> column_vector(const AlignedPanel& panel, int col) {
    const auto& v = panel.values.col(col);
    return {v.begin(), v.end()};
}

} // namespace

const char* SelectionReport::scores_meaning() const {
    switch (method) {
        case SelectionMethod::All: return "none";
        case SelectionMethod::Correlation: return "correlation-coefficient";
        case SelectionMethod::Cointegration: return "cointegration-p-value";
    }
    return "none";
}

const char* selection_method_name(SelectionMethod method) {
    switch (method) {
        case SelectionMethod::All: return "all";
        case SelectionMethod::Correlation: return "correlation";
        case SelectionMethod::Cointegration: return "cointegration";
    }
    return "?";
}

SelectionReport select_all(const AlignedPanel& panel) {
    SelectionReport report;
    report.method = SelectionMethod::All;
    for (int c : candidate_columns(panel)) {
        report.ranked.push_back({panel.tickers[c], std::nullopt});
        report.chosen.push_back(panel.tickers[c]);
    }
    report.k = static_cast<int>(report.chosen.size());
    return report;
}

SelectionReport select_by_correlation(const AlignedPanel& panel, int k) {
    const auto cols = candidate_columns(panel);
    if (k < 1) throw DomainError("select_by_correlation: k must be >= 1");
    if (k > static_cast<int>(cols.size()))
        throw InsufficientCandidatesError("select_by_correlation: k exceeds candidate count");

    const auto target = column_vector(panel, panel.target_index);
    SelectionReport report;
    report.method = SelectionMethod::Correlation;
    report.k = k;
    for (int c : cols) {
        std::optional<double> score;
        try {
            score = pearson_correlation(target, column_vector(panel, c));
        } catch (const UndefinedStatError&) {
            // zero-variance candidate: keep it, flagged as unscored
        }
        report.ranked.push_back({panel.tickers[c], score});
    }
    std::stable_sort(report.ranked.begin(), report.ranked.end(),
                     [](const RankedFactor& a, const RankedFactor& b) {
                         if (a.score.has_value() != b.score.has_value())
                             return a.score.has_value(); // undefined scores last
                         if (!a.score) return false;
                         return *a.score > *b.score;
                     });
    for (int i = 0; i < k; ++i) report.chosen.push_back(report.ranked[i].ticker);
    return report;
}

SelectionReport select_by_cointegration(const AlignedPanel& panel, int k,
                                        int lag_order, JohansenDet det) {
    const auto cols = candidate_columns(panel);
    if (k < 1) throw DomainError("select_by_cointegration: k must be >= 1");

    const auto target = column_vector(panel, panel.target_index);
    SelectionReport report;
    report.method = SelectionMethod::Cointegration;
    report.k = k;
    for (int c : cols) {
        try {
            const JohansenResult res =
                johansen_pairwise(target, column_vector(panel, c), lag_order, det);
            report.ranked.push_back({panel.tickers[c], res.p_values[0]});
        } catch (const SingularMatrixError&) {
            report.excluded.push_back(panel.tickers[c]);
        }
    }
    if (static_cast<int>(report.ranked.size()) < k)
        throw InsufficientCandidatesError(
            "select_by_cointegration: only " + std::to_string(report.ranked.size()) +
            " rankable candidates for k=" + std::to_string(k));

    std::stable_sort(report.ranked.begin(), report.ranked.end(),
                     [](const RankedFactor& a, const RankedFactor& b) {
                         return *a.score < *b.score;
                     });
    for (int i = 0; i < k; ++i) report.chosen.push_back(report.ranked[i].ticker);
    return report;
}

std::string selection_report_json(const SelectionReport& report) {
    nlohmann::ordered_json j;
    j["method"] = selection_method_name(report.method);
    j["scores_meaning"] = report.scores_meaning();
    j["k"] = report.k;
    auto& ranked = j["ranked"] = nlohmann::ordered_json::array();
    for (const auto& r : report.ranked) {
        nlohmann::ordered_json item;
        item["ticker"] = r.ticker;
        if (r.score)
            item["score"] = *r.score;
        else
            item["score"] = nullptr;
        ranked.push_back(std::move(item));
    }
    j["chosen"] = report.chosen;
    j["excluded"] = report.excluded;
    return j.dump(2);
}

void write_selection_report(const SelectionReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out.is_open()) throw IoError("cannot write " + path);
    out << selection_report_json(report) << '\n';
}

} // namespace factorcast
