// johansen.hpp
// Bivariate Johansen trace test on a VECM with lagged differences.
// Critical values ship as a checksum-verified plain-text table; p-values
// are log-linear interpolations between the tabulated significance levels.

#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

namespace factorcast {

// Deterministic-term specification of the VECM.
//   None                 - no deterministic terms anywhere
//   RestrictedConstant   - constant inside the cointegrating relation
//   UnrestrictedConstant - constant in the short-run (difference) equations
enum class JohansenDet { None, RestrictedConstant, UnrestrictedConstant };

struct JohansenResult {
    std::vector<double> eigenvalues;         // descending, each in [0, 1)
    std::vector<double> trace_stats;         // one per hypothesized rank r
    std::vector<double> critical_values_95;  // aligned with trace_stats
    std::vector<double> p_values;            // aligned with trace_stats
    int lag_order = 1;
    int n_obs = 0;                           // effective sample of the VECM
    JohansenDet deterministic = JohansenDet::RestrictedConstant;
};

// Trace statistic for rank r is -n * sum_{i>r} ln(1 - lambda_i), with the
// lambda_i the canonical-correlation eigenvalues between the residuals of
// the differenced series and the lagged levels, both regressed on the
// lagged differences.
JohansenResult johansen_pairwise(std::span<const double> y,
                                 std::span<const double> x,
                                 int lag_order = 1,
                                 JohansenDet det = JohansenDet::RestrictedConstant);

// Critical-value table for the trace statistic, keyed by deterministic
// case and common-trend dimension (p - r).
class TraceCriticalTable {
public:
    // Critical value at an exactly tabulated significance level.
    double critical_value(JohansenDet det, int dim, double level) const;

    // Upper-tail p-value: log-linear in the significance level between
    // tabulated critical values, clamped to [0.001, 0.999] outside.
    double p_value(JohansenDet det, int dim, double stat) const;

    static TraceCriticalTable parse(const std::string& text);

private:
    struct Knot { double level; double cv; };
    std::map<std::pair<int, int>, std::vector<Knot>> rows_;
};

// The table embedded in the binary (copy of data/johansen_trace_cv.txt).
const TraceCriticalTable& trace_table();

// Loads the table from a file, verifying the header checksum.
TraceCriticalTable load_trace_table_file(const std::string& path);

const char* johansen_det_name(JohansenDet det);

} // namespace factorcast
