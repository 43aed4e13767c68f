// adf.hpp
// Augmented Dickey-Fuller unit-root test with MacKinnon p-values.

#pragma once

#include <span>
#include <vector>

namespace factorcast {

enum class AdfRegression { NoConstant, Constant, ConstantTrend };

struct AdfResult {
    double statistic = 0.0;     // t-ratio on the lagged-level coefficient
    double p_value = 1.0;
    int lags_used = 0;
    int n_obs = 0;              // effective regression sample, len - lags - 1
    AdfRegression regression_kind = AdfRegression::Constant;
};

// Fits dy_t = c + g*y_{t-1} + sum_i b_i*dy_{t-i} + e_t (c and trend per
// regression kind) and returns the t-statistic on g with its MacKinnon
// response-surface p-value.
//
// max_lags < 0 selects the Schwert heuristic ceil(12*(n/100)^0.25).
// With automatic_lags the lag count in [0, max_lags] minimizing AIC is
// chosen on a common sample, then the final regression is refit on the
// longest sample available for that lag.
AdfResult adf_test(std::span<const double> series,
                   int max_lags = -1,
                   bool automatic_lags = true,
                   AdfRegression kind = AdfRegression::Constant);

// MacKinnon (1994) approximation of the ADF tau distribution CDF.
double mackinnon_pvalue(double statistic, AdfRegression kind);

const char* adf_regression_name(AdfRegression kind);

} // namespace factorcast
