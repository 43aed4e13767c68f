#include "factorcast/adf.hpp"
#include "factorcast/errors.hpp"
#include "factorcast/ols.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace factorcast {

namespace {

// MacKinnon (1994) response-surface coefficients for the univariate tau
// distribution, one row per regression kind. Below tau_star the quadratic
// small-p polynomial applies, above it the cubic large-p polynomial; the
// polynomial value is mapped through the standard normal CDF.
struct MacKinnonRow {
    double tau_star, tau_min, tau_max;
    double small_p[3];
    double large_p[4];
};

constexpr double kInf = std::numeric_limits<double>::infinity();

constexpr MacKinnonRow kMacKinnon[] = {
    // NoConstant
    {-1.04, -19.04, kInf,
     {0.6344, 1.2378, 0.032496},
     {0.4797, 0.93557, -0.06999, 0.033066}},
    // Constant
    {-1.61, -18.83, 2.74,
     {2.1659, 1.4412, 0.038269},
     {1.7339, 0.93202, -0.12745, -0.010368}},
    // ConstantTrend
    {-2.89, -16.18, 0.70,
     {3.2512, 1.6047, 0.049588},
     {2.5261, 0.61654, -0.37956, -0.060285}},
};

double stdnormal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

int n_deterministic(AdfRegression kind) {
    switch (kind) {
        case AdfRegression::NoConstant: return 0;
        case AdfRegression::Constant: return 1;
        case AdfRegression::ConstantTrend: return 2;
    }
    return 1;
}

// Design matrix for a given lag count over the sample starting at `start`
// in the differenced series: [y_{t-1}, dy_{t-1}..dy_{t-k}, const, trend].
Eigen::MatrixXd build_design(std::span<const double> y,
                             const std::vector<double>& dy,
                             int start, int lags, AdfRegression kind) {
    const int n = static_cast<int>(dy.size()) - start;
    const int k = 1 + lags + n_deterministic(kind);
    Eigen::MatrixXd X(n, k);
    for (int i = 0; i < n; ++i) {
        const int t = start + i; // index into dy; dy[t] = y[t+1] - y[t]
        X(i, 0) = y[t];
        for (int j = 1; j <= lags; ++j) X(i, j) = dy[t - j];
    }
    int col = 1 + lags;
    if (kind != AdfRegression::NoConstant) X.col(col++).setOnes();
    if (kind == AdfRegression::ConstantTrend)
        for (int i = 0; i < n; ++i) X(i, col) = static_cast<double>(i + 1);
    return X;
}

struct Regression {
    double tstat;
    double ssr;
    int n;
    int k;
};

Regression run_regression(std::span<const double> y, const std::vector<double>& dy,
                          int start, int lags, AdfRegression kind) {
    const int n = static_cast<int>(dy.size()) - start;
    Eigen::VectorXd target(n);
    for (int i = 0; i < n; ++i) target(i) = dy[start + i];
    const Eigen::MatrixXd X = build_design(y, dy, start, lags, kind);
    const OlsFit fit = ols_fit(X, target);
    if (!fit.full_rank || fit.std_errors.size() == 0 || fit.std_errors(0) <= 0.0)
        throw DegenerateRegressionError("adf_test: rank-deficient regression "
                                        "(constant or collinear series?)");
    return {fit.coef(0) / fit.std_errors(0), fit.ssr, fit.n_obs, fit.n_params};
}

} // namespace

double mackinnon_pvalue(double statistic, AdfRegression kind) {
    const MacKinnonRow& row = kMacKinnon[static_cast<int>(kind)];
    if (statistic > row.tau_max) return 1.0;
    if (statistic < row.tau_min) return 0.0;
    double z;
    if (statistic <= row.tau_star) {
        const double* c = row.small_p;
        z = c[0] + statistic * (c[1] + statistic * c[2]);
    } else {
        const double* c = row.large_p;
        z = c[0] + statistic * (c[1] + statistic * (c[2] + statistic * c[3]));
    }
    return stdnormal_cdf(z);
}

const char* adf_regression_name(AdfRegression kind) {
    switch (kind) {
        case AdfRegression::NoConstant: return "no-constant";
        case AdfRegression::Constant: return "constant";
        case AdfRegression::ConstantTrend: return "constant+trend";
    }
    return "?";
}

AdfResult adf_test(std::span<const double> series, int max_lags,
                   bool automatic_lags, AdfRegression kind) {
    const int n = static_cast<int>(series.size());
    for (double v : series)
        if (!std::isfinite(v)) throw DomainError("adf_test: non-finite input");

    if (max_lags < 0) {
        max_lags = static_cast<int>(std::ceil(12.0 * std::pow(n / 100.0, 0.25)));
        max_lags = std::min(max_lags, n / 2 - n_deterministic(kind) - 1);
        max_lags = std::max(max_lags, 0);
    }
    if (n < max_lags + 10)
        throw InsufficientDataError("adf_test: series too short for " +
                                    std::to_string(max_lags) + " lags");

    const double first = series[0];
    if (std::all_of(series.begin(), series.end(),
                    [&](double v) { return v == first; }))
        throw DegenerateRegressionError("adf_test: constant series");

    std::vector<double> dy(n - 1);
    for (int t = 0; t + 1 < n; ++t) dy[t] = series[t + 1] - series[t];

    int lags = max_lags;
    if (automatic_lags) {
        // Candidate lags compete on a common sample (start = max_lags),
        // scored by AIC up to an additive constant: n*log(ssr/n) + 2k.
        double best = std::numeric_limits<double>::infinity();
        int best_lag = 0;
        for (int cand = 0; cand <= max_lags; ++cand) {
            const Regression r = run_regression(series, dy, max_lags, cand, kind);
            const double aic = r.n * std::log(r.ssr / r.n) + 2.0 * r.k;
            if (aic < best) {
                best = aic;
                best_lag = cand;
            }
        }
        lags = best_lag;
    }

    // Final fit on the longest sample available for the chosen lag count.
    const Regression r = run_regression(series, dy, lags, lags, kind);
    AdfResult out;
    out.statistic = r.tstat;
    out.p_value = mackinnon_pvalue(r.tstat, kind);
    out.lags_used = lags;
    out.n_obs = r.n;
    out.regression_kind = kind;
    return out;
}

} // namespace factorcast
