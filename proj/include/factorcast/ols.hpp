// ols.hpp
// Least squares by QR decomposition with rank-deficiency detection.

#pragma once

#include <Eigen/Dense>

namespace factorcast {

struct OlsFit {
    Eigen::VectorXd coef;
    Eigen::VectorXd residuals;
    Eigen::VectorXd std_errors; // conventional OLS standard errors
    double ssr = 0.0;
    int n_obs = 0;
    int n_params = 0;
    bool full_rank = true;
};

// Fits y = X b + e. Rank deficiency is flagged (not thrown) so callers can
// map it onto their own error contracts; relative pivot tolerance 1e-10.
OlsFit ols_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
               bool want_std_errors = true);

// Residuals of each column of Y regressed on X; returns Y unchanged when
// X has no columns.
Eigen::MatrixXd ols_residuals(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y);

} // namespace factorcast
