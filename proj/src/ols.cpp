#include "factorcast/ols.hpp"

namespace factorcast {

OlsFit ols_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
               bool want_std_errors) {
    OlsFit fit;
    fit.n_obs = static_cast<int>(X.rows());
    fit.n_params = static_cast<int>(X.cols());

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    qr.setThreshold(1e-10);
    fit.full_rank = qr.rank() == X.cols();
    fit.coef = qr.solve(y);
    fit.residuals = y - X * fit.coef;
    fit.ssr = fit.residuals.squaredNorm();

    if (want_std_errors && fit.full_rank && fit.n_obs > fit.n_params) {
        const double sigma2 = fit.ssr / (fit.n_obs - fit.n_params);
        // (X'X)^-1 from the pivoted QR factors.
        const Eigen::MatrixXd R = qr.matrixR()
                                      .topLeftCorner(X.cols(), X.cols())
                                      .triangularView<Eigen::Upper>();
        const Eigen::MatrixXd Rinv =
            R.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(X.cols(), X.cols()));
        Eigen::MatrixXd XtX_inv = Rinv * Rinv.transpose();
        XtX_inv = qr.colsPermutation() * XtX_inv * qr.colsPermutation().transpose();
        fit.std_errors = (sigma2 * XtX_inv.diagonal().array()).sqrt().matrix();
    }
    return fit;
}

Eigen::MatrixXd ols_residuals(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y) {
    if (X.cols() == 0) return Y;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    qr.setThreshold(1e-10);
    return Y - X * qr.solve(Y);
}

} // namespace factorcast
