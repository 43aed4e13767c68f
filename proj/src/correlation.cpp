#include "factorcast/correlation.hpp"
#include "factorcast/errors.hpp"

#include <cmath>

namespace factorcast {

double pearson_correlation(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size())
        throw ShapeError("pearson_correlation: lengths differ");
    const std::size_t n = x.size();
    if (n < 2) throw DomainError("pearson_correlation: need at least 2 points");

    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(x[i]) || !std::isfinite(y[i]))
            throw DomainError("pearson_correlation: non-finite input");
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);

    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0)
        throw UndefinedStatError("pearson_correlation: zero-variance input");
    return sxy / (std::sqrt(sxx) * std::sqrt(syy));
}

} // namespace factorcast
