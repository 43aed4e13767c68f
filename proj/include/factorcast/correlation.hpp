// correlation.hpp

#pragma once

#include <span>

namespace factorcast {

// Pearson correlation coefficient in [-1, 1]. Throws UndefinedStatError
// when either input has zero variance.
double pearson_correlation(std::span<const double> x, std::span<const double> y);

} // namespace factorcast
