// fit.hpp — log-log power-law rate extraction.

#pragma once

#include <cstddef>
#include <vector>

namespace polaron {

struct SlopeFit {
    double slope = 0.0;
    double stderr_slope = 0.0;
    double intercept = 0.0;
    std::size_t n_points = 0;
};

// Least squares on (log x, log y); requires >= 3 strictly positive pairs.
SlopeFit fit_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace polaron
