#pragma once

#include <span>
#include <utility>
#include <vector>

namespace pex::mopt {

/// Per-objective (lo, hi) used to normalize before scalarizing.
using Normalization = std::vector<std::pair<double, double>>;

/// Augmented Chebyshev scalarization of larger-is-better objectives on
/// normalized losses g_j = (hi_j - f_j) / (hi_j - lo_j):
/// s = max_j w_j g_j + rho * sum_j w_j g_j. Smaller is better.
double scalarize(std::span<const double> objectives, std::span<const double> weights, double rho,
                 const Normalization& norm);

/// Running min/max of each objective; degenerate ranges widened to 1.
Normalization running_normalization(std::span<const std::vector<double>> objectives);

}  // namespace pex::mopt
