#include "pex/mopt/scalarize.hpp"

#include <algorithm>
#include <cmath>

#include "pex/core/types.hpp"

namespace pex::mopt {

double scalarize(std::span<const double> objectives, std::span<const double> weights, double rho,
                 const Normalization& norm) {
  const std::size_t m = objectives.size();
  if (weights.size() != m || norm.size() != m) throw Error("scalarize: dimension mismatch");
  if (!(rho > 0.0)) throw Error("scalarize: rho must be > 0");
  double weight_sum = 0.0;
  for (double w : weights) weight_sum += w;
  if (std::abs(weight_sum - 1.0) > 1e-9) throw Error("scalarize: weights must sum to 1");
  double worst = -INFINITY;
  double total = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    const auto [lo, hi] = norm[j];
    if (!(hi > lo)) throw Error("scalarize: degenerate normalization range");
    if (weights[j] < 0.0) throw Error("scalarize: weights must be nonnegative");
    const double g = (hi - objectives[j]) / (hi - lo);
    worst = std::max(worst, weights[j] * g);
    total += weights[j] * g;
  }
  return worst + rho * total;
}

Normalization running_normalization(std::span<const std::vector<double>> objectives) {
  if (objectives.empty()) throw Error("running_normalization: no objectives");
  const std::size_t m = objectives.front().size();
  Normalization norm(m, {INFINITY, -INFINITY});
  for (const auto& o : objectives) {
    for (std::size_t j = 0; j < m; ++j) {
      norm[j].first = std::min(norm[j].first, o[j]);
      norm[j].second = std::max(norm[j].second, o[j]);
    }
  }
  for (auto& [lo, hi] : norm) {
    if (!(hi > lo)) hi = lo + 1.0;
  }
  return norm;
}

}  // namespace pex::mopt
