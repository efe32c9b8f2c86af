#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pex/mopt/pareto.hpp"

namespace pex::mopt {

struct HypervolumeResult {
  double value = 0.0;
  double std_error = 0.0;  // nonzero only for the Monte Carlo path
  bool exact = true;
  std::size_t clipped = 0;  // points that failed to dominate the reference
};

struct HypervolumeOptions {
  std::size_t mc_samples = 200000;  // used when dimension > 3
  std::uint64_t mc_seed = 0x68767631;
  bool warn_on_clip = true;
};

/// Lebesgue measure of the union of boxes [ref, p]. Exact sweep in 2-D,
/// exact slicing in 3-D, Monte Carlo above that.
HypervolumeResult hypervolume(std::span<const Objectives> points, std::span<const double> ref,
                              const HypervolumeOptions& opts = {});

inline double hypervolume_value(std::span<const Objectives> points, std::span<const double> ref) {
  HypervolumeOptions o;
  o.warn_on_clip = false;
  return hypervolume(points, ref, o).value;
}

struct SubsetSelection {
  std::vector<std::size_t> indices;  // ascending indices into the front
  double hypervolume = 0.0;
  bool exhaustive = false;
};

/// Enumeration limit: exhaustive search when C(|front|, k) <= this.
inline constexpr double kExhaustiveSubsetLimit = 1e5;

/// Subset of at most k front points maximizing hypervolume against `ref`.
SubsetSelection subset_select(std::span<const Objectives> front, std::span<const double> ref, std::size_t k);

SubsetSelection subset_select_exhaustive(std::span<const Objectives> front, std::span<const double> ref,
                                         std::size_t k);
SubsetSelection subset_select_greedy(std::span<const Objectives> front, std::span<const double> ref, std::size_t k);

/// Hypervolume lost by removing each point (exclusive contribution).
std::vector<double> hypervolume_contributions(std::span<const Objectives> points, std::span<const double> ref);

/// C(n, k) as a double (saturates at infinity).
double binomial(std::size_t n, std::size_t k);

}  // namespace pex::mopt
