#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pex/core/types.hpp"
#include "pex/ope/ope.hpp"
#include "pex/policy/policy.hpp"

namespace pex::mopt {

using Objectives = std::vector<double>;

/// A policy with its per-outcome estimates. Objectives are oriented so
/// that larger is better (minimized outcomes are negated).
struct ParetoPoint {
  policy::PolicyParams params;
  Objectives objectives;
  ope::PolicyValueEstimate estimate;
  int iteration = 0;
  std::string origin;  // "single_arm", "initial", "search", "online", ...
};

struct FrontSet {
  std::vector<ParetoPoint> points;
  Objectives reference_point;
};

/// Raw outcome values -> larger-is-better objectives.
Objectives orient(std::span<const double> values, std::span<const OutcomeSpec> specs);

/// a >= b componentwise with at least one strict inequality.
bool dominates(std::span<const double> a, std::span<const double> b);

/// Indices of the non-dominated points, in input order. Points with
/// identical objectives are kept once (the first occurrence).
std::vector<std::size_t> pareto_indices(std::span<const Objectives> objectives);

std::vector<ParetoPoint> pareto_front(const std::vector<ParetoPoint>& points);

/// Componentwise minimum minus 10% of the componentwise range (a unit
/// offset scaled by max(1, |min|) is used when the range is zero).
Objectives reference_from(std::span<const Objectives> objectives);

std::vector<Objectives> objectives_of(const std::vector<ParetoPoint>& points);

}  // namespace pex::mopt
