#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "pex/core/types.hpp"
#include "pex/sim/scenario.hpp"

namespace pex::sim {

/// Maps one unit's covariates to a 1-based arm id.
using AssignmentFn = std::function<int(std::span<const double>)>;

/// Uniformly randomized log: arm ~ U{1..n}, propensity 1/n,
/// y_j = mu*_{arm,j}(x) + noise_sd_j * z.
LogDataset generate_log(const ScenarioSpec& s, std::size_t count, std::uint64_t seed);

struct OracleValue {
  std::vector<double> values;     // per outcome
  std::vector<double> std_error;  // Monte Carlo standard error per outcome
};

/// Expected noiseless outcome under `policy`, by Monte Carlo over fresh
/// covariate draws.
OracleValue oracle_policy_value(const ScenarioSpec& s, const AssignmentFn& policy, std::size_t samples,
                                std::uint64_t seed);

struct CandidateMeasurement {
  std::vector<double> mean;
  std::vector<double> std_error;
  std::size_t count = 0;
};

struct OnlineRunResult {
  std::vector<CandidateMeasurement> candidates;
  LogDataset log;                         // online outcomes; propensity 1 (deterministic per candidate)
  std::vector<std::size_t> candidate_of_unit;
};

/// Each unit picks a candidate uniformly at random, which picks the arm.
/// Measured outcome = gamma_j * (mu* + noise) + delta_j.
OnlineRunResult run_online(const ScenarioSpec& s, const std::vector<AssignmentFn>& candidates, std::size_t count,
                           std::uint64_t seed);

/// Online (shifted, noisy) outcome for one unit already assigned to `arm`.
std::vector<double> draw_online_outcomes(const ScenarioSpec& s, int arm, std::span<const double> x, Engine& eng);

}  // namespace pex::sim
