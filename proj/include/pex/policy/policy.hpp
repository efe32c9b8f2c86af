#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <json.hpp>

#include "pex/core/types.hpp"

namespace pex::policy {

/// Linear-utility policy: u_i = b_i + sum_j w_j tau_{i,j}, pick argmax.
struct PolicyParams {
  std::vector<double> weights;  // one per outcome
  std::vector<double> biases;   // one per arm; biases[0] is the control arm

  friend bool operator==(const PolicyParams&, const PolicyParams&) = default;
};

/// Shrinkage form: tau is pulled toward the ATE by alpha_j in [0,1].
struct RegularizedParams {
  std::vector<double> weights;
  std::vector<double> alphas;
};

struct RepresentabilityResult {
  bool representable = false;
  std::vector<double> coefficients;  // conical coefficients, one per outcome (0 for excluded columns)
  RegularizedParams recovered;       // filled when representable
  double residual = 0.0;
};

std::vector<double> utility(const PolicyParams& params, const EffectMatrix& tau);

/// Argmax arm id of the utilities; ties go to the lowest arm id.
int decide(const PolicyParams& params, const EffectMatrix& tau);

/// Scale so |w_0| = 1 and shift so b_0 = 0. Decisions are unchanged.
/// Requires w_0 != 0 with sign matching directions[0].
PolicyParams canonicalize(const PolicyParams& params, std::span<const Direction> directions);

bool is_canonical(const PolicyParams& params, Direction first_outcome);

/// Utilities under the shrinkage form:
/// u_i = sum_j w_j (alpha_j ATE_{i,j} + (1 - alpha_j) tau_{i,j}).
std::vector<double> regularized_utility(const RegularizedParams& reg, const AteMatrix& ate, const EffectMatrix& tau);

/// Equivalent weight/bias policy: w'_j = w_j (1 - alpha_j),
/// b'_i = sum_j w_j alpha_j ATE_{i,j}.
PolicyParams from_regularized(const RegularizedParams& reg, const AteMatrix& ate);

/// Tests whether canonical `params` has an equivalent shrinkage form, i.e.
/// whether b' lies in the cone spanned by sgn(w'_j) * ATE column j over
/// columns with w'_j != 0. `tolerance` is relative to ||b'|| (absolute
/// when b' = 0).
RepresentabilityResult representable_as_regularized(const PolicyParams& params, const AteMatrix& ate,
                                                    double tolerance = 1e-8);

// Canonical policies have n + m - 2 free entries, laid out as
// [w_1 .. w_{m-1}, b_1 .. b_{n-1}] (0-based indices into weights/biases).
std::size_t free_parameter_count(int n, std::size_t m);
std::vector<double> free_parameters(const PolicyParams& canonical);
PolicyParams from_free_parameters(std::span<const double> theta, int n, std::size_t m, Direction first_outcome);

/// Canonical policy that sends everyone to `arm`: zero free weights, bias
/// `margin` on the arm (or -margin on every other arm when arm is control).
PolicyParams single_arm_policy(int arm, int n, std::size_t m, Direction first_outcome, double margin);

nlohmann::json to_json(const PolicyParams& p);
PolicyParams policy_from_json(const nlohmann::json& j);

}  // namespace pex::policy
