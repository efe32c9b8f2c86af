#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "pex/core/random.hpp"
#include "pex/core/types.hpp"

namespace pex::sim {

struct CovariateLaw {
  enum class Kind { uniform, normal };
  Kind kind = Kind::normal;
  double a = 0.0;  // uniform: lo, normal: mu
  double b = 1.0;  // uniform: hi, normal: sigma

  static CovariateLaw uniform(double lo, double hi) { return {Kind::uniform, lo, hi}; }
  static CovariateLaw normal(double mu, double sigma) { return {Kind::normal, mu, sigma}; }

  /// Population mean of the component.
  double mean() const { return kind == Kind::uniform ? 0.5 * (a + b) : a; }
};

struct Interaction {
  std::size_t first = 0;
  std::size_t second = 0;
  double coef = 0.0;
};

/// mu(x) = intercept + sum_k linear[k] x_k + sum coef * x_first * x_second
struct Surface {
  double intercept = 0.0;
  std::vector<double> linear;
  std::vector<Interaction> interactions;

  double operator()(std::span<const double> x) const;
};

struct OnlineShift {
  double delta = 0.0;  // additive
  double gamma = 1.0;  // multiplicative, > 0

  double apply(double y) const { return gamma * y + delta; }
};

/// Ground-truth generative model of a randomized experiment.
struct ScenarioSpec {
  int n = 2;
  std::size_t m = 1;
  std::size_t d = 1;
  std::vector<CovariateLaw> covariates;   // d entries
  std::vector<Surface> surfaces;          // (arm - 1) * m + outcome
  std::vector<double> noise_sd;           // m entries
  std::vector<OnlineShift> online_shift;  // m entries
  std::vector<OutcomeSpec> outcomes;      // m entries
  std::uint64_t seed = 0;

  const Surface& surface(int arm, std::size_t outcome) const {
    return surfaces[static_cast<std::size_t>(arm - 1) * m + outcome];
  }

  double mean_outcome(int arm, std::size_t outcome, std::span<const double> x) const {
    return surface(arm, outcome)(x);
  }

  /// True CATE matrix tau*_{i,j}(x) = mu*_{i,j}(x) - mu*_{1,j}(x).
  EffectMatrix true_cate(std::span<const double> x) const;

  /// Throws pex::Error on any broken invariant.
  void validate() const;
};

void draw_covariates(const ScenarioSpec& s, Engine& eng, std::span<double> out);

nlohmann::json to_json(const ScenarioSpec& s);
ScenarioSpec scenario_from_json(const nlohmann::json& j);
ScenarioSpec load_scenario(const std::string& path);

/// n = m = 2 benchmark with sign-heterogeneous effects: arm 2 helps
/// outcome 0 where x_0 is large and hurts outcome 1 there; the two ATEs
/// have opposite signs.
ScenarioSpec benchmark_scenario(std::uint64_t seed = 7);

/// Same covariates and noise as the benchmark but every arm shares the
/// control surfaces, so all treatment effects are zero.
ScenarioSpec null_scenario(std::uint64_t seed = 7);

}  // namespace pex::sim
