#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pex/core/types.hpp"
#include "pex/hte/cate.hpp"
#include "pex/mopt/pareto.hpp"
#include "pex/ope/ope.hpp"
#include "pex/sim/scenario.hpp"
#include "pex/sim/simulator.hpp"

namespace pex::mopt {

/// Closed intervals over the canonical free parameters
/// [w_1 .. w_{m-1}, b_1 .. b_{n-1}]. A zero-width interval pins that
/// parameter (e.g. all biases at 0 for a weights-only search).
struct SearchBounds {
  std::vector<double> lo;
  std::vector<double> hi;

  std::size_t size() const { return lo.size(); }
  /// Indices whose interval has positive width.
  std::vector<std::size_t> free_dims() const;
  void validate() const;
};

inline constexpr double kDefaultWeightBound = 5.0;
inline constexpr double kBiasBoundPerAte = 3.0;

/// Weights in [-5, 5]; biases in [-B, B] with B = 3 max |ATE| (B = 1 when
/// every ATE is zero). `with_biases = false` pins the biases at 0.
SearchBounds default_bounds(const AteMatrix& ate, bool with_biases = true);

/// Minimum budget for a search over n + m - 2 parameters: 2 (n + m - 2) + 2.
std::size_t minimum_budget(int n, std::size_t m);

struct OfflineOptions {
  std::size_t budget = 40;  // policy evaluations, excluding the single-arm policies
  std::uint64_t seed = 0;
  ope::Estimator estimator = ope::Estimator::dr;
  double rho = 0.05;
  std::size_t ei_samples = 64;
  std::size_t random_candidates = 512;
  std::size_t local_starts = 4;
};

struct OfflineResult {
  FrontSet front;
  std::vector<ParetoPoint> archive;  // every successful evaluation, in order
  std::size_t failed = 0;
  std::size_t surrogate_fallbacks = 0;  // iterations that used kNN instead of the GP
};

/// Serial ParEGO-style search: quasi-random initial design, then per
/// iteration a random Chebyshev scalarization, one surrogate per outcome,
/// and the candidate with the highest expected improvement of the
/// scalarized surrogate. Single-arm policies are always evaluated.
OfflineResult optimize_offline(const ope::PolicyEvaluator& evaluator, std::span<const OutcomeSpec> outcomes,
                               const SearchBounds& bounds, const OfflineOptions& opts);

OfflineResult optimize_offline(const LogDataset& log, const hte::CateModel& model, const SearchBounds& bounds,
                               const OfflineOptions& opts);

struct OnlineOptions {
  std::size_t rounds = 4;
  std::size_t units_per_round = 20000;
  std::uint64_t seed = 0;
  double rho = 0.05;
  double inflate = 0.2;  // bounding-box growth, split evenly on both sides
  std::size_t ei_samples = 64;
  std::size_t random_candidates = 512;
  std::size_t local_starts = 4;
  /// Optional outer limits for the inferred box (e.g. the offline bounds).
  std::optional<SearchBounds> cap;
};

struct OnlineMeasurement {
  policy::PolicyParams params;
  std::vector<double> mean;
  std::vector<double> std_error;
  Objectives objectives;
  std::size_t count = 0;
  int round = 1;
  bool initial = true;
};

struct OnlineResult {
  std::vector<OnlineMeasurement> history;  // initial batch first, then one proposal per round
  std::vector<std::size_t> front;          // indices into history on the online Pareto front
  Objectives reference_point;
  SearchBounds bounds;
};

/// Round 1 measures every candidate in one randomized online run; each
/// later round proposes and measures one new policy.
OnlineResult optimize_online(const sim::ScenarioSpec& scenario, const std::vector<policy::PolicyParams>& candidates,
                             const hte::CateModel& model, const OnlineOptions& opts);

/// Assignment function x -> arm for a policy over a fitted model.
sim::AssignmentFn make_assignment(const hte::CateModel& model, const policy::PolicyParams& params);

/// Bounding box of the candidates' free parameters grown by `inflate`.
SearchBounds inferred_bounds(const std::vector<policy::PolicyParams>& candidates, double inflate,
                             const std::optional<SearchBounds>& cap);

}  // namespace pex::mopt
