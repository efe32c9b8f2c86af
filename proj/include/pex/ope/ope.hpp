#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pex/core/types.hpp"
#include "pex/hte/cate.hpp"
#include "pex/policy/policy.hpp"

namespace pex::ope {

enum class Estimator { ipsw, dr, subsample };

std::string_view to_string(Estimator e);
Estimator parse_estimator(std::string_view s);

struct OutcomeEstimate {
  double value = 0.0;  // estimated mean outcome under the policy (absolute, not control-relative)
  double std_error = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

struct PolicyValueEstimate {
  Estimator estimator = Estimator::dr;
  std::vector<OutcomeEstimate> outcomes;
  double ci_level = 0.95;
  std::size_t n_records = 0;
  bool bootstrapped = false;
  std::size_t bootstrap_failures = 0;
};

/// Arm chosen by the candidate policy for each logged record.
using AssignmentVector = std::vector<std::int32_t>;

struct OpeOptions {
  /// Inverse propensities use max(propensity, clip). 0 disables clipping.
  double propensity_clip = 0.0;
};

AssignmentVector policy_assignments(const LogDataset& log, const hte::CateModel& model,
                                    const policy::PolicyParams& params);

PolicyValueEstimate ipsw_value(const LogDataset& log, const AssignmentVector& assignments, const OpeOptions& opts = {});

PolicyValueEstimate dr_value(const LogDataset& log, const AssignmentVector& assignments, const hte::CateModel& model,
                             const OpeOptions& opts = {});

/// Mean outcome over records whose logged arm matches the policy.
PolicyValueEstimate subsample_value(const LogDataset& log, const AssignmentVector& assignments);

/// Percentile bootstrap over records. `model` is required for DR.
PolicyValueEstimate bootstrap_ci(Estimator estimator, const LogDataset& log, const AssignmentVector& assignments,
                                 const hte::CateModel* model, std::size_t resamples, double level, std::uint64_t seed,
                                 const OpeOptions& opts = {});

/// Evaluates many policies against one log. Model predictions for every
/// record are computed once; each policy then costs one vectorized
/// argmax pass plus one estimator pass.
class PolicyEvaluator {
 public:
  PolicyEvaluator(const LogDataset& log, const hte::CateModel& model, OpeOptions opts = {});

  std::size_t records() const;
  int arms() const { return n_; }
  std::size_t outcomes() const { return m_; }
  const hte::OutcomeTable& table() const;

  AssignmentVector assign(const policy::PolicyParams& params) const;

  PolicyValueEstimate evaluate(Estimator estimator, const AssignmentVector& assignments) const;
  PolicyValueEstimate evaluate(Estimator estimator, const policy::PolicyParams& params) const {
    return evaluate(estimator, assign(params));
  }

  PolicyValueEstimate bootstrap(Estimator estimator, const AssignmentVector& assignments, std::size_t resamples,
                                double level, std::uint64_t seed) const;

  /// Largest |sum_j w_j tau_{i,j}| over records and arms; a bias beyond
  /// this forces a single-arm policy.
  double max_abs_effect_utility(const std::vector<double>& weights) const;

 private:
  struct Data;
  std::shared_ptr<const Data> data_;
  int n_;
  std::size_t m_;
};

/// JSON records {outcome, value, stderr, ci_low, ci_high, estimator, n_records}.
nlohmann::json to_json(const PolicyValueEstimate& e, const std::vector<OutcomeSpec>& outcomes);

}  // namespace pex::ope
