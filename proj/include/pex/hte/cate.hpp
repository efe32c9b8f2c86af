#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "pex/core/types.hpp"
#include "pex/hte/learners.hpp"

namespace pex::hte {

/// Per-record model predictions for a batch of covariate rows, stored
/// column-major by (arm, outcome): column (a - 1) * m + j has `rows` entries.
struct OutcomeTable {
  std::size_t rows = 0;
  int n = 0;
  std::size_t m = 0;
  std::vector<double> mu;   // mu_hat_{a,j}(x_r)
  std::vector<double> tau;  // mu_hat_{a,j}(x_r) - mu_hat_{1,j}(x_r); arm 1 columns are zero

  std::size_t column(int arm, std::size_t outcome) const {
    return (static_cast<std::size_t>(arm - 1) * m + outcome) * rows;
  }
  double mu_at(int arm, std::size_t outcome, std::size_t r) const { return mu[column(arm, outcome) + r]; }
  double tau_at(int arm, std::size_t outcome, std::size_t r) const { return tau[column(arm, outcome) + r]; }
};

/// T-learner: one outcome regression per (arm, outcome); CATE contrasts
/// against the control arm's regression.
class CateModel {
 public:
  CateModel(int n, std::size_t m, std::size_t d, BaseLearnerSpec spec, std::vector<OutcomePredictor> predictors,
            AteMatrix ate);

  int arms() const { return n_; }
  std::size_t outcomes() const { return m_; }
  std::size_t dims() const { return d_; }
  const BaseLearnerSpec& learner() const { return spec_; }
  const AteMatrix& ate() const { return ate_; }

  /// Non-trivial contrasts tau_{i,j}, i >= 2: m (n - 1).
  std::size_t contrast_count() const { return m_ * static_cast<std::size_t>(n_ - 1); }

  const OutcomePredictor& predictor(int arm, std::size_t outcome) const;

  /// mu_hat_{i,j}(x) for every arm and outcome.
  EffectMatrix predict_outcomes(std::span<const double> x) const;

  /// Batch predictions for row-major covariates.
  OutcomeTable predict_table(std::span<const double> x, std::size_t rows) const;

 private:
  int n_;
  std::size_t m_;
  std::size_t d_;
  BaseLearnerSpec spec_;
  std::vector<OutcomePredictor> predictors_;
  AteMatrix ate_;
};

CateModel fit_t_learner(const LogDataset& train, const BaseLearnerSpec& spec, std::uint64_t seed);

/// Entry (i, j) = tau_hat_{i,j}(x); row 1 is zero.
EffectMatrix predict_cate(const CateModel& model, std::span<const double> x);

struct CalibrationEntry {
  int arm = 2;
  std::size_t outcome = 0;
  double mean_prediction = 0.0;
  double sample_ate = 0.0;
  double abs_gap = 0.0;
  double rel_gap = 0.0;  // abs_gap / |sample_ate|; abs_gap / 1e-12 when the ATE is zero
};

struct CalibrationReport {
  std::vector<CalibrationEntry> entries;  // arms 2..n, outcomes 0..m-1
};

/// Mean CATE prediction over the log's covariates against the log's sample ATE.
CalibrationReport calibration_report(const CateModel& model, const LogDataset& log);

nlohmann::json to_json(const CateModel& model);
CateModel cate_model_from_json(const nlohmann::json& j);

nlohmann::json to_json(const CalibrationReport& r);

}  // namespace pex::hte
