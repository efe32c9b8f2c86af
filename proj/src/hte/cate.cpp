#include "pex/hte/cate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pex/core/log.hpp"
#include "pex/core/random.hpp"

namespace pex::hte {

using nlohmann::json;

CateModel::CateModel(int n, std::size_t m, std::size_t d, BaseLearnerSpec spec, std::vector<OutcomePredictor> predictors,
                     AteMatrix ate)
    : n_(n), m_(m), d_(d), spec_(spec), predictors_(std::move(predictors)), ate_(std::move(ate)) {
  if (n_ < 1 || m_ < 1) throw Error("CateModel needs n >= 1 and m >= 1");
  if (predictors_.size() != static_cast<std::size_t>(n_) * m_) throw Error("CateModel needs n*m predictors");
  if (ate_.arms() != n_ || ate_.outcomes() != m_) throw Error("CateModel ATE matrix has wrong shape");
}

const OutcomePredictor& CateModel::predictor(int arm, std::size_t outcome) const {
  if (arm < 1 || arm > n_ || outcome >= m_) throw Error("CateModel::predictor index out of range");
  return predictors_[static_cast<std::size_t>(arm - 1) * m_ + outcome];
}

EffectMatrix CateModel::predict_outcomes(std::span<const double> x) const {
  if (x.size() != d_) {
    throw Error("covariate vector has length " + std::to_string(x.size()) + ", model expects " + std::to_string(d_));
  }
  EffectMatrix mu(n_, m_);
  for (int i = 1; i <= n_; ++i) {
    for (std::size_t j = 0; j < m_; ++j) mu(i, j) = predictors_[static_cast<std::size_t>(i - 1) * m_ + j].predict(x);
  }
  return mu;
}

EffectMatrix predict_cate(const CateModel& model, std::span<const double> x) {
  EffectMatrix mu = model.predict_outcomes(x);
  EffectMatrix tau(model.arms(), model.outcomes());
  for (int i = 2; i <= model.arms(); ++i) {
    for (std::size_t j = 0; j < model.outcomes(); ++j) tau(i, j) = mu(i, j) - mu(1, j);
  }
  return tau;
}

OutcomeTable CateModel::predict_table(std::span<const double> x, std::size_t rows) const {
  if (x.size() != rows * d_) throw Error("predict_table: covariate matrix has wrong size");
  OutcomeTable t;
  t.rows = rows;
  t.n = n_;
  t.m = m_;
  t.mu.assign(static_cast<std::size_t>(n_) * m_ * rows, 0.0);
  t.tau.assign(t.mu.size(), 0.0);
  for (int i = 1; i <= n_; ++i) {
    for (std::size_t j = 0; j < m_; ++j) {
      predictor(i, j).predict_rows(x.data(), rows, d_, t.mu.data() + t.column(i, j));
    }
  }
  for (int i = 2; i <= n_; ++i) {
    for (std::size_t j = 0; j < m_; ++j) {
      const double* treated = t.mu.data() + t.column(i, j);
      const double* control = t.mu.data() + t.column(1, j);
      double* out = t.tau.data() + t.column(i, j);
      for (std::size_t r = 0; r < rows; ++r) out[r] = treated[r] - control[r];
    }
  }
  return t;
}

CateModel fit_t_learner(const LogDataset& train, const BaseLearnerSpec& spec, std::uint64_t seed) {
  spec.validate();
  AteMatrix ate = compute_ate(train);  // also rejects missing arms
  std::vector<OutcomePredictor> predictors;
  predictors.reserve(static_cast<std::size_t>(train.n) * train.m);
  for (int i = 1; i <= train.n; ++i) {
    ArmSubset subset = arm_subset(train, i);
    for (std::size_t j = 0; j < train.m; ++j) {
      const auto stream = static_cast<std::uint64_t>(i - 1) * train.m + j;
      predictors.push_back(fit_base(subset.x, subset.rows, train.d, subset.y[j], spec, derive_seed(seed, stream)));
    }
  }
  return CateModel(train.n, train.m, train.d, spec, std::move(predictors), std::move(ate));
}

CalibrationReport calibration_report(const CateModel& model, const LogDataset& log) {
  if (log.n != model.arms() || log.m != model.outcomes() || log.d != model.dims()) {
    throw Error("calibration_report: log dimensions do not match the model");
  }
  AteMatrix ate = compute_ate(log);
  std::vector<double> x = covariate_matrix(log);
  OutcomeTable table = model.predict_table(x, log.size());
  CalibrationReport report;
  for (int i = 2; i <= model.arms(); ++i) {
    for (std::size_t j = 0; j < model.outcomes(); ++j) {
      CalibrationEntry e;
      e.arm = i;
      e.outcome = j;
      double s = 0.0;
      const double* col = table.tau.data() + table.column(i, j);
      for (std::size_t r = 0; r < table.rows; ++r) s += col[r];
      e.mean_prediction = table.rows > 0 ? s / static_cast<double>(table.rows) : 0.0;
      e.sample_ate = ate(i, j);
      e.abs_gap = std::abs(e.mean_prediction - e.sample_ate);
      e.rel_gap = e.abs_gap / std::max(std::abs(e.sample_ate), 1e-12);
      report.entries.push_back(e);
    }
  }
  return report;
}

json to_json(const CateModel& model) {
  json preds = json::array();
  for (int i = 1; i <= model.arms(); ++i) {
    for (std::size_t j = 0; j < model.outcomes(); ++j) {
      json p = model.predictor(i, j).to_json();
      p["arm"] = i;
      p["outcome"] = j;
      preds.push_back(p);
    }
  }
  json ate = json::array();
  for (int i = 1; i <= model.arms(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < model.outcomes(); ++j) row.push_back(model.ate()(i, j));
    ate.push_back(row);
  }
  return {{"format", "pex-cate-model"}, {"version", 1},          {"n", model.arms()},
          {"m", model.outcomes()},      {"d", model.dims()},     {"learner", to_json(model.learner())},
          {"ate", ate},                 {"predictors", preds}};
}

CateModel cate_model_from_json(const json& j) {
  try {
    if (j.value("format", std::string()) != "pex-cate-model") throw Error("not a CATE model document");
    const int n = j.at("n").get<int>();
    const auto m = j.at("m").get<std::size_t>();
    const auto d = j.at("d").get<std::size_t>();
    BaseLearnerSpec spec = learner_spec_from_json(j.at("learner"));
    if (n < 1 || m < 1) throw Error("CATE model needs n >= 1 and m >= 1");
    AteMatrix ate(n, m);
    const auto& rows = j.at("ate");
    if (rows.size() != static_cast<std::size_t>(n)) throw Error("CATE model ATE has wrong row count");
    for (int i = 1; i <= n; ++i) {
      const auto& row = rows.at(static_cast<std::size_t>(i - 1));
      if (row.size() != m) throw Error("CATE model ATE has wrong column count");
      for (std::size_t o = 0; o < m; ++o) ate(i, o) = row.at(o).get<double>();
    }
    std::vector<OutcomePredictor> preds(static_cast<std::size_t>(n) * m);
    std::vector<char> seen(preds.size(), 0);
    for (const auto& p : j.at("predictors")) {
      const int arm = p.at("arm").get<int>();
      const auto o = p.at("outcome").get<std::size_t>();
      if (arm < 1 || arm > n || o >= m) throw Error("CATE model predictor index out of range");
      const std::size_t idx = static_cast<std::size_t>(arm - 1) * m + o;
      preds[idx] = OutcomePredictor::from_json(p);
      seen[idx] = 1;
    }
    for (char s : seen) {
      if (!s) throw Error("CATE model is missing a predictor");
    }
    return CateModel(n, m, d, spec, std::move(preds), std::move(ate));
  } catch (const json::exception& e) {
    throw Error(std::string("CATE model JSON: ") + e.what());
  }
}

json to_json(const CalibrationReport& r) {
  json entries = json::array();
  for (const auto& e : r.entries) {
    entries.push_back({{"arm", e.arm},
                       {"outcome", e.outcome},
                       {"mean_prediction", e.mean_prediction},
                       {"sample_ate", e.sample_ate},
                       {"abs_gap", e.abs_gap},
                       {"rel_gap", e.rel_gap}});
  }
  return {{"entries", entries}};
}

}  // namespace pex::hte
