#include "pex/ope/ope.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pex/core/log.hpp"
#include "pex/core/random.hpp"
#include "pex/core/stats.hpp"
#include "pex/kernels/kernels.hpp"

namespace pex::ope {

using nlohmann::json;

std::string_view to_string(Estimator e) {
  switch (e) {
    case Estimator::ipsw:
      return "ipsw";
    case Estimator::dr:
      return "dr";
    case Estimator::subsample:
      return "subsample";
  }
  return "dr";
}

Estimator parse_estimator(std::string_view s) {
  if (s == "ipsw") return Estimator::ipsw;
  if (s == "dr") return Estimator::dr;
  if (s == "subsample") return Estimator::subsample;
  throw Error("unknown OPE estimator '" + std::string(s) + "'");
}

namespace {

struct Columns {
  int n = 0;
  std::size_t m = 0;
  std::vector<std::int32_t> logged;
  std::vector<double> inv_p;
  std::vector<std::vector<double>> y;
};

Columns columns_of(const LogDataset& log, const OpeOptions& opts) {
  Columns c;
  c.n = log.n;
  c.m = log.m;
  c.logged.reserve(log.size());
  c.inv_p.reserve(log.size());
  c.y.assign(log.m, {});
  for (auto& col : c.y) col.reserve(log.size());
  for (const auto& r : log.records) {
    if (!(r.propensity > 0.0)) throw Error("off-policy evaluation needs propensities > 0");
    c.logged.push_back(r.arm);
    c.inv_p.push_back(1.0 / std::max(r.propensity, opts.propensity_clip));
    for (std::size_t j = 0; j < log.m; ++j) c.y[j].push_back(r.outcomes.at(j));
  }
  return c;
}

// Every estimator is a ratio of record sums: value_j = sum num_j / sum den.
// IPSW and DR have den = 1; subsampling has den = match indicator.
struct Terms {
  std::vector<std::vector<double>> num;
  std::vector<double> den;  // empty means all ones
};

void check_assignments(const Columns& c, const AssignmentVector& a) {
  if (a.size() != c.logged.size()) throw Error("assignment vector length does not match the log");
  for (auto arm : a) {
    if (arm < 1 || arm > c.n) throw Error("assignment vector holds an invalid arm");
  }
}

Terms ipsw_terms(const Columns& c, const AssignmentVector& a) {
  const auto& k = kernels::active();
  Terms t;
  t.num.assign(c.m, std::vector<double>(c.logged.size()));
  for (std::size_t j = 0; j < c.m; ++j) {
    k.ipsw_terms(c.logged.data(), a.data(), c.y[j].data(), c.inv_p.data(), c.logged.size(), t.num[j].data());
  }
  return t;
}

Terms dr_terms(const Columns& c, const AssignmentVector& a, const hte::OutcomeTable& table) {
  const auto& k = kernels::active();
  const std::size_t rows = c.logged.size();
  Terms t;
  t.num.assign(c.m, std::vector<double>(rows));
  std::vector<double> mu_assigned(rows), mu_logged(rows);
  for (std::size_t j = 0; j < c.m; ++j) {
    for (std::size_t r = 0; r < rows; ++r) {
      mu_assigned[r] = table.mu_at(a[r], j, r);
      mu_logged[r] = table.mu_at(c.logged[r], j, r);
    }
    k.dr_terms(c.logged.data(), a.data(), c.y[j].data(), c.inv_p.data(), mu_assigned.data(), mu_logged.data(), rows,
               t.num[j].data());
  }
  return t;
}

Terms subsample_terms(const Columns& c, const AssignmentVector& a) {
  const std::size_t rows = c.logged.size();
  Terms t;
  t.den.assign(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r) t.den[r] = c.logged[r] == a[r] ? 1.0 : 0.0;
  t.num.assign(c.m, std::vector<double>(rows));
  for (std::size_t j = 0; j < c.m; ++j) {
    for (std::size_t r = 0; r < rows; ++r) t.num[j][r] = t.den[r] * c.y[j][r];
  }
  return t;
}

PolicyValueEstimate point_estimate(Estimator est, const Terms& t, std::size_t rows, double level = 0.95) {
  if (rows == 0) throw Error("off-policy evaluation of an empty log");
  const auto& k = kernels::active();
  PolicyValueEstimate out;
  out.estimator = est;
  out.n_records = rows;
  out.ci_level = level;
  const double z = normal_quantile(0.5 + 0.5 * level);
  double den = static_cast<double>(rows);
  if (!t.den.empty()) {
    den = k.sum(t.den.data(), rows);
    if (den == 0.0) throw Error("no matching records");
  }
  for (const auto& num : t.num) {
    OutcomeEstimate e;
    e.value = k.sum(num.data(), rows) / den;
    if (t.den.empty()) {
      RunningStats s;
      for (double v : num) s.add(v);
      e.std_error = s.std_error();
    } else {
      RunningStats s;
      for (std::size_t r = 0; r < rows; ++r) {
        if (t.den[r] != 0.0) s.add(num[r]);
      }
      e.std_error = s.std_error();
    }
    e.ci_low = e.value - z * e.std_error;
    e.ci_high = e.value + z * e.std_error;
    out.outcomes.push_back(e);
  }
  return out;
}

PolicyValueEstimate bootstrap_terms(Estimator est, const Terms& t, std::size_t rows, std::size_t resamples,
                                    double level, std::uint64_t seed) {
  if (resamples < 100) throw Error("bootstrap needs at least 100 resamples");
  if (!(level > 0.0 && level < 1.0)) throw Error("bootstrap level must lie in (0,1)");
  PolicyValueEstimate out = point_estimate(est, t, rows, level);
  out.bootstrapped = true;
  const std::size_t m = t.num.size();
  std::vector<std::vector<double>> draws(m);
  std::vector<double> sums(m);
  std::size_t failures = 0;
  for (std::size_t b = 0; b < resamples; ++b) {
    Engine eng = make_engine(seed, b);
    std::uniform_int_distribution<std::size_t> pick(0, rows - 1);
    std::fill(sums.begin(), sums.end(), 0.0);
    double den = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t i = pick(eng);
      den += t.den.empty() ? 1.0 : t.den[i];
      for (std::size_t j = 0; j < m; ++j) sums[j] += t.num[j][i];
    }
    if (den == 0.0) {
      ++failures;
      continue;
    }
    for (std::size_t j = 0; j < m; ++j) draws[j].push_back(sums[j] / den);
  }
  out.bootstrap_failures = failures;
  if (static_cast<double>(failures) > 0.1 * static_cast<double>(resamples)) {
    throw Error("bootstrap: estimator failed on " + std::to_string(failures) + " of " + std::to_string(resamples) +
                " resamples");
  }
  const double tail = 0.5 * (1.0 - level);
  for (std::size_t j = 0; j < m; ++j) {
    RunningStats s;
    for (double v : draws[j]) s.add(v);
    auto& e = out.outcomes[j];
    e.std_error = std::sqrt(s.variance());
    e.ci_low = std::min(quantile(draws[j], tail), e.value);
    e.ci_high = std::max(quantile(draws[j], 1.0 - tail), e.value);
  }
  return out;
}

}  // namespace

AssignmentVector policy_assignments(const LogDataset& log, const hte::CateModel& model,
                                    const policy::PolicyParams& params) {
  if (log.n != model.arms() || log.m != model.outcomes() || log.d != model.dims()) {
    throw Error("policy_assignments: log and model dimensions differ");
  }
  AssignmentVector out;
  out.reserve(log.size());
  for (const auto& r : log.records) out.push_back(policy::decide(params, hte::predict_cate(model, r.covariates)));
  return out;
}

PolicyValueEstimate ipsw_value(const LogDataset& log, const AssignmentVector& assignments, const OpeOptions& opts) {
  Columns c = columns_of(log, opts);
  check_assignments(c, assignments);
  return point_estimate(Estimator::ipsw, ipsw_terms(c, assignments), log.size());
}

PolicyValueEstimate dr_value(const LogDataset& log, const AssignmentVector& assignments, const hte::CateModel& model,
                             const OpeOptions& opts) {
  if (log.n != model.arms() || log.m != model.outcomes() || log.d != model.dims()) {
    throw Error("dr_value: log and model dimensions differ");
  }
  Columns c = columns_of(log, opts);
  check_assignments(c, assignments);
  hte::OutcomeTable table = model.predict_table(covariate_matrix(log), log.size());
  return point_estimate(Estimator::dr, dr_terms(c, assignments, table), log.size());
}

PolicyValueEstimate subsample_value(const LogDataset& log, const AssignmentVector& assignments) {
  Columns c = columns_of(log, {});
  check_assignments(c, assignments);
  return point_estimate(Estimator::subsample, subsample_terms(c, assignments), log.size());
}

PolicyValueEstimate bootstrap_ci(Estimator estimator, const LogDataset& log, const AssignmentVector& assignments,
                                 const hte::CateModel* model, std::size_t resamples, double level, std::uint64_t seed,
                                 const OpeOptions& opts) {
  Columns c = columns_of(log, opts);
  check_assignments(c, assignments);
  if (log.empty()) throw Error("off-policy evaluation of an empty log");
  Terms t;
  switch (estimator) {
    case Estimator::ipsw:
      t = ipsw_terms(c, assignments);
      break;
    case Estimator::dr: {
      if (model == nullptr) throw Error("bootstrap_ci: the DR estimator needs a model");
      hte::OutcomeTable table = model->predict_table(covariate_matrix(log), log.size());
      t = dr_terms(c, assignments, table);
      break;
    }
    case Estimator::subsample:
      t = subsample_terms(c, assignments);
      break;
  }
  return bootstrap_terms(estimator, t, log.size(), resamples, level, seed);
}

struct PolicyEvaluator::Data {
  Columns cols;
  hte::OutcomeTable table;
};

PolicyEvaluator::PolicyEvaluator(const LogDataset& log, const hte::CateModel& model, OpeOptions opts)
    : n_(log.n), m_(log.m) {
  if (log.n != model.arms() || log.m != model.outcomes() || log.d != model.dims()) {
    throw Error("PolicyEvaluator: log and model dimensions differ");
  }
  if (log.empty()) throw Error("PolicyEvaluator: empty log");
  auto data = std::make_shared<Data>();
  data->cols = columns_of(log, opts);
  data->table = model.predict_table(covariate_matrix(log), log.size());
  data_ = std::move(data);
}

std::size_t PolicyEvaluator::records() const { return data_->cols.logged.size(); }

const hte::OutcomeTable& PolicyEvaluator::table() const { return data_->table; }

AssignmentVector PolicyEvaluator::assign(const policy::PolicyParams& params) const {
  if (params.weights.size() != m_ || params.biases.size() != static_cast<std::size_t>(n_)) {
    throw Error("PolicyEvaluator::assign: policy dimensions differ from the log");
  }
  AssignmentVector out(records());
  kernels::active().assign_arms(data_->table.tau.data(), n_, m_, params.weights.data(), params.biases.data(),
                                records(), out.data());
  return out;
}

PolicyValueEstimate PolicyEvaluator::evaluate(Estimator estimator, const AssignmentVector& assignments) const {
  check_assignments(data_->cols, assignments);
  switch (estimator) {
    case Estimator::ipsw:
      return point_estimate(estimator, ipsw_terms(data_->cols, assignments), records());
    case Estimator::dr:
      return point_estimate(estimator, dr_terms(data_->cols, assignments, data_->table), records());
    case Estimator::subsample:
      return point_estimate(estimator, subsample_terms(data_->cols, assignments), records());
  }
  throw Error("unknown estimator");
}

PolicyValueEstimate PolicyEvaluator::bootstrap(Estimator estimator, const AssignmentVector& assignments,
                                               std::size_t resamples, double level, std::uint64_t seed) const {
  check_assignments(data_->cols, assignments);
  Terms t;
  switch (estimator) {
    case Estimator::ipsw:
      t = ipsw_terms(data_->cols, assignments);
      break;
    case Estimator::dr:
      t = dr_terms(data_->cols, assignments, data_->table);
      break;
    case Estimator::subsample:
      t = subsample_terms(data_->cols, assignments);
      break;
  }
  return bootstrap_terms(estimator, t, records(), resamples, level, seed);
}

double PolicyEvaluator::max_abs_effect_utility(const std::vector<double>& weights) const {
  if (weights.size() != m_) throw Error("max_abs_effect_utility: wrong weight count");
  const auto& t = data_->table;
  double best = 0.0;
  for (int i = 2; i <= n_; ++i) {
    for (std::size_t r = 0; r < t.rows; ++r) {
      double u = 0.0;
      for (std::size_t j = 0; j < m_; ++j) u += weights[j] * t.tau_at(i, j, r);
      best = std::max(best, std::abs(u));
    }
  }
  return best;
}

json to_json(const PolicyValueEstimate& e, const std::vector<OutcomeSpec>& outcomes) {
  json out = json::array();
  for (std::size_t j = 0; j < e.outcomes.size(); ++j) {
    const auto& o = e.outcomes[j];
    out.push_back({{"outcome", j < outcomes.size() ? outcomes[j].name : "y_" + std::to_string(j)},
                   {"value", o.value},
                   {"stderr", o.std_error},
                   {"ci_low", o.ci_low},
                   {"ci_high", o.ci_high},
                   {"ci_level", e.ci_level},
                   {"estimator", std::string(to_string(e.estimator))},
                   {"n_records", e.n_records}});
  }
  return out;
}

}  // namespace pex::ope
