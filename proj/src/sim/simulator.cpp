#include "pex/sim/simulator.hpp"

#include <string>

#include "pex/core/stats.hpp"

namespace pex::sim {

namespace {
constexpr std::uint64_t kLogStream = 1;
constexpr std::uint64_t kOracleStream = 2;
constexpr std::uint64_t kOnlineStream = 3;
}  // namespace

LogDataset generate_log(const ScenarioSpec& s, std::size_t count, std::uint64_t seed) {
  s.validate();
  LogDataset log;
  log.n = s.n;
  log.m = s.m;
  log.d = s.d;
  log.outcome_specs = s.outcomes;
  log.records.reserve(count);
  Engine eng = make_engine(seed, kLogStream);
  std::uniform_int_distribution<int> arm_dist(1, s.n);
  std::normal_distribution<double> z(0.0, 1.0);
  const double propensity = 1.0 / static_cast<double>(s.n);
  for (std::size_t r = 0; r < count; ++r) {
    UnitRecord rec;
    rec.unit_id = "u" + std::to_string(r);
    rec.covariates.resize(s.d);
    draw_covariates(s, eng, rec.covariates);
    rec.arm = arm_dist(eng);
    rec.propensity = propensity;
    rec.outcomes.resize(s.m);
    for (std::size_t j = 0; j < s.m; ++j) {
      rec.outcomes[j] = s.mean_outcome(rec.arm, j, rec.covariates) + s.noise_sd[j] * z(eng);
    }
    log.records.push_back(std::move(rec));
  }
  return log;
}

OracleValue oracle_policy_value(const ScenarioSpec& s, const AssignmentFn& policy, std::size_t samples,
                                std::uint64_t seed) {
  if (samples < 1) throw Error("oracle_policy_value: need at least one sample");
  s.validate();
  Engine eng = make_engine(seed, kOracleStream);
  std::vector<RunningStats> acc(s.m);
  std::vector<double> x(s.d);
  for (std::size_t r = 0; r < samples; ++r) {
    draw_covariates(s, eng, x);
    int arm = policy(x);
    if (arm < 1 || arm > s.n) throw Error("oracle_policy_value: policy returned invalid arm");
    for (std::size_t j = 0; j < s.m; ++j) acc[j].add(s.mean_outcome(arm, j, x));
  }
  OracleValue out;
  for (const auto& a : acc) {
    out.values.push_back(a.mean());
    out.std_error.push_back(a.std_error());
  }
  return out;
}

std::vector<double> draw_online_outcomes(const ScenarioSpec& s, int arm, std::span<const double> x, Engine& eng) {
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> y(s.m);
  for (std::size_t j = 0; j < s.m; ++j) {
    double offline = s.mean_outcome(arm, j, x) + s.noise_sd[j] * z(eng);
    y[j] = s.online_shift[j].apply(offline);
  }
  return y;
}

OnlineRunResult run_online(const ScenarioSpec& s, const std::vector<AssignmentFn>& candidates, std::size_t count,
                           std::uint64_t seed) {
  if (candidates.empty()) throw Error("run_online: need at least one candidate");
  if (count < 1) throw Error("run_online: need at least one unit");
  s.validate();
  Engine eng = make_engine(seed, kOnlineStream);
  std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);

  OnlineRunResult out;
  out.log.n = s.n;
  out.log.m = s.m;
  out.log.d = s.d;
  out.log.outcome_specs = s.outcomes;
  out.log.records.reserve(count);
  out.candidate_of_unit.reserve(count);
  std::vector<std::vector<RunningStats>> acc(candidates.size(), std::vector<RunningStats>(s.m));

  for (std::size_t r = 0; r < count; ++r) {
    UnitRecord rec;
    rec.unit_id = "o" + std::to_string(r);
    rec.covariates.resize(s.d);
    draw_covariates(s, eng, rec.covariates);
    std::size_t c = candidates.size() == 1 ? 0 : pick(eng);
    rec.arm = candidates[c](rec.covariates);
    if (rec.arm < 1 || rec.arm > s.n) throw Error("run_online: candidate returned invalid arm");
    rec.propensity = 1.0;
    rec.outcomes = draw_online_outcomes(s, rec.arm, rec.covariates, eng);
    for (std::size_t j = 0; j < s.m; ++j) acc[c][j].add(rec.outcomes[j]);
    out.candidate_of_unit.push_back(c);
    out.log.records.push_back(std::move(rec));
  }
  for (const auto& per : acc) {
    CandidateMeasurement cm;
    cm.count = per[0].count();
    for (const auto& a : per) {
      cm.mean.push_back(a.mean());
      cm.std_error.push_back(a.std_error());
    }
    out.candidates.push_back(std::move(cm));
  }
  return out;
}

}  // namespace pex::sim
