#include "pex/mopt/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "pex/core/random.hpp"
#include "pex/mopt/scalarize.hpp"
#include "pex/mopt/surrogate.hpp"
#include "pex/sim/simulator.hpp"

namespace pex::mopt {

std::vector<std::size_t> SearchBounds::free_dims() const {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < lo.size(); ++k) {
    if (hi[k] > lo[k]) out.push_back(k);
  }
  return out;
}

void SearchBounds::validate() const {
  if (lo.size() != hi.size()) throw Error("search bounds: lo and hi differ in length");
  for (std::size_t k = 0; k < lo.size(); ++k) {
    if (!(lo[k] <= hi[k]) || !std::isfinite(lo[k]) || !std::isfinite(hi[k])) {
      throw Error("search bounds: interval " + std::to_string(k) + " is invalid");
    }
  }
}

SearchBounds default_bounds(const AteMatrix& ate, bool with_biases) {
  double max_ate = 0.0;
  for (double v : ate.data()) max_ate = std::max(max_ate, std::abs(v));
  const double bias_bound = max_ate > 0.0 ? kBiasBoundPerAte * max_ate : 1.0;
  SearchBounds b;
  for (std::size_t j = 1; j < ate.outcomes(); ++j) {
    b.lo.push_back(-kDefaultWeightBound);
    b.hi.push_back(kDefaultWeightBound);
  }
  for (int i = 2; i <= ate.arms(); ++i) {
    b.lo.push_back(with_biases ? -bias_bound : 0.0);
    b.hi.push_back(with_biases ? bias_bound : 0.0);
  }
  return b;
}

std::size_t minimum_budget(int n, std::size_t m) { return 2 * policy::free_parameter_count(n, m) + 2; }

namespace {

double radical_inverse(std::size_t index, unsigned base) {
  double inv = 1.0 / base, f = inv, out = 0.0;
  while (index > 0) {
    out += f * static_cast<double>(index % base);
    index /= base;
    f *= inv;
  }
  return out;
}

constexpr unsigned kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71};

struct Observation {
  std::vector<double> unit;  // free coordinates scaled to [0,1]
  Objectives objectives;
  std::vector<double> noise_var;
};

struct AcquisitionSettings {
  double rho = 0.05;
  std::size_t ei_samples = 64;
  std::size_t random_candidates = 512;
  std::size_t local_starts = 4;
};

struct Proposal {
  std::vector<double> unit;
  bool used_fallback = false;
};

// One ParEGO step: random simplex weights, per-objective surrogates, and
// expected improvement of the scalarized surrogate estimated with common
// random numbers, maximized by random screening plus pattern search.
Proposal propose(const std::vector<Observation>& obs, std::size_t dims, std::size_t m, Engine& eng,
                 const AcquisitionSettings& cfg) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Proposal out;
  if (obs.size() < 2) {
    out.unit.resize(dims);
    for (double& u : out.unit) u = unif(eng);
    return out;
  }

  std::exponential_distribution<double> expo(1.0);
  std::vector<double> weights(m);
  double wsum = 0.0;
  for (double& w : weights) wsum += (w = expo(eng));
  for (double& w : weights) w /= wsum;

  std::vector<Objectives> objs;
  for (const auto& o : obs) objs.push_back(o.objectives);
  const Normalization norm = running_normalization(objs);

  std::vector<std::vector<double>> x;
  for (const auto& o : obs) x.push_back(o.unit);
  std::vector<Surrogate> models;
  for (std::size_t j = 0; j < m; ++j) {
    std::vector<double> y, nv;
    for (const auto& o : obs) {
      y.push_back(o.objectives[j]);
      nv.push_back(o.noise_var[j]);
    }
    models.push_back(Surrogate::fit(x, y, nv));
    out.used_fallback = out.used_fallback || !models.back().uses_gp();
  }

  auto predict_all = [&](std::span<const double> u) {
    std::vector<Prediction> p;
    for (const auto& mdl : models) p.push_back(mdl.predict(u));
    return p;
  };

  double best = INFINITY;
  std::size_t incumbent = 0;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    auto p = predict_all(obs[i].unit);
    Objectives f(m);
    for (std::size_t j = 0; j < m; ++j) f[j] = p[j].mean;
    const double v = scalarize(f, weights, cfg.rho, norm);
    if (v < best) {
      best = v;
      incumbent = i;
    }
  }

  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> crn(cfg.ei_samples * m);
  for (double& v : crn) v = z(eng);

  auto expected_improvement = [&](std::span<const double> u) {
    auto p = predict_all(u);
    Objectives f(m);
    double acc = 0.0;
    for (std::size_t s = 0; s < cfg.ei_samples; ++s) {
      for (std::size_t j = 0; j < m; ++j) f[j] = p[j].mean + std::sqrt(p[j].variance) * crn[s * m + j];
      acc += std::max(best - scalarize(f, weights, cfg.rho, norm), 0.0);
    }
    return acc / static_cast<double>(cfg.ei_samples);
  };

  std::vector<std::vector<double>> pool(cfg.random_candidates, std::vector<double>(dims));
  for (auto& c : pool) {
    for (double& u : c) u = unif(eng);
  }
  std::vector<double> scores(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) scores[i] = expected_improvement(pool[i]);

  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  if (pool.empty() || scores[order[0]] <= 0.0) {
    // Flat acquisition: explore where the surrogates are least certain.
    std::size_t pick = 0;
    double widest = -1.0;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      double v = 0.0;
      for (const auto& p : predict_all(pool[i])) v += p.variance;
      if (v > widest) {
        widest = v;
        pick = i;
      }
    }
    out.unit = pool.empty() ? std::vector<double>(dims, 0.5) : pool[pick];
    return out;
  }

  std::vector<double> best_u = pool[order[0]];
  double best_ei = scores[order[0]];
  // Local refinement from the best screened candidates and from the
  // incumbent for this scalarization.
  std::vector<std::vector<double>> starts;
  for (std::size_t s = 0; s < std::min(cfg.local_starts, pool.size()); ++s) starts.push_back(pool[order[s]]);
  starts.push_back(obs[incumbent].unit);
  for (auto& u : starts) {
    double cur = expected_improvement(u);
    for (double step = 0.1; step > 1e-3; step *= 0.5) {
      bool moved = true;
      while (moved) {
        moved = false;
        for (std::size_t k = 0; k < dims; ++k) {
          for (double sign : {1.0, -1.0}) {
            std::vector<double> trial = u;
            trial[k] = std::clamp(trial[k] + sign * step, 0.0, 1.0);
            if (trial[k] == u[k]) continue;
            const double v = expected_improvement(trial);
            if (v > cur) {
              cur = v;
              u = std::move(trial);
              moved = true;
            }
          }
        }
      }
    }
    if (cur > best_ei) {
      best_ei = cur;
      best_u = u;
    }
  }
  out.unit = std::move(best_u);
  return out;
}

std::vector<double> to_theta(const SearchBounds& b, const std::vector<std::size_t>& free, std::span<const double> unit) {
  std::vector<double> theta = b.lo;
  for (std::size_t k = 0; k < free.size(); ++k) {
    const std::size_t dim = free[k];
    theta[dim] = b.lo[dim] + unit[k] * (b.hi[dim] - b.lo[dim]);
  }
  return theta;
}

// nullopt when a free coordinate lies outside the bounds.
std::optional<std::vector<double>> to_unit(const SearchBounds& b, const std::vector<std::size_t>& free,
                                           std::span<const double> theta) {
  std::vector<double> unit(free.size());
  for (std::size_t k = 0; k < free.size(); ++k) {
    const std::size_t dim = free[k];
    if (theta[dim] < b.lo[dim] || theta[dim] > b.hi[dim]) return std::nullopt;
    unit[k] = (theta[dim] - b.lo[dim]) / (b.hi[dim] - b.lo[dim]);
  }
  return unit;
}

}  // namespace

OfflineResult optimize_offline(const ope::PolicyEvaluator& evaluator, std::span<const OutcomeSpec> outcomes,
                               const SearchBounds& bounds, const OfflineOptions& opts) {
  const int n = evaluator.arms();
  const std::size_t m = evaluator.outcomes();
  if (outcomes.size() != m) throw Error("optimize_offline: outcome specs do not match the log");
  const std::size_t dims = policy::free_parameter_count(n, m);
  bounds.validate();
  if (bounds.size() != dims) {
    throw Error("optimize_offline: bounds cover " + std::to_string(bounds.size()) + " parameters, policy has " +
                std::to_string(dims));
  }
  const std::size_t min_budget = minimum_budget(n, m);
  if (opts.budget < min_budget) {
    throw Error("optimize_offline: budget " + std::to_string(opts.budget) + " is below the minimum of " +
                std::to_string(min_budget) + " (2*(n+m-2)+2)");
  }
  const Direction first = outcomes[0].direction;
  const std::vector<std::size_t> free = bounds.free_dims();

  OfflineResult result;
  std::vector<Observation> observations;

  auto evaluate = [&](const policy::PolicyParams& params, int iteration, const std::string& origin,
                      bool train_surrogate) {
    ope::PolicyValueEstimate est;
    try {
      est = evaluator.evaluate(opts.estimator, params);
    } catch (const Error&) {
      ++result.failed;
      return;
    }
    std::vector<double> values;
    Observation obs;
    for (const auto& o : est.outcomes) {
      values.push_back(o.value);
      obs.noise_var.push_back(o.std_error * o.std_error);
    }
    ParetoPoint pt{params, orient(values, outcomes), est, iteration, origin};
    if (train_surrogate) {
      auto unit = to_unit(bounds, free, policy::free_parameters(params));
      if (unit) {
        obs.unit = std::move(*unit);
        obs.objectives = pt.objectives;
        observations.push_back(std::move(obs));
      }
    }
    result.archive.push_back(std::move(pt));
  };

  // Single-arm policies are the large-bias corners of the policy class, so
  // they belong to the search only when some bias is free.
  bool biases_free = false;
  for (std::size_t k = m - 1; k < dims; ++k) biases_free = biases_free || bounds.hi[k] > bounds.lo[k];
  if (biases_free) {
    std::vector<double> first_only(m, 0.0);
    first_only[0] = direction_sign(first);
    const double margin = 2.0 * evaluator.max_abs_effect_utility(first_only) + 1.0;
    for (int arm = 1; arm <= n; ++arm) {
      evaluate(policy::single_arm_policy(arm, n, m, first, margin), 0, "single_arm", false);
    }
  }

  const AcquisitionSettings acq{opts.rho, opts.ei_samples, opts.random_candidates, opts.local_starts};
  if (free.empty()) {
    evaluate(policy::from_free_parameters(bounds.lo, n, m, first), 1, "initial", true);
  } else {
    // Fixed-size initial design so a larger budget only extends the run.
    const std::size_t initial = std::min(opts.budget, min_budget);
    Engine shift_eng = make_engine(opts.seed, 0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> shift(free.size());
    for (double& s : shift) s = unif(shift_eng);
    for (std::size_t i = 0; i < initial; ++i) {
      std::vector<double> unit(free.size());
      for (std::size_t k = 0; k < free.size(); ++k) {
        double u = radical_inverse(i + 1, kPrimes[k % std::size(kPrimes)]) + shift[k];
        unit[k] = u - std::floor(u);
      }
      evaluate(policy::from_free_parameters(to_theta(bounds, free, unit), n, m, first), static_cast<int>(i + 1),
               "initial", true);
    }
    for (std::size_t it = initial; it < opts.budget; ++it) {
      Engine eng = make_engine(opts.seed, 1000 + it);
      Proposal p = propose(observations, free.size(), m, eng, acq);
      if (p.used_fallback) ++result.surrogate_fallbacks;
      evaluate(policy::from_free_parameters(to_theta(bounds, free, p.unit), n, m, first), static_cast<int>(it + 1),
               "search", true);
    }
  }

  if (result.archive.empty()) throw Error("optimize_offline: every policy evaluation failed");
  auto objs = objectives_of(result.archive);
  result.front.reference_point = reference_from(objs);
  result.front.points = pareto_front(result.archive);
  return result;
}

OfflineResult optimize_offline(const LogDataset& log, const hte::CateModel& model, const SearchBounds& bounds,
                               const OfflineOptions& opts) {
  ope::PolicyEvaluator evaluator(log, model);
  const auto specs = log.outcome_specs.empty() ? default_outcome_specs(log.m) : log.outcome_specs;
  return optimize_offline(evaluator, specs, bounds, opts);
}

sim::AssignmentFn make_assignment(const hte::CateModel& model, const policy::PolicyParams& params) {
  const hte::CateModel* mdl = &model;
  return [mdl, params](std::span<const double> x) { return policy::decide(params, hte::predict_cate(*mdl, x)); };
}

SearchBounds inferred_bounds(const std::vector<policy::PolicyParams>& candidates, double inflate,
                             const std::optional<SearchBounds>& cap) {
  if (candidates.empty()) throw Error("inferred_bounds: no candidates");
  SearchBounds b;
  for (const auto& c : candidates) {
    auto theta = policy::free_parameters(c);
    if (b.lo.empty()) {
      b.lo = theta;
      b.hi = theta;
      continue;
    }
    if (theta.size() != b.lo.size()) throw Error("inferred_bounds: candidates differ in shape");
    for (std::size_t k = 0; k < theta.size(); ++k) {
      b.lo[k] = std::min(b.lo[k], theta[k]);
      b.hi[k] = std::max(b.hi[k], theta[k]);
    }
  }
  for (std::size_t k = 0; k < b.lo.size(); ++k) {
    const double width = b.hi[k] - b.lo[k];
    const double pad = width > 0.0 ? 0.5 * inflate * width : 0.5 * inflate * std::max(1.0, std::abs(b.lo[k]));
    b.lo[k] -= pad;
    b.hi[k] += pad;
  }
  if (cap) {
    if (cap->size() != b.size()) throw Error("inferred_bounds: cap has the wrong size");
    for (std::size_t k = 0; k < b.lo.size(); ++k) {
      const double lo = std::clamp(b.lo[k], cap->lo[k], cap->hi[k]);
      const double hi = std::clamp(b.hi[k], cap->lo[k], cap->hi[k]);
      b.lo[k] = lo;
      b.hi[k] = hi;
    }
  }
  return b;
}

OnlineResult optimize_online(const sim::ScenarioSpec& scenario, const std::vector<policy::PolicyParams>& candidates,
                             const hte::CateModel& model, const OnlineOptions& opts) {
  if (candidates.empty()) throw Error("optimize_online: need at least one candidate");
  if (opts.rounds < 1) throw Error("optimize_online: need at least one round");
  if (model.arms() != scenario.n || model.outcomes() != scenario.m || model.dims() != scenario.d) {
    throw Error("optimize_online: model and scenario dimensions differ");
  }
  const int n = scenario.n;
  const std::size_t m = scenario.m;
  const Direction first = scenario.outcomes[0].direction;
  for (const auto& c : candidates) {
    if (c.weights.size() != m || c.biases.size() != static_cast<std::size_t>(n)) {
      throw Error("optimize_online: candidate shape differs from the scenario");
    }
  }

  OnlineResult result;
  result.bounds = inferred_bounds(candidates, opts.inflate, opts.cap);
  const std::vector<std::size_t> free = result.bounds.free_dims();

  auto record = [&](const policy::PolicyParams& params, const sim::CandidateMeasurement& cm, int round,
                    bool initial) {
    OnlineMeasurement mm;
    mm.params = params;
    mm.mean = cm.mean;
    mm.std_error = cm.std_error;
    mm.objectives = orient(cm.mean, scenario.outcomes);
    mm.count = cm.count;
    mm.round = round;
    mm.initial = initial;
    result.history.push_back(std::move(mm));
  };

  std::vector<sim::AssignmentFn> fns;
  for (const auto& c : candidates) fns.push_back(make_assignment(model, c));
  auto first_run = sim::run_online(scenario, fns, opts.units_per_round, derive_seed(opts.seed, 1));
  for (std::size_t c = 0; c < candidates.size(); ++c) record(candidates[c], first_run.candidates[c], 1, true);

  const AcquisitionSettings acq{opts.rho, opts.ei_samples, opts.random_candidates, opts.local_starts};
  for (std::size_t round = 2; round <= opts.rounds; ++round) {
    policy::PolicyParams next;
    if (free.empty()) {
      next = policy::from_free_parameters(result.bounds.lo, n, m, first);
    } else {
      std::vector<Observation> obs;
      for (const auto& h : result.history) {
        auto unit = to_unit(result.bounds, free, policy::free_parameters(h.params));
        if (!unit) continue;
        Observation o;
        o.unit = std::move(*unit);
        o.objectives = h.objectives;
        for (double se : h.std_error) o.noise_var.push_back(se * se);
        obs.push_back(std::move(o));
      }
      Engine eng = make_engine(opts.seed, 5000 + round);
      Proposal p = propose(obs, free.size(), m, eng, acq);
      next = policy::from_free_parameters(to_theta(result.bounds, free, p.unit), n, m, first);
    }
    auto run = sim::run_online(scenario, {make_assignment(model, next)}, opts.units_per_round,
                               derive_seed(opts.seed, round));
    record(next, run.candidates[0], static_cast<int>(round), false);
  }

  std::vector<Objectives> objs;
  for (const auto& h : result.history) objs.push_back(h.objectives);
  result.front = pareto_indices(objs);
  result.reference_point = reference_from(objs);
  return result;
}

}  // namespace pex::mopt
