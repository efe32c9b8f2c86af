#include "pex/sim/scenario.hpp"

#include <cmath>
#include <fstream>
#include <string>

namespace pex::sim {

using nlohmann::json;

double Surface::operator()(std::span<const double> x) const {
  double v = intercept;
  for (std::size_t k = 0; k < linear.size(); ++k) v += linear[k] * x[k];
  for (const auto& t : interactions) v += t.coef * x[t.first] * x[t.second];
  return v;
}

EffectMatrix ScenarioSpec::true_cate(std::span<const double> x) const {
  EffectMatrix tau(n, m);
  for (std::size_t j = 0; j < m; ++j) {
    double control = mean_outcome(1, j, x);
    for (int i = 2; i <= n; ++i) tau(i, j) = mean_outcome(i, j, x) - control;
  }
  return tau;
}

void ScenarioSpec::validate() const {
  if (n < 1) throw Error("scenario: n must be >= 1");
  if (m < 1) throw Error("scenario: m must be >= 1");
  if (covariates.size() != d) throw Error("scenario: need one covariate law per dimension");
  for (const auto& c : covariates) {
    if (c.kind == CovariateLaw::Kind::uniform && !(c.a <= c.b)) throw Error("scenario: uniform law needs lo <= hi");
    if (c.kind == CovariateLaw::Kind::normal && !(c.b >= 0.0)) throw Error("scenario: normal law needs sigma >= 0");
  }
  if (surfaces.size() != static_cast<std::size_t>(n) * m) throw Error("scenario: need n*m outcome surfaces");
  for (const auto& s : surfaces) {
    if (s.linear.size() != d) throw Error("scenario: surface linear coefficients must have length d");
    for (const auto& t : s.interactions) {
      if (t.first >= d || t.second >= d) throw Error("scenario: interaction index out of range");
    }
  }
  if (noise_sd.size() != m) throw Error("scenario: need one noise_sd per outcome");
  for (double s : noise_sd) {
    if (!(s >= 0.0)) throw Error("scenario: noise_sd must be >= 0");
  }
  if (online_shift.size() != m) throw Error("scenario: need one online_shift per outcome");
  for (const auto& sh : online_shift) {
    if (!(sh.gamma > 0.0)) throw Error("scenario: online_shift gamma must be > 0");
  }
  if (outcomes.size() != m) throw Error("scenario: need one outcome spec per outcome");
}

void draw_covariates(const ScenarioSpec& s, Engine& eng, std::span<double> out) {
  for (std::size_t k = 0; k < s.d; ++k) {
    const auto& law = s.covariates[k];
    if (law.kind == CovariateLaw::Kind::uniform) {
      out[k] = std::uniform_real_distribution<double>(law.a, law.b)(eng);
    } else {
      out[k] = law.a + law.b * std::normal_distribution<double>(0.0, 1.0)(eng);
    }
  }
}

json to_json(const ScenarioSpec& s) {
  json j;
  j["n"] = s.n;
  j["m"] = s.m;
  j["d"] = s.d;
  json covs = json::array();
  for (const auto& c : s.covariates) {
    if (c.kind == CovariateLaw::Kind::uniform) {
      covs.push_back({{"law", "uniform"}, {"lo", c.a}, {"hi", c.b}});
    } else {
      covs.push_back({{"law", "normal"}, {"mu", c.a}, {"sigma", c.b}});
    }
  }
  j["covariates"] = covs;
  json surfs = json::array();
  for (int i = 1; i <= s.n; ++i) {
    for (std::size_t o = 0; o < s.m; ++o) {
      const auto& sf = s.surface(i, o);
      json inter = json::array();
      for (const auto& t : sf.interactions) inter.push_back(json::array({t.first, t.second, t.coef}));
      surfs.push_back({{"arm", i}, {"outcome", o}, {"intercept", sf.intercept}, {"linear", sf.linear},
                       {"interactions", inter}});
    }
  }
  j["surfaces"] = surfs;
  j["noise_sd"] = s.noise_sd;
  json shifts = json::array();
  for (const auto& sh : s.online_shift) shifts.push_back({{"delta", sh.delta}, {"gamma", sh.gamma}});
  j["online_shift"] = shifts;
  json outs = json::array();
  for (const auto& o : s.outcomes) outs.push_back({{"name", o.name}, {"direction", to_string(o.direction)}});
  j["outcomes"] = outs;
  j["seed"] = s.seed;
  return j;
}

ScenarioSpec scenario_from_json(const json& j) {
  try {
    ScenarioSpec s;
    s.n = j.at("n").get<int>();
    s.m = j.at("m").get<std::size_t>();
    s.d = j.at("d").get<std::size_t>();
    for (const auto& c : j.at("covariates")) {
      const auto law = c.at("law").get<std::string>();
      if (law == "uniform") {
        s.covariates.push_back(CovariateLaw::uniform(c.at("lo").get<double>(), c.at("hi").get<double>()));
      } else if (law == "normal") {
        s.covariates.push_back(CovariateLaw::normal(c.at("mu").get<double>(), c.at("sigma").get<double>()));
      } else {
        throw Error("scenario: unknown covariate law '" + law + "'");
      }
    }
    if (s.n < 1 || s.m < 1) throw Error("scenario: n and m must be >= 1");
    s.surfaces.assign(static_cast<std::size_t>(s.n) * s.m, Surface{});
    std::vector<char> seen(s.surfaces.size(), 0);
    for (const auto& sf : j.at("surfaces")) {
      int arm = sf.at("arm").get<int>();
      auto o = sf.at("outcome").get<std::size_t>();
      if (arm < 1 || arm > s.n || o >= s.m) throw Error("scenario: surface (arm, outcome) out of range");
      std::size_t idx = static_cast<std::size_t>(arm - 1) * s.m + o;
      if (seen[idx]) throw Error("scenario: duplicate surface for arm " + std::to_string(arm));
      seen[idx] = 1;
      Surface& out = s.surfaces[idx];
      out.intercept = sf.value("intercept", 0.0);
      out.linear = sf.value("linear", std::vector<double>(s.d, 0.0));
      if (sf.contains("interactions")) {
        for (const auto& t : sf.at("interactions")) {
          out.interactions.push_back({t.at(0).get<std::size_t>(), t.at(1).get<std::size_t>(), t.at(2).get<double>()});
        }
      }
    }
    for (std::size_t k = 0; k < seen.size(); ++k) {
      if (!seen[k]) throw Error("scenario: missing surface for arm " + std::to_string(k / s.m + 1));
    }
    s.noise_sd = j.value("noise_sd", std::vector<double>(s.m, 0.0));
    if (j.contains("online_shift")) {
      for (const auto& sh : j.at("online_shift")) {
        s.online_shift.push_back({sh.value("delta", 0.0), sh.value("gamma", 1.0)});
      }
    } else {
      s.online_shift.assign(s.m, OnlineShift{});
    }
    if (j.contains("outcomes")) {
      for (const auto& o : j.at("outcomes")) {
        s.outcomes.push_back({o.at("name").get<std::string>(), parse_direction(o.value("direction", "maximize"))});
      }
    } else {
      s.outcomes = default_outcome_specs(s.m);
    }
    s.seed = j.value("seed", std::uint64_t{0});
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw Error(std::string("scenario JSON: ") + e.what());
  }
}

ScenarioSpec load_scenario(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open scenario file " + path);
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw Error("scenario file " + path + ": " + e.what());
  }
  return scenario_from_json(j);
}

ScenarioSpec benchmark_scenario(std::uint64_t seed) {
  ScenarioSpec s;
  s.n = 2;
  s.m = 2;
  s.d = 3;
  s.covariates = {CovariateLaw::normal(0.0, 1.0), CovariateLaw::normal(0.0, 1.0), CovariateLaw::uniform(-1.0, 1.0)};
  Surface c0{1.0, {0.5, 0.3, 0.0}, {}};
  Surface c1{2.0, {0.2, 0.0, -0.4}, {}};
  // arm 2 = control + effect. Engagement effect 0.3 + 1.5 x0 + 0.3 x0 x1
  // flips sign across units; retention effect -0.2 + 0.15 x1 - 0.1 x2 is
  // small and mostly negative, so the two ATEs differ in sign and scale.
  Surface t0{1.3, {2.0, 0.3, 0.0}, {{0, 1, 0.3}}};
  Surface t1{1.8, {0.2, 0.15, -0.5}, {}};
  s.surfaces = {c0, c1, t0, t1};
  s.noise_sd = {1.0, 1.0};
  s.online_shift = {OnlineShift{}, OnlineShift{}};
  s.outcomes = {{"engagement", Direction::maximize}, {"retention", Direction::maximize}};
  s.seed = seed;
  return s;
}

ScenarioSpec null_scenario(std::uint64_t seed) {
  ScenarioSpec s = benchmark_scenario(seed);
  s.surfaces[2] = s.surfaces[0];
  s.surfaces[3] = s.surfaces[1];
  return s;
}

}  // namespace pex::sim
