#include "pex/workflow/config.hpp"

#include <fstream>
#include <set>

#include "pex/core/random.hpp"

namespace pex::workflow {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw Error("config: '" + where + "' must be an object");
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw Error("config: unknown key '" + key + "' in " + where);
  }
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error("config: '" + where + "." + key + "' has the wrong type");
  }
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw Error("config: " + msg);
}

sim::ScenarioSpec builtin_scenario(const std::string& name) {
  if (name == "benchmark") return sim::benchmark_scenario();
  if (name == "null") return sim::null_scenario();
  throw Error("config: unknown built-in scenario '" + name + "'");
}

}  // namespace

std::string_view to_string(Preference p) {
  return p == Preference::hv_contribution ? "hv_contribution" : "primary_outcome";
}

ExperimentConfig config_from_json(const json& j, const fs::path& base_dir) {
  reject_unknown(j,
                 {"schema_version", "scenario", "scenario_path", "log_path", "arms", "outcomes", "learner", "ope",
                  "phase1", "phase2", "launch", "seeds"},
                 "config");
  int version = 0;
  read(j, "schema_version", version, "config");
  require(version == kSchemaVersion,
          "schema_version must be " + std::to_string(kSchemaVersion) + " (got " + std::to_string(version) + ")");

  ExperimentConfig c;
  const int sources = int(j.contains("scenario")) + int(j.contains("scenario_path")) + int(j.contains("log_path"));
  require(sources == 1, "exactly one of scenario, scenario_path, log_path is required");
  try {
    if (j.contains("scenario")) {
      const json& s = j.at("scenario");
      c.scenario = s.is_string() ? builtin_scenario(s.get<std::string>()) : sim::scenario_from_json(s);
    } else if (j.contains("scenario_path")) {
      fs::path p = base_dir / j.at("scenario_path").get<std::string>();
      require(fs::exists(p), "scenario file " + p.string() + " does not exist");
      c.scenario = sim::load_scenario(p.string());
    } else {
      fs::path p = base_dir / j.at("log_path").get<std::string>();
      require(fs::exists(p), "log file " + p.string() + " does not exist");
      c.log_path = fs::absolute(p).lexically_normal().string();
      read(j, "arms", c.log_arms, "config");
      require(c.log_arms >= 1, "arms >= 1 is required with log_path");
    }
  } catch (const json::exception& e) {
    throw Error(std::string("config: ") + e.what());
  }
  if (c.scenario) require(!j.contains("arms"), "arms is only valid with log_path");

  if (j.contains("outcomes")) {
    for (const auto& o : j.at("outcomes")) {
      reject_unknown(o, {"name", "direction"}, "outcomes[]");
      OutcomeSpec spec;
      read(o, "name", spec.name, "outcomes[]");
      spec.direction = parse_direction(o.value("direction", std::string("maximize")));
      c.outcomes.push_back(spec);
    }
  } else if (c.scenario) {
    c.outcomes = c.scenario->outcomes;
  }
  require(!c.outcomes.empty(), "outcomes are required with log_path");
  if (c.scenario) {
    require(c.outcomes.size() == c.scenario->m, "outcome count differs from the scenario");
    c.scenario->outcomes = c.outcomes;
  }

  if (j.contains("learner")) c.learner = hte::learner_spec_from_json(j.at("learner"));

  if (j.contains("ope")) {
    const json& o = j.at("ope");
    reject_unknown(o, {"estimator", "bootstrap", "ci_level", "propensity_clip"}, "ope");
    if (o.contains("estimator")) c.ope.estimator = ope::parse_estimator(o.at("estimator").get<std::string>());
    read(o, "bootstrap", c.ope.bootstrap, "ope");
    read(o, "ci_level", c.ope.ci_level, "ope");
    read(o, "propensity_clip", c.ope.propensity_clip, "ope");
  }
  require(c.ope.bootstrap == 0 || c.ope.bootstrap >= 100, "ope.bootstrap must be 0 or >= 100");
  require(c.ope.ci_level > 0.0 && c.ope.ci_level < 1.0, "ope.ci_level must lie in (0,1)");
  require(c.ope.propensity_clip >= 0.0 && c.ope.propensity_clip < 1.0, "ope.propensity_clip must lie in [0,1)");

  if (j.contains("phase1")) {
    const json& p = j.at("phase1");
    reject_unknown(p,
                   {"n_train", "budget", "ope_fraction", "weights_only_baseline", "max_relative_gap", "abs_gap_floor"},
                   "phase1");
    read(p, "n_train", c.phase1.n_train, "phase1");
    read(p, "budget", c.phase1.budget, "phase1");
    read(p, "ope_fraction", c.phase1.ope_fraction, "phase1");
    read(p, "weights_only_baseline", c.phase1.weights_only_baseline, "phase1");
    read(p, "max_relative_gap", c.phase1.max_relative_gap, "phase1");
    read(p, "abs_gap_floor", c.phase1.abs_gap_floor, "phase1");
  }
  require(c.phase1.n_train >= 10, "phase1.n_train must be >= 10");
  require(c.phase1.ope_fraction > 0.0 && c.phase1.ope_fraction < 1.0, "phase1.ope_fraction must lie in (0,1)");
  require(c.phase1.max_relative_gap > 0.0, "phase1.max_relative_gap must be positive");
  require(c.phase1.abs_gap_floor >= 0.0, "phase1.abs_gap_floor must be non-negative");

  if (j.contains("phase2")) {
    const json& p = j.at("phase2");
    reject_unknown(p, {"k", "rounds", "units_per_round", "recommend"}, "phase2");
    read(p, "k", c.phase2.k, "phase2");
    read(p, "rounds", c.phase2.rounds, "phase2");
    read(p, "units_per_round", c.phase2.units_per_round, "phase2");
    if (p.contains("recommend")) {
      const auto r = p.at("recommend").get<std::string>();
      if (r == "hv_contribution") c.phase2.recommend = Preference::hv_contribution;
      else if (r == "primary_outcome") c.phase2.recommend = Preference::primary_outcome;
      else throw Error("config: phase2.recommend must be hv_contribution or primary_outcome");
    }
  }
  require(c.phase2.k >= 1, "phase2.k must be >= 1");
  require(c.phase2.rounds >= 1, "phase2.rounds must be >= 1");
  require(c.phase2.units_per_round >= 1, "phase2.units_per_round must be >= 1");

  if (j.contains("launch")) {
    const json& p = j.at("launch");
    reject_unknown(p, {"population", "exposures", "holdout_fraction"}, "launch");
    read(p, "population", c.launch.population, "launch");
    read(p, "exposures", c.launch.exposures, "launch");
    read(p, "holdout_fraction", c.launch.holdout_fraction, "launch");
  }
  require(c.launch.population >= 1, "launch.population must be >= 1");
  require(c.launch.exposures >= 1, "launch.exposures must be >= 1");
  require(c.launch.holdout_fraction > 0.0 && c.launch.holdout_fraction < 1.0,
          "launch.holdout_fraction must lie in (0,1)");

  if (j.contains("seeds")) {
    const json& s = j.at("seeds");
    reject_unknown(s, {"data", "model", "search", "online", "launch"}, "seeds");
    read(s, "data", c.seeds.data, "seeds");
    read(s, "model", c.seeds.model, "seeds");
    read(s, "search", c.seeds.search, "seeds");
    read(s, "online", c.seeds.online, "seeds");
    read(s, "launch", c.seeds.launch, "seeds");
  }
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error("config " + path.string() + ": " + e.what());
  }
  return config_from_json(j, path.parent_path());
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["schema_version"] = kSchemaVersion;
  if (c.scenario) {
    j["scenario"] = sim::to_json(*c.scenario);
  } else {
    j["log_path"] = c.log_path;
    j["arms"] = c.log_arms;
  }
  json outs = json::array();
  for (const auto& o : c.outcomes) outs.push_back({{"name", o.name}, {"direction", to_string(o.direction)}});
  j["outcomes"] = outs;
  j["learner"] = hte::to_json(c.learner);
  j["ope"] = {{"estimator", ope::to_string(c.ope.estimator)},
              {"bootstrap", c.ope.bootstrap},
              {"ci_level", c.ope.ci_level},
              {"propensity_clip", c.ope.propensity_clip}};
  j["phase1"] = {{"n_train", c.phase1.n_train},
                 {"budget", c.phase1.budget},
                 {"ope_fraction", c.phase1.ope_fraction},
                 {"weights_only_baseline", c.phase1.weights_only_baseline},
                 {"max_relative_gap", c.phase1.max_relative_gap},
                 {"abs_gap_floor", c.phase1.abs_gap_floor}};
  j["phase2"] = {{"k", c.phase2.k},
                 {"rounds", c.phase2.rounds},
                 {"units_per_round", c.phase2.units_per_round},
                 {"recommend", to_string(c.phase2.recommend)}};
  j["launch"] = {{"population", c.launch.population},
                 {"exposures", c.launch.exposures},
                 {"holdout_fraction", c.launch.holdout_fraction}};
  j["seeds"] = {{"data", c.seeds.data},
                {"model", c.seeds.model},
                {"search", c.seeds.search},
                {"online", c.seeds.online},
                {"launch", c.seeds.launch}};
  return j;
}

void override_seeds(ExperimentConfig& c, std::uint64_t seed) {
  c.seeds.data = derive_seed(seed, 1);
  c.seeds.model = derive_seed(seed, 2);
  c.seeds.search = derive_seed(seed, 3);
  c.seeds.online = derive_seed(seed, 4);
  c.seeds.launch = derive_seed(seed, 5);
}

std::string config_hash(const ExperimentConfig& c) {
  // k and rounds only steer which policies are tried online; they are left
  // out so that changing them reuses the phase-1 artifacts.
  json j = to_json(c);
  j["phase2"].erase("k");
  j["phase2"].erase("rounds");
  const std::string text = j.dump();
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  static const char* hex = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[i] = hex[h & 0xf];
  return out;
}

}  // namespace pex::workflow
