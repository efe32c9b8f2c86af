#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pex/core/types.hpp"
#include "pex/hte/learners.hpp"
#include "pex/ope/ope.hpp"
#include "pex/sim/scenario.hpp"

namespace pex::workflow {

inline constexpr int kSchemaVersion = 1;

enum class Preference { hv_contribution, primary_outcome };

struct ExperimentConfig {
  // Exactly one data source: a simulated scenario, or an external log.
  std::optional<sim::ScenarioSpec> scenario;
  std::string log_path;  // absolute after loading
  int log_arms = 0;      // arm count of the external log

  std::vector<OutcomeSpec> outcomes;
  hte::BaseLearnerSpec learner;

  struct Ope {
    ope::Estimator estimator = ope::Estimator::dr;
    std::size_t bootstrap = 200;
    double ci_level = 0.95;
    double propensity_clip = 0.0;
  } ope;

  struct Phase1 {
    std::size_t n_train = 20000;   // simulated log size
    std::size_t budget = 40;
    double ope_fraction = 0.5;     // share of the log held out for policy evaluation
    bool weights_only_baseline = true;
    double max_relative_gap = 0.25;  // calibration gate
    double abs_gap_floor = 0.05;     // gaps below this never trip the gate
  } phase1;

  struct Phase2 {
    std::size_t k = 8;
    std::size_t rounds = 4;
    std::size_t units_per_round = 20000;
    Preference recommend = Preference::hv_contribution;
  } phase2;

  struct Launch {
    std::size_t population = 10000;
    std::size_t exposures = 2;  // visits per unit; later visits hit the assignment cache
    double holdout_fraction = 0.05;
  } launch;

  struct Seeds {
    std::uint64_t data = 1;
    std::uint64_t model = 2;
    std::uint64_t search = 3;
    std::uint64_t online = 4;
    std::uint64_t launch = 5;
  } seeds;

  int arms() const { return scenario ? scenario->n : log_arms; }
};

/// Parses and validates a config document. Relative paths resolve against
/// `base_dir`. Throws pex::Error naming the offending field.
ExperimentConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Normalized form: defaults filled in, scenario inlined.
nlohmann::json to_json(const ExperimentConfig& c);

/// Replaces every seed with one derived from `seed`.
void override_seeds(ExperimentConfig& c, std::uint64_t seed);

/// 16 hex digits naming the run directory.
std::string config_hash(const ExperimentConfig& c);

std::string_view to_string(Preference p);

}  // namespace pex::workflow
