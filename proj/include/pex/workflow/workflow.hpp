#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include "pex/workflow/config.hpp"

namespace pex::workflow {

/// Exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitCalibrationGate = 2;

struct CommandOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out = "runs";
  std::optional<std::size_t> k;
  std::optional<std::size_t> rounds;
  bool accept = false;
  std::optional<std::size_t> candidate_index;
  bool retrain = false;
};

/// Everything a command needs: the loaded config and its run directory.
struct RunContext {
  ExperimentConfig config;
  std::filesystem::path run_dir;
};

RunContext open_run(const CommandOptions& opts);

/// Artifact file names inside a run directory.
namespace artifact {
inline constexpr const char* config = "config.json";
inline constexpr const char* simulated_log = "simulated_log.csv";
inline constexpr const char* model = "cate_model.json";
inline constexpr const char* calibration = "calibration.json";
inline constexpr const char* offline_front = "offline_front.jsonl";
inline constexpr const char* offline_archive = "offline_archive.jsonl";
inline constexpr const char* offline_meta = "offline_front_meta.json";
inline constexpr const char* weights_only_front = "weights_only_front.jsonl";
inline constexpr const char* weights_only_meta = "weights_only_front_meta.json";
inline constexpr const char* candidates = "candidates.json";
inline constexpr const char* online_history = "online_history.jsonl";
inline constexpr const char* online_front = "online_front.jsonl";
inline constexpr const char* offline_vs_online = "offline_vs_online.json";
inline constexpr const char* recommendation = "recommendation.json";
inline constexpr const char* launch_manifest = "launch_manifest.json";
inline constexpr const char* assignment_cache = "assignment_cache.json";
inline constexpr const char* launch_exposures = "launch_exposures.csv";
inline constexpr const char* holdout_log = "holdout_online_log.csv";
inline constexpr const char* backtest = "backtest.json";
inline constexpr const char* report_dir = "report";
}  // namespace artifact

int cmd_simulate(const RunContext& ctx, const CommandOptions& opts, std::ostream& out);
int cmd_phase1(const RunContext& ctx, const CommandOptions& opts, std::ostream& out);
int cmd_phase2(const RunContext& ctx, const CommandOptions& opts, std::ostream& out);
int cmd_launch(const RunContext& ctx, const CommandOptions& opts, std::ostream& out);
int cmd_backtest(const RunContext& ctx, const CommandOptions& opts, std::ostream& out);
int cmd_report(const RunContext& ctx, const CommandOptions& opts, std::ostream& out);

/// Opens the run, takes the run-directory lock and dispatches. Errors are
/// printed to `err` and mapped to kExitError.
int run_command(std::string_view command, const CommandOptions& opts, std::ostream& out, std::ostream& err);

/// Deterministic holdout membership for a launched unit.
bool in_holdout(std::uint64_t seed, const std::string& unit_id, double fraction);

}  // namespace pex::workflow
