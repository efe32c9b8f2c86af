#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <unistd.h>

#include <json.hpp>

#include "pex/core/random.hpp"
#include "pex/workflow/workflow.hpp"

using namespace pex;
using namespace pex::workflow;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json small_config() {
  return json::parse(R"({
    "schema_version": 1,
    "scenario": "benchmark",
    "learner": {"kind": "gbt", "tree_count": 15, "max_depth": 3, "learning_rate": 0.1, "min_samples_leaf": 20},
    "ope": {"estimator": "dr", "bootstrap": 100},
    "phase1": {"n_train": 4000, "budget": 8},
    "phase2": {"k": 4, "rounds": 2, "units_per_round": 4000, "recommend": "primary_outcome"},
    "launch": {"population": 2000, "exposures": 2, "holdout_fraction": 0.05},
    "seeds": {"data": 11, "model": 12, "search": 13, "online": 14, "launch": 15}
  })");
}

class Workspace : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    root = fs::temp_directory_path() / ("pex_wf_" + std::string(info->name()) + "_" + std::to_string(::getpid()));
    fs::remove_all(root);
    fs::create_directories(root);
  }
  void TearDown() override { fs::remove_all(root); }

  std::string write_config(const json& j, const std::string& name = "config.json") {
    auto p = root / name;
    std::ofstream(p) << j.dump(2);
    return p.string();
  }

  int run(const std::string& cmd, CommandOptions o) {
    if (o.out == "runs") o.out = root / "runs";
    out.str("");
    err.str("");
    return run_command(cmd, o, out, err);
  }

  fs::path run_dir(const CommandOptions& o) { return open_run(o).run_dir; }

  CommandOptions opts(const std::string& config) {
    CommandOptions o;
    o.config_path = config;
    o.out = root / "runs";
    return o;
  }

  fs::path root;
  std::ostringstream out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

std::size_t count_lines(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) n += !line.empty();
  return n;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file() || e.path().filename() == ".lock") continue;
    files[fs::relative(e.path(), dir).string()] = slurp(e.path());
  }
  return files;
}

}  // namespace

TEST_F(Workspace, FullPipelineIsReproducible) {
  auto cfg = write_config(small_config());
  auto a = opts(cfg), b = opts(cfg);
  b.out = root / "again";
  for (const char* cmd : {"phase1", "phase2", "launch", "backtest", "report"}) {
    ASSERT_EQ(run(cmd, a), kExitOk) << cmd << ": " << err.str();
    ASSERT_EQ(run(cmd, b), kExitOk) << cmd << ": " << err.str();
  }
  auto da = run_dir(a), db = run_dir(b);
  auto sa = snapshot(da), sb = snapshot(db);
  EXPECT_EQ(sa.size(), sb.size());
  for (const auto& [name, bytes] : sa) EXPECT_EQ(bytes, sb[name]) << name;

  auto cands = read_json(da / artifact::candidates);
  EXPECT_EQ(cands.at("contrasts").get<int>(), 2);
  EXPECT_LE(cands.at("candidates").size(), 4u);
  EXPECT_EQ(cands.at("candidates").size(), cands.at("selected").get<std::size_t>());

  // Two rounds: the initial batch plus one proposal.
  EXPECT_EQ(count_lines(da / artifact::online_history), cands.at("candidates").size() + 1);

  auto rows = count_lines(da / artifact::offline_front);
  EXPECT_EQ(count_lines(da / "report" / "offline_front.csv"), rows + 1);
  EXPECT_TRUE(fs::exists(da / "report" / "weights_only_front.csv"));
  EXPECT_TRUE(fs::exists(da / "report" / "calibration.csv"));
  EXPECT_EQ(count_lines(da / "report" / "online_history.csv"), cands.at("candidates").size() + 2);

  auto bt = read_json(da / artifact::backtest);
  EXPECT_EQ(bt.at("schema"), "pex-backtest/1");
  for (const auto& o : bt.at("outcomes")) {
    EXPECT_EQ(o.at("n_launched").get<std::size_t>() + o.at("n_holdout").get<std::size_t>(), 2000u);
    EXPECT_LE(o.at("ci_low").get<double>(), o.at("difference").get<double>());
    EXPECT_GE(o.at("ci_high").get<double>(), o.at("difference").get<double>());
  }

  // Rerunning a command in place rewrites identical bytes.
  ASSERT_EQ(run("report", a), kExitOk);
  EXPECT_EQ(snapshot(da), sa);
}

TEST_F(Workspace, SingleRoundReportsOnlyInitialCandidates) {
  auto cfg = write_config(small_config());
  auto o = opts(cfg);
  o.rounds = 1;
  ASSERT_EQ(run("phase1", o), kExitOk) << err.str();
  ASSERT_EQ(run("phase2", o), kExitOk) << err.str();
  auto dir = run_dir(o);
  auto k = read_json(dir / artifact::candidates).at("candidates").size();
  EXPECT_EQ(count_lines(dir / artifact::online_history), k);
}

TEST_F(Workspace, CandidateIndexOverridesRecommendation) {
  auto cfg = write_config(small_config());
  auto o = opts(cfg);
  ASSERT_EQ(run("phase1", o), kExitOk) << err.str();
  o.candidate_index = 1;
  ASSERT_EQ(run("phase2", o), kExitOk) << err.str();
  EXPECT_EQ(read_json(run_dir(o) / artifact::recommendation).at("index").get<int>(), 1);
  o.candidate_index = 999;
  EXPECT_EQ(run("phase2", o), kExitError);
}

TEST_F(Workspace, BudgetBelowMinimumFails) {
  auto j = small_config();
  j["phase1"]["budget"] = 3;
  auto o = opts(write_config(j));
  EXPECT_EQ(run("phase1", o), kExitError);
  EXPECT_NE(err.str().find("6"), std::string::npos) << err.str();
}

TEST_F(Workspace, MissingArtifactsFail) {
  auto o = opts(write_config(small_config()));
  EXPECT_EQ(run("phase2", o), kExitError);
  EXPECT_NE(err.str().find("missing artifact"), std::string::npos) << err.str();
  EXPECT_EQ(run("launch", o), kExitError);
  EXPECT_EQ(run("backtest", o), kExitError);
  EXPECT_EQ(run("report", o), kExitError);
  EXPECT_EQ(run("nonsense", o), kExitError);
}

TEST_F(Workspace, CalibrationGateNeedsAccept) {
  auto j = small_config();
  j["phase1"]["max_relative_gap"] = 1e-9;
  j["phase1"]["abs_gap_floor"] = 0.0;
  auto o = opts(write_config(j));
  EXPECT_EQ(run("phase1", o), kExitCalibrationGate);
  EXPECT_TRUE(fs::exists(run_dir(o) / artifact::calibration));
  EXPECT_FALSE(fs::exists(run_dir(o) / artifact::candidates));
  o.accept = true;
  EXPECT_EQ(run("phase1", o), kExitOk) << err.str();
  EXPECT_TRUE(fs::exists(run_dir(o) / artifact::candidates));
}

TEST_F(Workspace, CacheIsStickyAcrossRetraining) {
  auto o = opts(write_config(small_config()));
  for (const char* cmd : {"phase1", "phase2", "launch"}) ASSERT_EQ(run(cmd, o), kExitOk) << cmd << err.str();
  auto dir = run_dir(o);
  auto first = read_json(dir / artifact::assignment_cache);
  auto manifest = read_json(dir / artifact::launch_manifest);
  EXPECT_EQ(manifest.at("cache_hits").get<std::size_t>(), 2000u);  // every second exposure

  // Holdout: about 5% of units, arms uniform over both arms.
  std::size_t holdout = 0, arm2 = 0;
  for (const auto& [id, e] : first.items()) {
    if (!e.at("holdout").get<bool>()) continue;
    ++holdout;
    arm2 += e.at("arm").get<int>() == 2;
    EXPECT_EQ(e.at("holdout").get<bool>(), in_holdout(15, id, 0.05));
  }
  EXPECT_NEAR(holdout, 100.0, 4 * std::sqrt(2000 * 0.05 * 0.95));
  EXPECT_NEAR(arm2, holdout / 2.0, 4 * std::sqrt(holdout / 4.0));

  o.retrain = true;
  ASSERT_EQ(run("phase1", o), kExitOk) << err.str();
  o.retrain = false;
  o.candidate_index = 0;
  ASSERT_EQ(run("phase2", o), kExitOk) << err.str();
  ASSERT_EQ(run("launch", o), kExitOk) << err.str();
  auto second = read_json(dir / artifact::assignment_cache);
  EXPECT_EQ(second, first);
  EXPECT_EQ(read_json(dir / artifact::launch_manifest).at("cache_hits").get<std::size_t>(), 4000u);
}

TEST_F(Workspace, NullScenarioBacktestCoversZero) {
  auto j = small_config();
  j["scenario"] = "null";
  j["launch"]["population"] = 20000;
  j["launch"]["holdout_fraction"] = 0.05;
  auto o = opts(write_config(j));
  for (const char* cmd : {"phase1", "phase2", "launch", "backtest"}) {
    ASSERT_EQ(run(cmd, o), kExitOk) << cmd << err.str();
  }
  auto bt = read_json(run_dir(o) / artifact::backtest);
  for (const auto& e : bt.at("outcomes")) {
    EXPECT_LE(e.at("ci_low").get<double>(), 0.0);
    EXPECT_GE(e.at("ci_high").get<double>(), 0.0);
  }
}

TEST_F(Workspace, SimulateWritesLog) {
  auto o = opts(write_config(small_config()));
  ASSERT_EQ(run("simulate", o), kExitOk) << err.str();
  EXPECT_EQ(count_lines(run_dir(o) / artifact::simulated_log), 4001u);
}

TEST_F(Workspace, ExternalLogConfig) {
  auto o = opts(write_config(small_config()));
  ASSERT_EQ(run("simulate", o), kExitOk);
  auto log = run_dir(o) / artifact::simulated_log;
  auto j = small_config();
  j.erase("scenario");
  j["log_path"] = log.string();
  j["arms"] = 2;
  j["outcomes"] = json::parse(R"([{"name": "y_0"}, {"name": "y_1"}])");
  j["phase1"]["weights_only_baseline"] = false;
  auto e = opts(write_config(j, "external.json"));
  ASSERT_EQ(run("phase1", e), kExitOk) << err.str();
  EXPECT_EQ(run("phase2", e), kExitError);
  EXPECT_NE(err.str().find("scenario"), std::string::npos);
}

TEST(Config, RejectsBadDocuments) {
  auto base = small_config();
  auto bad = [&](auto mutate) {
    json j = base;
    mutate(j);
    EXPECT_THROW(config_from_json(j, "."), Error) << j.dump();
  };
  bad([](json& j) { j["unknown"] = 1; });
  bad([](json& j) { j["phase1"]["ope_fraction"] = 1.5; });
  bad([](json& j) { j["launch"]["holdout_fraction"] = -0.1; });
  bad([](json& j) { j["schema_version"] = 99; });
  bad([](json& j) { j["scenario"] = "nope"; });
  bad([](json& j) { j["log_path"] = "x.csv"; });
  bad([](json& j) { j.erase("scenario"); });
  bad([](json& j) { j["ope"]["estimator"] = "magic"; });
  bad([](json& j) { j["phase2"]["recommend"] = "vibes"; });
  bad([](json& j) { j["seeds"]["data"] = "one"; });
  bad([](json& j) {
    j.erase("scenario");
    j["scenario_path"] = "/definitely/missing.json";
  });
}

TEST(Config, HashIgnoresOnlinePhaseKnobs) {
  auto c = config_from_json(small_config(), ".");
  auto h = config_hash(c);
  EXPECT_EQ(h.size(), 16u);
  auto d = c;
  d.phase2.k = 2;
  d.phase2.rounds = 7;
  EXPECT_EQ(config_hash(d), h);
  d.seeds.data = 99;
  EXPECT_NE(config_hash(d), h);
  auto e = c;
  override_seeds(e, 42);
  EXPECT_EQ(e.seeds.data, derive_seed(42, 1));
  EXPECT_EQ(config_hash(config_from_json(to_json(c), ".")), h);
}

TEST(Holdout, MembershipIsStableAndNearFraction) {
  std::size_t in = 0;
  for (int i = 0; i < 20000; ++i) {
    auto id = "p" + std::to_string(i);
    bool h = in_holdout(5, id, 0.05);
    EXPECT_EQ(h, in_holdout(5, id, 0.05));
    in += h;
  }
  EXPECT_NEAR(in, 1000.0, 4 * std::sqrt(20000 * 0.05 * 0.95));
}
