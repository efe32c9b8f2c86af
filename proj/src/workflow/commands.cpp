#include "pex/workflow/workflow.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "pex/core/format.hpp"
#include "pex/core/log.hpp"
#include "pex/core/random.hpp"
#include "pex/core/stats.hpp"
#include "pex/hte/cate.hpp"
#include "pex/mopt/hypervolume.hpp"
#include "pex/mopt/optimize.hpp"
#include "pex/sim/simulator.hpp"

namespace pex::workflow {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Written through a temporary file so a crash never leaves half an artifact.
void write_text(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot write " + tmp.string());
    os << text;
    if (!os) throw Error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

void write_jsonl(const fs::path& path, const std::vector<json>& rows) {
  std::string text;
  for (const auto& r : rows) text += r.dump() + "\n";
  write_text(path, text);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("missing artifact " + path.filename().string() + " in " + path.parent_path().string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw Error("corrupt artifact " + path.string() + ": " + e.what());
  }
}

std::vector<json> read_jsonl(const fs::path& path) {
  std::vector<json> rows;
  std::istringstream in(read_text(path));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      rows.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw Error("corrupt artifact " + path.string() + ": " + e.what());
    }
  }
  return rows;
}

const sim::ScenarioSpec& require_scenario(const RunContext& ctx, std::string_view command) {
  if (!ctx.config.scenario) {
    throw Error(std::string(command) + " needs a simulated scenario; the config only names an external log");
  }
  return *ctx.config.scenario;
}

json bounds_json(const mopt::SearchBounds& b) { return {{"lo", b.lo}, {"hi", b.hi}}; }

mopt::SearchBounds bounds_from_json(const json& j) {
  mopt::SearchBounds b;
  b.lo = j.at("lo").get<std::vector<double>>();
  b.hi = j.at("hi").get<std::vector<double>>();
  b.validate();
  return b;
}

json point_json(const mopt::ParetoPoint& p) {
  std::vector<double> values, se, lo, hi;
  for (const auto& o : p.estimate.outcomes) {
    values.push_back(o.value);
    se.push_back(o.std_error);
    lo.push_back(o.ci_low);
    hi.push_back(o.ci_high);
  }
  return {{"params", policy::to_json(p.params)},
          {"objectives", p.objectives},
          {"values", values},
          {"stderr", se},
          {"ci_low", lo},
          {"ci_high", hi},
          {"ci_level", p.estimate.ci_level},
          {"bootstrapped", p.estimate.bootstrapped},
          {"estimator", ope::to_string(p.estimate.estimator)},
          {"iteration", p.iteration},
          {"origin", p.origin}};
}

LogDataset load_training_log(const RunContext& ctx) {
  const auto& c = ctx.config;
  LogDataset log = c.scenario ? sim::generate_log(*c.scenario, c.phase1.n_train, c.seeds.data)
                              : read_log_csv(c.log_path, c.log_arms, c.outcomes);
  log.outcome_specs = c.outcomes;
  auto report = validate_log(log, false);
  if (!report.ok()) {
    const auto& v = report.violations.front();
    throw Error("training log is invalid (" + std::to_string(report.violations.size()) +
                " problems), first: record " + std::to_string(v.record) + ": " + v.message);
  }
  return log;
}

struct FrontRun {
  mopt::OfflineResult result;
  double hypervolume = 0.0;
};

FrontRun run_front(const RunContext& ctx, const ope::PolicyEvaluator& evaluator, const mopt::SearchBounds& bounds) {
  const auto& c = ctx.config;
  mopt::OfflineOptions oo;
  oo.budget = c.phase1.budget;
  oo.seed = c.seeds.search;
  oo.estimator = c.ope.estimator;
  FrontRun run{mopt::optimize_offline(evaluator, c.outcomes, bounds, oo), 0.0};
  if (c.ope.bootstrap > 0) {
    for (std::size_t i = 0; i < run.result.front.points.size(); ++i) {
      auto& p = run.result.front.points[i];
      p.estimate = evaluator.bootstrap(c.ope.estimator, evaluator.assign(p.params), c.ope.bootstrap,
                                       c.ope.ci_level, derive_seed(c.seeds.search, 9000 + i));
    }
  }
  auto objs = mopt::objectives_of(run.result.front.points);
  run.hypervolume = mopt::hypervolume_value(objs, run.result.front.reference_point);
  return run;
}

void write_front(const fs::path& dir, const char* front_file, const char* meta_file, const FrontRun& run,
                 const mopt::SearchBounds& bounds, std::size_t budget) {
  std::vector<json> rows;
  for (const auto& p : run.result.front.points) rows.push_back(point_json(p));
  write_jsonl(dir / front_file, rows);
  write_json(dir / meta_file, {{"reference_point", run.result.front.reference_point},
                               {"hypervolume", run.hypervolume},
                               {"points", run.result.front.points.size()},
                               {"evaluated", run.result.archive.size()},
                               {"failed", run.result.failed},
                               {"surrogate_fallbacks", run.result.surrogate_fallbacks},
                               {"budget", budget},
                               {"bounds", bounds_json(bounds)}});
}

double welch_z(double level) { return normal_quantile(0.5 + level / 2.0); }

std::string csv_num(double v) { return format_double(v); }

}  // namespace

bool in_holdout(std::uint64_t seed, const std::string& unit_id, double fraction) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : unit_id) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return unit_interval(derive_seed(seed, h)) < fraction;
}

RunContext open_run(const CommandOptions& opts) {
  if (opts.config_path.empty()) throw Error("--config is required");
  RunContext ctx{load_config(opts.config_path), {}};
  if (opts.seed) override_seeds(ctx.config, *opts.seed);
  if (opts.k) {
    if (*opts.k < 1) throw Error("--k must be >= 1");
    ctx.config.phase2.k = *opts.k;
  }
  if (opts.rounds) {
    if (*opts.rounds < 1) throw Error("--rounds must be >= 1");
    ctx.config.phase2.rounds = *opts.rounds;
  }
  ctx.run_dir = opts.out / config_hash(ctx.config);
  return ctx;
}

int cmd_simulate(const RunContext& ctx, const CommandOptions&, std::ostream& out) {
  const auto& s = require_scenario(ctx, "simulate");
  LogDataset log = sim::generate_log(s, ctx.config.phase1.n_train, ctx.config.seeds.data);
  std::ostringstream csv;
  write_log_csv(csv, log);
  write_text(ctx.run_dir / artifact::simulated_log, csv.str());
  write_json(ctx.run_dir / artifact::config, to_json(ctx.config));
  out << "simulated " << log.size() << " records -> " << (ctx.run_dir / artifact::simulated_log).string() << "\n";
  return kExitOk;
}

int cmd_phase1(const RunContext& ctx, const CommandOptions& opts, std::ostream& out) {
  const auto& c = ctx.config;
  const std::size_t min_budget = mopt::minimum_budget(c.arms(), c.outcomes.size());
  if (c.phase1.budget < min_budget) {
    throw Error("phase1.budget " + std::to_string(c.phase1.budget) + " is below the minimum " +
                std::to_string(min_budget) + " for " + std::to_string(c.arms()) + " arms and " +
                std::to_string(c.outcomes.size()) + " outcomes");
  }
  write_json(ctx.run_dir / artifact::config, to_json(c));

  LogDataset log = load_training_log(ctx);
  if (opts.retrain) {
    const fs::path extra = ctx.run_dir / artifact::holdout_log;
    if (!fs::exists(extra)) throw Error("--retrain needs " + extra.string() + " (run launch first)");
    LogDataset h = read_log_csv(extra.string(), log.n, c.outcomes);
    if (h.d != log.d) throw Error("holdout log has a different covariate count");
    log.records.insert(log.records.end(), h.records.begin(), h.records.end());
    out << "retraining with " << h.size() << " holdout records\n";
  }
  LogSplit split = split_log(log, c.phase1.ope_fraction, derive_seed(c.seeds.data, 11));

  hte::CateModel model = hte::fit_t_learner(split.main, c.learner, c.seeds.model);
  write_json(ctx.run_dir / artifact::model, hte::to_json(model));
  out << "fitted " << model.contrast_count() << " CATE contrasts on " << split.main.size() << " records\n";

  hte::CalibrationReport calib = hte::calibration_report(model, split.main);
  json tripped = json::array();
  for (const auto& e : calib.entries) {
    if (e.abs_gap > c.phase1.abs_gap_floor && e.rel_gap > c.phase1.max_relative_gap) {
      tripped.push_back({{"arm", e.arm}, {"outcome", e.outcome}, {"rel_gap", e.rel_gap}});
    }
  }
  json cj = hte::to_json(calib);
  cj["max_relative_gap"] = c.phase1.max_relative_gap;
  cj["abs_gap_floor"] = c.phase1.abs_gap_floor;
  cj["passed"] = tripped.empty();
  cj["tripped"] = tripped;
  cj["accepted"] = opts.accept;
  write_json(ctx.run_dir / artifact::calibration, cj);
  if (!tripped.empty() && !opts.accept) {
    out << "calibration gate: " << tripped.size()
        << " contrast(s) exceed the allowed gap; inspect calibration.json and rerun with --accept to continue\n";
    return kExitCalibrationGate;
  }

  ope::PolicyEvaluator evaluator(split.holdout, model, ope::OpeOptions{c.ope.propensity_clip});
  const AteMatrix ate = compute_ate(split.main);
  const mopt::SearchBounds bounds = mopt::default_bounds(ate, true);
  FrontRun full = run_front(ctx, evaluator, bounds);

  std::vector<json> archive;
  for (const auto& p : full.result.archive) archive.push_back(point_json(p));
  write_jsonl(ctx.run_dir / artifact::offline_archive, archive);
  write_front(ctx.run_dir, artifact::offline_front, artifact::offline_meta, full, bounds, c.phase1.budget);
  out << "offline front: " << full.result.front.points.size() << " points, hypervolume "
      << format_double(full.hypervolume) << "\n";

  if (c.phase1.weights_only_baseline) {
    const mopt::SearchBounds wb = mopt::default_bounds(ate, false);
    FrontRun plain = run_front(ctx, evaluator, wb);
    write_front(ctx.run_dir, artifact::weights_only_front, artifact::weights_only_meta, plain, wb, c.phase1.budget);
    // Both fronts scored against one reference point built from every
    // evaluation of either search.
    auto all = mopt::objectives_of(full.result.archive);
    auto more = mopt::objectives_of(plain.result.archive);
    all.insert(all.end(), more.begin(), more.end());
    const auto ref = mopt::reference_from(all);
    auto meta = read_json(ctx.run_dir / artifact::offline_meta);
    meta["comparison"] = {
        {"reference_point", ref},
        {"with_biases", mopt::hypervolume_value(mopt::objectives_of(full.result.front.points), ref)},
        {"weights_only", mopt::hypervolume_value(mopt::objectives_of(plain.result.front.points), ref)}};
    write_json(ctx.run_dir / artifact::offline_meta, meta);
    out << "weights-only front: " << plain.result.front.points.size() << " points\n";
  }

  auto objs = mopt::objectives_of(full.result.front.points);
  mopt::SubsetSelection sel = mopt::subset_select(objs, full.result.front.reference_point, c.phase2.k);
  json cands = json::array();
  for (std::size_t idx : sel.indices) {
    json row = point_json(full.result.front.points[idx]);
    row["front_index"] = idx;
    cands.push_back(row);
  }
  write_json(ctx.run_dir / artifact::candidates, {{"k", c.phase2.k},
                                                  {"selected", sel.indices.size()},
                                                  {"exhaustive", sel.exhaustive},
                                                  {"subset_hypervolume", sel.hypervolume},
                                                  {"reference_point", full.result.front.reference_point},
                                                  {"contrasts", model.contrast_count()},
                                                  {"bounds", bounds_json(bounds)},
                                                  {"candidates", cands}});
  out << "selected " << sel.indices.size() << " candidates -> " << (ctx.run_dir / artifact::candidates).string()
      << "\n";
  return kExitOk;
}

int cmd_phase2(const RunContext& ctx, const CommandOptions& opts, std::ostream& out) {
  const auto& c = ctx.config;
  const auto& scenario = require_scenario(ctx, "phase2");
  const hte::CateModel model = hte::cate_model_from_json(read_json(ctx.run_dir / artifact::model));
  const json cj = read_json(ctx.run_dir / artifact::candidates);

  std::vector<policy::PolicyParams> candidates;
  std::vector<json> offline_rows;
  for (const auto& row : cj.at("candidates")) {
    candidates.push_back(policy::policy_from_json(row.at("params")));
    offline_rows.push_back(row);
  }
  if (candidates.empty()) throw Error("candidates.json lists no candidates");

  mopt::OnlineOptions oo;
  oo.rounds = c.phase2.rounds;
  oo.units_per_round = c.phase2.units_per_round;
  oo.seed = c.seeds.online;
  oo.cap = bounds_from_json(cj.at("bounds"));
  mopt::OnlineResult res = mopt::optimize_online(scenario, candidates, model, oo);

  std::vector<json> history;
  for (std::size_t i = 0; i < res.history.size(); ++i) {
    const auto& h = res.history[i];
    history.push_back({{"index", i},
                       {"round", h.round},
                       {"initial", h.initial},
                       {"params", policy::to_json(h.params)},
                       {"mean", h.mean},
                       {"stderr", h.std_error},
                       {"objectives", h.objectives},
                       {"count", h.count}});
  }
  write_jsonl(ctx.run_dir / artifact::online_history, history);
  std::vector<json> front;
  for (std::size_t idx : res.front) front.push_back(history[idx]);
  write_jsonl(ctx.run_dir / artifact::online_front, front);

  // Offline estimate against online measurement for the initial batch.
  const std::size_t m = c.outcomes.size();
  json per_outcome = json::array();
  for (std::size_t j = 0; j < m; ++j) {
    std::vector<double> off, on;
    double gap = 0.0, se = 0.0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      off.push_back(offline_rows[i].at("values").at(j).get<double>());
      on.push_back(res.history[i].mean[j]);
      gap += std::abs(on.back() - off.back());
      se += res.history[i].std_error[j];
    }
    const double rho = spearman(off, on);
    per_outcome.push_back({{"outcome", c.outcomes[j].name},
                           {"spearman", std::isnan(rho) ? json(nullptr) : json(rho)},
                           {"mean_abs_gap", gap / static_cast<double>(candidates.size())},
                           {"mean_online_stderr", se / static_cast<double>(candidates.size())}});
  }
  json rows = json::array();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    rows.push_back({{"index", i},
                    {"offline", offline_rows[i].at("values")},
                    {"offline_stderr", offline_rows[i].at("stderr")},
                    {"online", res.history[i].mean},
                    {"online_stderr", res.history[i].std_error}});
  }
  write_json(ctx.run_dir / artifact::offline_vs_online, {{"outcomes", per_outcome}, {"candidates", rows}});

  std::size_t pick = 0;
  std::string source;
  if (opts.candidate_index) {
    pick = *opts.candidate_index;
    if (pick >= res.history.size()) {
      throw Error("--candidate-index " + std::to_string(pick) + " is out of range (history has " +
                  std::to_string(res.history.size()) + " entries)");
    }
    source = "experimenter";
  } else if (c.phase2.recommend == Preference::primary_outcome) {
    for (std::size_t i = 1; i < res.history.size(); ++i) {
      if (res.history[i].objectives[0] > res.history[pick].objectives[0]) pick = i;
    }
    source = "primary_outcome";
  } else {
    std::vector<mopt::Objectives> fobjs;
    for (std::size_t idx : res.front) fobjs.push_back(res.history[idx].objectives);
    auto contrib = mopt::hypervolume_contributions(fobjs, res.reference_point);
    std::size_t best = 0;
    for (std::size_t i = 1; i < contrib.size(); ++i) {
      if (contrib[i] > contrib[best]) best = i;
    }
    pick = res.front[best];
    source = "hv_contribution";
  }
  json rec = history[pick];
  rec["source"] = source;
  write_json(ctx.run_dir / artifact::recommendation, rec);
  out << "online: " << res.history.size() << " measurements over " << c.phase2.rounds << " round(s); recommended #"
      << pick << " (" << source << ")\n";
  return kExitOk;
}

int cmd_launch(const RunContext& ctx, const CommandOptions&, std::ostream& out) {
  const auto& c = ctx.config;
  const auto& scenario = require_scenario(ctx, "launch");
  const hte::CateModel model = hte::cate_model_from_json(read_json(ctx.run_dir / artifact::model));
  const json rec = read_json(ctx.run_dir / artifact::recommendation);
  policy::PolicyParams params;
  try {
    params = policy::policy_from_json(rec.at("params"));
  } catch (const std::exception& e) {
    throw Error(std::string("policy file invalid: ") + e.what());
  }
  if (params.weights.size() != c.outcomes.size() || params.biases.size() != static_cast<std::size_t>(c.arms())) {
    throw Error("policy file invalid: shape does not match the experiment");
  }

  const fs::path cache_path = ctx.run_dir / artifact::assignment_cache;
  json cache = fs::exists(cache_path) ? read_json(cache_path) : json::object();
  const std::size_t cached_before = cache.size();

  const int n = scenario.n;
  const std::size_t m = scenario.m;
  std::ostringstream csv;
  csv << "unit_id,exposure,arm,holdout,cache_hit";
  for (const auto& o : c.outcomes) csv << "," << o.name;
  csv << "\n";
  LogDataset holdout_log;
  holdout_log.n = n;
  holdout_log.m = m;
  holdout_log.d = scenario.d;
  holdout_log.outcome_specs = c.outcomes;

  std::size_t holdout_units = 0, cache_hits = 0, reassigned_holdout = 0;
  std::vector<double> x(scenario.d);
  for (std::size_t r = 0; r < c.launch.population; ++r) {
    const std::string id = "p" + std::to_string(r);
    Engine xe = make_engine(c.seeds.launch, r);
    sim::draw_covariates(scenario, xe, x);
    const bool holdout = in_holdout(c.seeds.launch, id, c.launch.holdout_fraction);
    holdout_units += holdout;
    for (std::size_t e = 0; e < c.launch.exposures; ++e) {
      int arm;
      bool hit = cache.contains(id);
      if (hit) {
        arm = cache[id].at("arm").get<int>();
        ++cache_hits;
      } else if (holdout) {
        Engine ae = make_engine(derive_seed(c.seeds.launch, 77), r);
        arm = 1 + static_cast<int>(std::uniform_int_distribution<int>(0, n - 1)(ae));
        cache[id] = {{"arm", arm}, {"holdout", true}};
      } else {
        arm = policy::decide(params, hte::predict_cate(model, x));
        cache[id] = {{"arm", arm}, {"holdout", false}};
      }
      if (hit && cache[id].value("holdout", false) != holdout) ++reassigned_holdout;
      Engine ye = make_engine(derive_seed(c.seeds.launch, 1000 + e), r);
      auto y = sim::draw_online_outcomes(scenario, arm, x, ye);
      csv << id << "," << e << "," << arm << "," << (holdout ? 1 : 0) << "," << (hit ? 1 : 0);
      for (double v : y) csv << "," << csv_num(v);
      csv << "\n";
      if (holdout && e == 0) {
        holdout_log.records.push_back(UnitRecord{id, x, arm, 1.0 / n, y});
      }
    }
  }
  if (reassigned_holdout > 0) {
    throw Error("assignment cache disagrees with holdout membership for " + std::to_string(reassigned_holdout) +
                " exposures; the cache belongs to a different launch seed");
  }

  write_text(ctx.run_dir / artifact::launch_exposures, csv.str());
  std::ostringstream hl;
  write_log_csv(hl, holdout_log);
  write_text(ctx.run_dir / artifact::holdout_log, hl.str());
  write_json(cache_path, cache);
  write_json(ctx.run_dir / artifact::launch_manifest, {{"policy", policy::to_json(params)},
                                                      {"recommendation_index", rec.value("index", -1)},
                                                      {"population", c.launch.population},
                                                      {"exposures", c.launch.exposures},
                                                      {"holdout_fraction", c.launch.holdout_fraction},
                                                      {"holdout_units", holdout_units},
                                                      {"policy_units", c.launch.population - holdout_units},
                                                      {"cache_entries_before", cached_before},
                                                      {"cache_hits", cache_hits},
                                                      {"seed", c.seeds.launch}});
  out << "launched: " << c.launch.population - holdout_units << " policy units, " << holdout_units
      << " holdout units, " << cache_hits << " cache hits\n";
  return kExitOk;
}

int cmd_backtest(const RunContext& ctx, const CommandOptions&, std::ostream& out) {
  const auto& c = ctx.config;
  const fs::path exp_path = ctx.run_dir / artifact::launch_exposures;
  if (!fs::exists(exp_path) || !fs::exists(ctx.run_dir / artifact::launch_manifest)) {
    throw Error("no launch found in " + ctx.run_dir.string() + "; run launch first");
  }
  const json manifest = read_json(ctx.run_dir / artifact::launch_manifest);
  const std::size_t m = c.outcomes.size();

  // Per-unit outcome = mean over that unit's exposures.
  struct Unit {
    bool holdout = false;
    std::vector<double> sum;
    std::size_t count = 0;
  };
  std::map<std::string, Unit> units;
  std::istringstream in(read_text(exp_path));
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() != 5 + m) throw Error("malformed row in " + exp_path.string());
    Unit& u = units[f[0]];
    u.holdout = f[3] == "1";
    u.sum.resize(m, 0.0);
    for (std::size_t j = 0; j < m; ++j) u.sum[j] += parse_double(f[5 + j]);
    ++u.count;
  }

  std::vector<RunningStats> launched(m), holdout(m);
  for (const auto& [id, u] : units) {
    for (std::size_t j = 0; j < m; ++j) {
      (u.holdout ? holdout : launched)[j].add(u.sum[j] / static_cast<double>(u.count));
    }
  }
  const double level = c.ope.ci_level;
  const double z = welch_z(level);
  json outcomes = json::array();
  for (std::size_t j = 0; j < m; ++j) {
    const auto& a = launched[j];
    const auto& h = holdout[j];
    const double diff = a.mean() - h.mean();
    const double se = std::sqrt(a.variance() / std::max<double>(1, a.count()) +
                                h.variance() / std::max<double>(1, h.count()));
    outcomes.push_back({{"outcome", c.outcomes[j].name},
                        {"direction", to_string(c.outcomes[j].direction)},
                        {"launched_mean", a.mean()},
                        {"holdout_mean", h.mean()},
                        {"difference", diff},
                        {"stderr", se},
                        {"ci_low", diff - z * se},
                        {"ci_high", diff + z * se},
                        {"ci_level", level},
                        {"n_launched", a.count()},
                        {"n_holdout", h.count()}});
  }
  json report = {{"schema", "pex-backtest/1"},
                 {"population", units.size()},
                 {"outcomes", outcomes}};

  const double primary_sign = direction_sign(c.outcomes[0].direction);
  report["launched_beats_holdout"] =
      primary_sign * outcomes[0].at("difference").get<double>() > 0.0;

  if (c.scenario) {
    // Noiseless, unshifted values from the scenario surfaces.
    const auto& s = *c.scenario;
    const hte::CateModel model = hte::cate_model_from_json(read_json(ctx.run_dir / artifact::model));
    const policy::PolicyParams params = policy::policy_from_json(manifest.at("policy"));
    const std::size_t samples = 100000;
    const std::uint64_t oseed = derive_seed(c.seeds.launch, 31);
    auto launched_v = sim::oracle_policy_value(s, mopt::make_assignment(model, params), samples, oseed);
    json arms = json::array();
    double best_single = -INFINITY;
    for (int a = 1; a <= s.n; ++a) {
      auto v = sim::oracle_policy_value(s, [a](std::span<const double>) { return a; }, samples, oseed);
      arms.push_back({{"arm", a}, {"values", v.values}});
      best_single = std::max(best_single, primary_sign * v.values[0]);
    }
    auto optimal = sim::oracle_policy_value(
        s,
        [&s, primary_sign](std::span<const double> x) {
          int best = 1;
          double bv = primary_sign * s.mean_outcome(1, 0, x);
          for (int a = 2; a <= s.n; ++a) {
            const double v = primary_sign * s.mean_outcome(a, 0, x);
            if (v > bv) {
              bv = v;
              best = a;
            }
          }
          return best;
        },
        samples, oseed);
    report["oracle"] = {{"samples", samples},
                        {"launched", launched_v.values},
                        {"launched_stderr", launched_v.std_error},
                        {"single_arm", arms},
                        {"primary_optimal", optimal.values[0]},
                        {"launched_beats_best_single_arm", primary_sign * launched_v.values[0] > best_single}};
  }
  write_json(ctx.run_dir / artifact::backtest, report);
  out << "backtest: " << c.outcomes[0].name << " difference " << format_double(outcomes[0].at("difference"))
      << " (" << format_double(outcomes[0].at("ci_low")) << ", " << format_double(outcomes[0].at("ci_high"))
      << ")\n";
  return kExitOk;
}

int cmd_report(const RunContext& ctx, const CommandOptions&, std::ostream& out) {
  const auto& c = ctx.config;
  const fs::path dir = ctx.run_dir / artifact::report_dir;
  fs::create_directories(dir);
  const std::size_t m = c.outcomes.size();
  const int n = c.arms();

  auto front_csv = [&](const char* src, const char* dst) {
    auto rows = read_jsonl(ctx.run_dir / src);
    std::ostringstream csv;
    csv << "index,iteration,origin";
    for (std::size_t j = 0; j < m; ++j) csv << ",w_" << j;
    for (int i = 1; i <= n; ++i) csv << ",b_" << i;
    for (const auto& o : c.outcomes) {
      csv << "," << o.name << "," << o.name << "_stderr," << o.name << "_ci_low," << o.name << "_ci_high";
    }
    csv << "\n";
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto& row = rows[r];
      csv << r << "," << row.at("iteration").get<int>() << "," << row.at("origin").get<std::string>();
      for (double v : row.at("params").at("weights")) csv << "," << csv_num(v);
      for (double v : row.at("params").at("biases")) csv << "," << csv_num(v);
      for (std::size_t j = 0; j < m; ++j) {
        csv << "," << csv_num(row.at("values")[j]) << "," << csv_num(row.at("stderr")[j]) << ","
            << csv_num(row.at("ci_low")[j]) << "," << csv_num(row.at("ci_high")[j]);
      }
      csv << "\n";
    }
    write_text(dir / dst, csv.str());
    out << "wrote " << (dir / dst).string() << " (" << rows.size() << " rows)\n";
  };

  front_csv(artifact::offline_front, "offline_front.csv");
  if (fs::exists(ctx.run_dir / artifact::weights_only_front)) {
    front_csv(artifact::weights_only_front, "weights_only_front.csv");
  }

  {
    const json cj = read_json(ctx.run_dir / artifact::calibration);
    std::ostringstream csv;
    csv << "arm,outcome,mean_prediction,sample_ate,abs_gap,rel_gap\n";
    for (const auto& e : cj.at("entries")) {
      csv << e.at("arm").get<int>() << "," << c.outcomes.at(e.at("outcome").get<std::size_t>()).name << ","
          << csv_num(e.at("mean_prediction")) << "," << csv_num(e.at("sample_ate")) << ","
          << csv_num(e.at("abs_gap")) << "," << csv_num(e.at("rel_gap")) << "\n";
    }
    write_text(dir / "calibration.csv", csv.str());
    out << "wrote " << (dir / "calibration.csv").string() << "\n";
  }

  if (fs::exists(ctx.run_dir / artifact::offline_vs_online)) {
    const json ov = read_json(ctx.run_dir / artifact::offline_vs_online);
    std::ostringstream csv;
    csv << "index";
    for (const auto& o : c.outcomes) {
      csv << "," << o.name << "_offline," << o.name << "_offline_stderr," << o.name << "_online," << o.name
          << "_online_stderr";
    }
    csv << "\n";
    for (const auto& row : ov.at("candidates")) {
      csv << row.at("index").get<std::size_t>();
      for (std::size_t j = 0; j < m; ++j) {
        csv << "," << csv_num(row.at("offline")[j]) << "," << csv_num(row.at("offline_stderr")[j]) << ","
            << csv_num(row.at("online")[j]) << "," << csv_num(row.at("online_stderr")[j]);
      }
      csv << "\n";
    }
    write_text(dir / "offline_vs_online.csv", csv.str());
    out << "wrote " << (dir / "offline_vs_online.csv").string() << "\n";
  }

  if (fs::exists(ctx.run_dir / artifact::online_history)) {
    auto rows = read_jsonl(ctx.run_dir / artifact::online_history);
    std::ostringstream csv;
    csv << "index,round,initial";
    for (const auto& o : c.outcomes) csv << "," << o.name << "," << o.name << "_stderr";
    csv << "\n";
    for (const auto& row : rows) {
      csv << row.at("index").get<std::size_t>() << "," << row.at("round").get<int>() << ","
          << (row.at("initial").get<bool>() ? 1 : 0);
      for (std::size_t j = 0; j < m; ++j) csv << "," << csv_num(row.at("mean")[j]) << "," << csv_num(row.at("stderr")[j]);
      csv << "\n";
    }
    write_text(dir / "online_history.csv", csv.str());
    out << "wrote " << (dir / "online_history.csv").string() << "\n";
  }
  return kExitOk;
}

namespace {

// Advisory lock on <run>/.lock held for the lifetime of one command.
class RunLock {
 public:
  explicit RunLock(const fs::path& dir) {
    const fs::path p = dir / ".lock";
    fd_ = ::open(p.c_str(), O_CREAT | O_RDWR | O_CLOEXEC, 0644);
    if (fd_ < 0) throw Error("cannot open lock file " + p.string());
    if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
      ::close(fd_);
      throw Error("run directory " + dir.string() + " is in use by another pex command");
    }
  }
  ~RunLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

 private:
  int fd_ = -1;
};

}  // namespace

int run_command(std::string_view command, const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  using Fn = int (*)(const RunContext&, const CommandOptions&, std::ostream&);
  static const std::map<std::string_view, Fn> table = {{"simulate", cmd_simulate}, {"phase1", cmd_phase1},
                                                       {"phase2", cmd_phase2},     {"launch", cmd_launch},
                                                       {"backtest", cmd_backtest}, {"report", cmd_report}};
  try {
    auto it = table.find(command);
    if (it == table.end()) throw Error("unknown command '" + std::string(command) + "'");
    RunContext ctx = open_run(opts);
    fs::create_directories(ctx.run_dir);
    RunLock lock(ctx.run_dir);
    out << "run directory: " << ctx.run_dir.string() << "\n";
    return it->second(ctx, opts, out);
  } catch (const std::exception& e) {
    err << "pex " << command << ": " << e.what() << "\n";
    return kExitError;
  }
}

}  // namespace pex::workflow
