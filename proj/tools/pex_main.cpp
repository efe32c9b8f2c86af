#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "pex/workflow/workflow.hpp"

int main(int argc, char** argv) {
  namespace wf = pex::workflow;
  CLI::App app{"pex: personalized experimentation on simulated randomized experiments"};
  app.require_subcommand(1, 1);

  wf::CommandOptions opts;
  std::string out = opts.out.string();
  std::uint64_t seed = 0;
  std::size_t k = 0, rounds = 0, candidate = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config_path, "experiment config (JSON)")->required();
    sub->add_option("--seed", seed, "derive every config seed from this value");
    sub->add_option("--out", out, "parent directory for run directories")->capture_default_str();
  };

  const char* commands[][2] = {{"simulate", "write a simulated randomized log"},
                               {"phase1", "train CATE models, search policies offline, pick candidates"},
                               {"phase2", "test candidates online and refine them adaptively"},
                               {"launch", "roll out the recommended policy with a randomized holdout"},
                               {"backtest", "compare the launched policy against the holdout"},
                               {"report", "write plot-ready CSV tables"}};
  for (auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    add_common(sub);
    if (std::string(name) == "phase1") {
      sub->add_option("--k", k, "number of online candidates");
      sub->add_flag("--accept", opts.accept, "continue past a failed calibration check");
      sub->add_flag("--retrain", opts.retrain, "add the launch holdout log to the training data");
    }
    if (std::string(name) == "phase2") {
      sub->add_option("--rounds", rounds, "online rounds, the first measures the initial candidates");
      sub->add_option("--candidate-index", candidate, "recommend this online history entry");
    }
  }

  CLI11_PARSE(app, argc, argv);
  CLI::App* sub = app.get_subcommands().front();
  opts.out = out;
  if (sub->count("--seed")) opts.seed = seed;
  if (sub->get_option_no_throw("--k") && sub->count("--k")) opts.k = k;
  if (sub->get_option_no_throw("--rounds") && sub->count("--rounds")) opts.rounds = rounds;
  if (sub->get_option_no_throw("--candidate-index") && sub->count("--candidate-index")) opts.candidate_index = candidate;
  return wf::run_command(sub->get_name(), opts, std::cout, std::cerr);
}
