#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "fatigue/errors.hpp"
#include "fatigue/harness.hpp"

using namespace fatigue;

int main(int argc, char** argv) {
  CLI::App app{"Fatigue-aware adaptive interface toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  const auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "experiment config JSON")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "run seed (overrides the config seeds)");
    sub->add_option("--out", out_dir, "output directory");
  };

  auto* generate = app.add_subcommand("generate", "simulate sessions and write JSONL data");
  auto* train = app.add_subcommand("train", "train detectors, policy and sentiment model");
  auto* train_policy_cmd = app.add_subcommand("train-policy", "train only the interface policy");
  auto* evaluate = app.add_subcommand("evaluate", "closed-loop evaluation of all conditions");
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient check");
  auto* replay = app.add_subcommand("replay", "run a trained detector over a recorded session");
  for (auto* sub : {generate, train, train_policy_cmd, evaluate, gradcheck}) common(sub);

  std::string corrupt;
  gradcheck->add_option("--corrupt", corrupt, "perturb one analytic gradient, e.g. hr.conv_w");

  std::string session, model;
  replay->add_option("--input", session, "session JSONL")->required()->check(CLI::ExistingFile);
  replay->add_option("--model", model, "detector JSON")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
    if (seed) cfg.seeds = {*seed};
    if (!out_dir.empty()) cfg.out = out_dir;
    validate(cfg);

    if (generate->parsed()) {
      cmd_generate(cfg, cfg.run_seed(), std::cout);
    } else if (train->parsed()) {
      cmd_train(cfg, std::cout);
    } else if (train_policy_cmd->parsed()) {
      cmd_train_policy(cfg, std::cout);
    } else if (evaluate->parsed()) {
      cmd_evaluate(cfg, std::cout);
    } else if (gradcheck->parsed()) {
      GradcheckOptions opts;
      if (!corrupt.empty()) opts.corrupt = corrupt;
      return cmd_gradcheck(cfg.run_seed(), opts, std::cout);
    } else if (replay->parsed()) {
      cmd_replay(session, model, std::cout);
    }
    return kExitOk;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
}
