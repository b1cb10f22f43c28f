#include <iostream>

#include "CLI11.hpp"
#include "uavx/cli.h"
#include "uavx/config.h"

int main(int argc, char** argv) {
  using namespace uavx;
  cli::tune_allocator();
  CLI::App app{"UAV obstacle-avoidance RL experiments"};
  app.set_version_flag("--version", std::string(cli::kVersion));
  app.require_subcommand(1);

  cli::TrainArgs train;
  std::string strategy;
  std::uint64_t seed = 0;
  int episodes = 0;
  std::string out_dir;
  auto* train_cmd = app.add_subcommand("train", "Train one agent and write CSV logs, checkpoints and a manifest");
  train_cmd->add_option("--config", train.config, "Config file or preset name (simple, complex, corridor, empty)");
  auto* strategy_opt = train_cmd->add_option("--strategy", strategy, "epsilon_greedy | convergence | guidance");
  auto* seed_opt = train_cmd->add_option("--seed", seed, "Experiment seed");
  auto* episodes_opt = train_cmd->add_option("--episodes", episodes, "Number of training episodes");
  auto* out_opt = train_cmd->add_option("--out", out_dir, "Output directory (default: $UAVX_OUT_ROOT/<world>_<strategy>_s<seed>)");

  cli::CompareArgs compare;
  auto* compare_cmd = app.add_subcommand("compare", "Join blocks.csv of several runs into tables and plots");
  compare_cmd->add_option("runs", compare.runs, "Run directories")->required();
  compare_cmd->add_option("--out", compare.out, "Output directory");
  compare_cmd->add_flag("!--no-svg", compare.svg, "Skip SVG plots");

  cli::RolloutArgs rollout;
  std::string rollout_config;
  std::string rollout_out;
  auto* rollout_cmd = app.add_subcommand("rollout", "Run greedy episodes with a frozen checkpoint");
  rollout_cmd->add_option("--checkpoint", rollout.checkpoint, "Checkpoint directory")->required();
  auto* rollout_config_opt = rollout_cmd->add_option("--config", rollout_config, "Config file or preset name");
  rollout_cmd->add_option("--n", rollout.episodes, "Episodes to run");
  rollout_cmd->add_option("--seed", rollout.seed, "Seed");
  auto* rollout_out_opt = rollout_cmd->add_option("--out", rollout_out, "Output directory");

  std::string preset;
  auto* preset_cmd = app.add_subcommand("preset", "Print a built-in world preset as a config file");
  preset_cmd->add_option("name", preset, "Preset name")->required();

  CLI11_PARSE(app, argc, argv);

  if (*train_cmd) {
    if (*strategy_opt) train.strategy = strategy;
    if (*seed_opt) train.seed = seed;
    if (*episodes_opt) train.episodes = episodes;
    if (*out_opt) train.out = out_dir;
    return cli::cmd_train(train, std::cout, std::cerr);
  }
  if (*compare_cmd) return cli::cmd_compare(compare, std::cout, std::cerr);
  if (*rollout_cmd) {
    if (*rollout_config_opt) rollout.config = rollout_config;
    if (*rollout_out_opt) rollout.out = rollout_out;
    return cli::cmd_rollout(rollout, std::cout, std::cerr);
  }
  if (*preset_cmd) {
    const auto text = config::preset_text(preset);
    if (!text) {
      std::cerr << "error: unknown preset '" << preset << "'\n";
      return cli::kBadInput;
    }
    std::cout << config::to_config_text(config::parse_config_text(*text, preset));
    return cli::kOk;
  }
  return cli::kBadInput;
}
