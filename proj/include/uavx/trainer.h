#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uavx/explore.h"
#include "uavx/memory.h"
#include "uavx/perception.h"
#include "uavx/qpolicy.h"
#include "uavx/worldsim.h"

namespace uavx::train {

enum class Strategy { kEpsilonGreedy, kConvergence, kGuidance };

std::string to_string(Strategy s);
// Throws ConfigError on unknown names.
Strategy parse_strategy(const std::string& name);

struct ExperimentConfig {
  std::string world_name = "custom";
  world::WorldConfig world;
  Strategy strategy = Strategy::kEpsilonGreedy;
  int episodes = 300;
  int max_steps_per_episode = 500;
  std::size_t warmup_transitions = 500;
  std::uint64_t seed = 0;

  int input_width = 16;
  int input_height = 16;
  std::size_t batch_size = 32;
  std::size_t replay_capacity = replay::ReplayMemory::kDefaultCapacity;
  // Importance-sampling correction for rank-sampled batches (guidance only).
  bool importance_weights = false;
  double importance_beta = 1.0;

  perception::RewardParams reward;
  q::PolicyConfig policy;

  // total_episodes follows `episodes` when 0.
  explore::EpsilonSchedule epsilon{1.0, 0.05, 0, explore::EpsilonMode::kLinear};
  explore::ConvergenceParams convergence;
  explore::GuidanceConfig guidance;
  std::size_t visited_capacity = 512;
  std::size_t domain_hidden = 64;
  double domain_lr = 1e-3;

  void validate() const;
  // Epsilon schedule with total_episodes resolved.
  explore::EpsilonSchedule epsilon_schedule() const;
};

struct EpisodeResult {
  double total_reward = 0.0;
  int steps = 0;
  bool collided = false;
};

struct EpisodeRecord {
  int episode = 0;  // 1-based
  int steps = 0;
  double total_reward = 0.0;
  bool collided = false;
  double epsilon = 0.0;
};

struct BlockMetrics {
  int block_index = 0;
  int episodes_in_block = 0;
  double mean_reward = 0.0;
  double mean_steps = 0.0;
  double collision_rate = 0.0;
  bool partial = false;
};

inline constexpr int kBlockSize = 100;

std::vector<BlockMetrics> aggregate_blocks(std::span<const EpisodeRecord> episodes, int block_size = kBlockSize);

// What happened on one environment step, for logging and offline checks.
struct StepRecord {
  int step = 0;
  world::WorldState state;  // after the step
  world::ActionId action;
  double applied_v = 0.0;
  double applied_psi = 0.0;
  std::optional<BBox> bbox;  // detection in the post-step observation
  bool collided = false;
  double reward = 0.0;
};

using StepObserver = std::function<void(const StepRecord&)>;
// Replaces strategy selection; receives the flattened observation.
using ActionOverride = std::function<world::ActionId(std::span<const double>)>;

// Owns every piece of mutable training state for one experiment.
class Trainer {
 public:
  explicit Trainer(ExperimentConfig config);
  Trainer(ExperimentConfig config, q::PolicyPair policy);

  // Plays one episode (1-based index), learning online unless `learn` is false.
  EpisodeResult run_episode(int episode_index, const StepObserver& observer = {}, bool learn = true);

  void set_action_override(ActionOverride override_fn) { override_ = std::move(override_fn); }

  const ExperimentConfig& config() const { return config_; }
  const q::PolicyPair& policy() const { return policy_; }
  q::PolicyPair& policy() { return policy_; }
  const replay::ReplayMemory& memory() const { return memory_; }
  std::int64_t global_step() const { return global_step_; }
  double epsilon(int episode_index) const { return schedule_.at(episode_index); }

  // Flattened network input for a state.
  std::vector<double> observe(const world::WorldState& state, std::optional<BBox>* bbox = nullptr) const;

 private:
  world::ActionId select_action(std::span<const double> obs, int episode_index);
  void optimize();

  ExperimentConfig config_;
  explore::EpsilonSchedule schedule_;
  q::PolicyPair policy_;
  replay::ReplayMemory memory_;
  explore::DomainNetwork domain_;
  explore::GuidanceState guidance_;
  Rng rng_;
  std::int64_t global_step_ = 0;
  ActionOverride override_;
};

struct ExperimentResult {
  std::vector<EpisodeRecord> episodes;
  std::vector<BlockMetrics> blocks;
};

std::string episodes_csv_header();
std::string format_episode_row(const EpisodeRecord& r, Strategy strategy, std::uint64_t seed);
std::string blocks_csv_header();
std::string format_block_row(const BlockMetrics& b);

// Runs every episode; when `out_dir` is set, episodes.csv is appended row by
// row and blocks.csv written at the end. A trainer may be supplied to keep
// access to the learned policy afterwards.
ExperimentResult run_experiment(const ExperimentConfig& config, const std::optional<std::filesystem::path>& out_dir,
                                Trainer* trainer = nullptr);

}  // namespace uavx::train
