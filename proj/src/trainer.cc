#include "uavx/trainer.h"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "uavx/errors.h"

namespace uavx::train {
namespace {

enum StreamTag : std::uint64_t { kPolicySeed = 11, kDomainSeed = 12, kRunSeed = 13 };

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::kEpsilonGreedy: return "epsilon_greedy";
    case Strategy::kConvergence: return "convergence";
    case Strategy::kGuidance: return "guidance";
  }
  return "unknown";
}

Strategy parse_strategy(const std::string& name) {
  if (name == "epsilon_greedy" || name == "d3qn") return Strategy::kEpsilonGreedy;
  if (name == "convergence") return Strategy::kConvergence;
  if (name == "guidance") return Strategy::kGuidance;
  throw ConfigError("unknown strategy '" + name + "' (expected epsilon_greedy, convergence or guidance)");
}

void ExperimentConfig::validate() const {
  world.validate();
  reward.validate();
  if (episodes < 1) throw ConfigError("episodes must be at least 1");
  if (max_steps_per_episode < 1) throw ConfigError("max_steps_per_episode must be at least 1");
  if (input_width < 1 || input_height < 1) throw ConfigError("network input size must be positive");
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (replay_capacity < batch_size) throw ConfigError("replay capacity must hold at least one batch");
  if (policy.shape.input_dim != static_cast<std::size_t>(input_width) * input_height) {
    throw ConfigError("network input dimension must equal input_width * input_height");
  }
  if (policy.sync_interval < 1) throw ConfigError("sync_interval must be at least 1");
  if (!(policy.gamma > 0.0 && policy.gamma < 1.0)) throw ConfigError("gamma must lie in (0, 1)");
  if (!(policy.optimizer.lr > 0.0)) throw ConfigError("learning rate must be positive");
  epsilon_schedule().validate();
  if (convergence.tau < 0) throw ConfigError("tau must be non-negative");
  if (!(convergence.zeta > 0.0)) throw ConfigError("zeta must be positive");
  if (guidance.mixture.components < 1) throw ConfigError("mixture needs at least one component");
  if (guidance.sample_size < static_cast<std::size_t>(guidance.mixture.components)) {
    throw ConfigError("V sample size must be at least the number of mixture components");
  }
  if (!(guidance.alpha >= 0.0)) throw ConfigError("alpha must be non-negative");
  if (visited_capacity < guidance.sample_size) throw ConfigError("visited capacity must hold one V sample");
  if (!(importance_beta >= 0.0)) throw ConfigError("importance_beta must be non-negative");
}

explore::EpsilonSchedule ExperimentConfig::epsilon_schedule() const {
  explore::EpsilonSchedule s = epsilon;
  if (s.total_episodes <= 0) s.total_episodes = episodes;
  return s;
}

Trainer::Trainer(ExperimentConfig config)
    : Trainer(config, q::PolicyPair(config.policy, derive_seed(config.seed, kPolicySeed))) {}

Trainer::Trainer(ExperimentConfig config, q::PolicyPair policy)
    : config_(std::move(config)),
      schedule_(config_.epsilon_schedule()),
      policy_(std::move(policy)),
      memory_(config_.replay_capacity),
      domain_(gmm::kEmbeddingDim, config_.domain_hidden,
              nn::OptimizerConfig{nn::Algorithm::kAdam, config_.domain_lr},
              derive_seed(config_.seed, kDomainSeed)),
      guidance_{explore::VisitedSet(config_.visited_capacity), std::nullopt, 0},
      rng_(derive_seed(config_.seed, kRunSeed)) {
  config_.validate();
}

std::vector<double> Trainer::observe(const world::WorldState& state, std::optional<BBox>* bbox) const {
  const perception::Observation obs = perception::observe(state, config_.world, config_.reward.shrink);
  if (bbox) *bbox = obs.bbox;
  return perception::network_input(obs.depth, config_.world.camera.max_range, config_.input_width,
                                   config_.input_height);
}

world::ActionId Trainer::select_action(std::span<const double> obs, int episode_index) {
  const double eps = schedule_.at(episode_index);
  switch (config_.strategy) {
    case Strategy::kEpsilonGreedy:
      return explore::epsilon_greedy_action(policy_, obs, eps, rng_);
    case Strategy::kConvergence:
      return explore::convergence_action(policy_, obs, config_.convergence, global_step_, rng_);
    case Strategy::kGuidance: {
      if (!(uniform01(rng_) < eps)) return q::select_greedy(policy_, obs);
      if (memory_.size() < config_.warmup_transitions) return explore::uniform_random_action(rng_);
      return explore::guidance_action(obs, config_.input_width, config_.input_height, domain_, memory_,
                                      guidance_, config_.guidance, rng_);
    }
  }
  return world::ActionId(0);
}

void Trainer::optimize() {
  if (config_.strategy != Strategy::kGuidance) {
    const replay::Batch batch = memory_.sample_uniform(config_.batch_size, rng_);
    q::train_batch(policy_, batch.transitions);
    return;
  }
  memory_.sort_by_td();
  const replay::Batch batch = memory_.sample_rank_prioritized(config_.batch_size, config_.guidance.alpha, rng_);
  std::vector<double> weights;
  if (config_.importance_weights) {
    weights = replay::ReplayMemory::importance_weights(batch.ranks, memory_.size(), config_.guidance.alpha,
                                                       config_.importance_beta);
  }
  const q::TrainResult result = q::train_batch(policy_, batch.transitions, weights);
  memory_.update_priorities(batch.indices, result.td_errors);

  std::vector<gmm::Embedding> states, next_states;
  std::vector<world::ActionId> actions;
  for (const Transition& t : batch.transitions) {
    states.push_back(gmm::embed(t.state, config_.input_width, config_.input_height));
    next_states.push_back(gmm::embed(t.next_state, config_.input_width, config_.input_height));
    actions.push_back(t.action);
  }
  domain_.train(states, actions, next_states);
}

EpisodeResult Trainer::run_episode(int episode_index, const StepObserver& observer, bool learn) {
  const world::WorldConfig& wc = config_.world;
  world::WorldState state = world::reset(wc, config_.seed);
  if (wc.has_person()) {
    world::place_person(state, wc, static_cast<int>(uniform_index(rng_, wc.person.waypoints.size())));
  }
  std::vector<double> obs = observe(state);

  EpisodeResult result;
  for (int t = 1; t <= config_.max_steps_per_episode; ++t) {
    const world::ActionId action = override_ ? override_(obs) : select_action(obs, episode_index);
    const world::StepResult moved = world::step(state, action, wc);
    std::optional<BBox> bbox;
    std::vector<double> next_obs = observe(moved.state, &bbox);
    const double r = perception::reward(moved.applied_v, moved.applied_psi, bbox, wc.camera.width,
                                        wc.camera.height, moved.collided, config_.reward);
    result.total_reward += r;
    result.steps = t;
    result.collided = moved.collided;

    if (learn) {
      memory_.push(Transition{obs, action, r, next_obs, moved.collided});
      ++global_step_;
      if (memory_.size() >= std::max(config_.warmup_transitions, config_.batch_size)) optimize();
      q::maybe_sync(policy_, global_step_);
    }
    if (observer) {
      observer(StepRecord{t, moved.state, action, moved.applied_v, moved.applied_psi, bbox, moved.collided, r});
    }
    if (moved.collided) break;
    state = moved.state;
    obs = std::move(next_obs);
  }
  if (!std::isfinite(result.total_reward)) throw NumericError("non-finite episode reward");
  return result;
}

std::vector<BlockMetrics> aggregate_blocks(std::span<const EpisodeRecord> episodes, int block_size) {
  if (block_size < 1) throw ArgumentError("block size must be positive");
  std::vector<BlockMetrics> blocks;
  for (std::size_t start = 0; start < episodes.size(); start += block_size) {
    const std::size_t end = std::min(episodes.size(), start + block_size);
    BlockMetrics b;
    b.block_index = static_cast<int>(blocks.size());
    b.episodes_in_block = static_cast<int>(end - start);
    double reward = 0.0, steps = 0.0, collisions = 0.0;
    for (std::size_t i = start; i < end; ++i) {
      reward += episodes[i].total_reward;
      steps += episodes[i].steps;
      collisions += episodes[i].collided ? 1.0 : 0.0;
    }
    b.mean_reward = reward / b.episodes_in_block;
    b.mean_steps = steps / b.episodes_in_block;
    b.collision_rate = collisions / b.episodes_in_block;
    b.partial = b.episodes_in_block < block_size;
    blocks.push_back(b);
  }
  return blocks;
}

std::string episodes_csv_header() { return "episode,steps,total_reward,collided,epsilon,strategy,seed"; }

std::string format_episode_row(const EpisodeRecord& r, Strategy strategy, std::uint64_t seed) {
  return std::to_string(r.episode) + "," + std::to_string(r.steps) + "," + fixed6(r.total_reward) + "," +
         (r.collided ? "1" : "0") + "," + fixed6(r.epsilon) + "," + to_string(strategy) + "," +
         std::to_string(seed);
}

std::string blocks_csv_header() { return "block_index,mean_reward,mean_steps,collision_rate,partial"; }

std::string format_block_row(const BlockMetrics& b) {
  return std::to_string(b.block_index) + "," + fixed6(b.mean_reward) + "," + fixed6(b.mean_steps) + "," +
         fixed6(b.collision_rate) + "," + (b.partial ? "1" : "0");
}

ExperimentResult run_experiment(const ExperimentConfig& config, const std::optional<std::filesystem::path>& out_dir,
                                Trainer* trainer) {
  std::unique_ptr<Trainer> owned;
  if (!trainer) {
    owned = std::make_unique<Trainer>(config);
    trainer = owned.get();
  }
  std::ofstream episodes_out;
  if (out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(*out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir->string() + ": " + ec.message());
    const auto path = *out_dir / "episodes.csv";
    episodes_out.open(path, std::ios::trunc);
    if (!episodes_out) throw IoError("cannot write " + path.string());
    episodes_out << episodes_csv_header() << "\n";
  }

  ExperimentResult result;
  for (int e = 1; e <= config.episodes; ++e) {
    const EpisodeResult ep = trainer->run_episode(e);
    const EpisodeRecord rec{e, ep.steps, ep.total_reward, ep.collided, trainer->epsilon(e)};
    result.episodes.push_back(rec);
    if (out_dir) {
      episodes_out << format_episode_row(rec, config.strategy, config.seed) << "\n";
      episodes_out.flush();
      if (!episodes_out) throw IoError("failed writing " + (*out_dir / "episodes.csv").string());
    }
  }
  result.blocks = aggregate_blocks(result.episodes);

  if (out_dir) {
    const auto path = *out_dir / "blocks.csv";
    std::ofstream blocks_out(path, std::ios::trunc);
    if (!blocks_out) throw IoError("cannot write " + path.string());
    blocks_out << blocks_csv_header() << "\n";
    for (const auto& b : result.blocks) blocks_out << format_block_row(b) << "\n";
    if (!blocks_out) throw IoError("failed writing " + path.string());
  }
  return result;
}

}  // namespace uavx::train
