#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "uavx/tensor_nn.h"
#include "uavx/transition.h"

namespace uavx::q {

using QVector = std::array<double, world::kNumActions>;

struct NetworkShape {
  std::size_t input_dim = 256;
  std::vector<std::size_t> trunk_hidden{256, 128};
};

// Shared trunk feeding a scalar state-value head and a 10-way advantage
// head, combined as Q(s,a) = V(s) + A(s,a) - mean_a A(s,a).
class DuelingQNetwork {
 public:
  DuelingQNetwork() = default;
  DuelingQNetwork(const NetworkShape& shape, double gamma, std::uint64_t seed);
  DuelingQNetwork(nn::Network trunk, nn::Network value_head, nn::Network advantage_head, double gamma);

  QVector q_values(std::span<const double> state) const;
  // Row per state.
  std::vector<QVector> q_values_batch(const nn::Tensor& states) const;

  double gamma() const { return gamma_; }
  std::size_t input_dim() const { return trunk_.input_dim(); }
  const nn::Network& trunk() const { return trunk_; }
  const nn::Network& value_head() const { return value_; }
  const nn::Network& advantage_head() const { return advantage_; }
  nn::Network& trunk() { return trunk_; }
  nn::Network& value_head() { return value_; }
  nn::Network& advantage_head() { return advantage_; }

 private:
  nn::Network trunk_;
  nn::Network value_;
  nn::Network advantage_;
  double gamma_ = 0.99;
};

// Dueling aggregation of one value and a row of advantages.
QVector aggregate(double value, std::span<const double> advantages);

struct PolicyConfig {
  NetworkShape shape;
  double gamma = 0.99;
  nn::OptimizerConfig optimizer;
  std::int64_t sync_interval = 200;
  // Online network picks the bootstrap action, target network evaluates it.
  bool double_dqn = false;
};

// Online and target networks plus the online optimizer state.
class PolicyPair {
 public:
  PolicyPair(const PolicyConfig& config, std::uint64_t seed);
  PolicyPair(DuelingQNetwork online, const PolicyConfig& config);

  const PolicyConfig& config() const { return config_; }
  std::int64_t sync_interval() const { return config_.sync_interval; }
  void sync() { target = online; }

  DuelingQNetwork online;
  DuelingQNetwork target;
  nn::Optimizer trunk_opt;
  nn::Optimizer value_opt;
  nn::Optimizer advantage_opt;

 private:
  PolicyConfig config_;
};

// Lowest id wins ties.
world::ActionId argmax_action(const QVector& q);
world::ActionId select_greedy(const PolicyPair& pair, std::span<const double> state);

// r for terminal transitions, else r + gamma * max_a Q_tar(s', a) (or the
// double-DQN variant when configured).
double td_target(const Transition& transition, const PolicyPair& pair);

struct TrainResult {
  double loss = 0.0;
  std::vector<double> td_errors;  // y_i - Q(s_i, a_i) before the update
};

// One optimizer step on the mean squared TD error of the taken actions.
// Optional per-sample weights scale each squared error.
TrainResult train_batch(PolicyPair& pair, std::span<const std::reference_wrapper<const Transition>> batch,
                        std::span<const double> weights = {});

// Copies online into target when global_step is a multiple of the sync
// interval. Returns whether a sync happened.
bool maybe_sync(PolicyPair& pair, std::int64_t global_step);

// Writes online_{trunk,value,advantage}.bin, the matching target_*.bin and
// manifest.txt into `dir`.
void save_checkpoint(const PolicyPair& pair, std::int64_t global_step, const std::filesystem::path& dir);

struct Checkpoint {
  DuelingQNetwork online;
  DuelingQNetwork target;
  std::int64_t global_step = 0;
  std::int64_t sync_interval = 0;
};
Checkpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace uavx::q
