#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "uavx/gmm.h"
#include "uavx/memory.h"
#include "uavx/qpolicy.h"
#include "uavx/rng.h"
#include "uavx/tensor_nn.h"

namespace uavx::explore {

using world::ActionId;
using ActionScores = std::array<double, world::kNumActions>;

enum class EpsilonMode { kLinear, kInverse };

struct EpsilonSchedule {
  double epsilon0 = 1.0;
  double epsilon_goal = 0.05;
  int total_episodes = 1;
  EpsilonMode mode = EpsilonMode::kLinear;

  void validate() const;
  // Episodes are 1-based.
  double at(double episode) const;
};

ActionId uniform_random_action(Rng& rng);

ActionId epsilon_greedy_action(const q::PolicyPair& pair, std::span<const double> state, double eps, Rng& rng);

struct ConvergenceParams {
  std::int64_t tau = 20000;  // exploration-phase step budget
  double zeta = 0.01;        // convergence-error threshold
};

// (Q_tar(s,a) - Q(s,a))^2 for every action.
ActionScores convergence_errors(const q::PolicyPair& pair, std::span<const double> state);

// Draws actions uniformly without replacement and returns the first whose
// error reaches zeta; nullopt when every action is below it.
std::optional<ActionId> pick_unconverged(const ActionScores& errors, double zeta, Rng& rng);

ActionId convergence_action(const q::PolicyPair& pair, std::span<const double> state,
                            const ConvergenceParams& params, std::int64_t global_step, Rng& rng);

// Predicts the next-state embedding from (embedding, one-hot action).
class DomainNetwork {
 public:
  DomainNetwork(std::size_t embedding_dim, std::size_t hidden, nn::OptimizerConfig optimizer,
                std::uint64_t seed);
  explicit DomainNetwork(nn::Network net, nn::OptimizerConfig optimizer = {});

  gmm::Embedding predict(std::span<const double> embedding, ActionId action) const;
  std::array<gmm::Embedding, world::kNumActions> predict_all(std::span<const double> embedding) const;

  // One optimizer step on the mean squared next-embedding error. Returns the
  // pre-update loss.
  double train(std::span<const gmm::Embedding> embeddings, std::span<const ActionId> actions,
               std::span<const gmm::Embedding> next_embeddings);

  std::size_t embedding_dim() const { return net_.output_dim(); }
  const nn::Network& network() const { return net_; }

 private:
  nn::Tensor encode(std::span<const gmm::Embedding> embeddings, std::span<const ActionId> actions) const;

  nn::Network net_;
  nn::Optimizer optimizer_;
};

nn::Tensor encode_state_action(std::span<const double> embedding, ActionId action);

// Bounded FIFO of visited-state embeddings.
class VisitedSet {
 public:
  explicit VisitedSet(std::size_t capacity = 512);

  void add(gmm::Embedding e);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::vector<gmm::Embedding> snapshot() const { return {items_.begin(), items_.end()}; }

 private:
  std::size_t capacity_;
  std::deque<gmm::Embedding> items_;
};

struct GuidanceConfig {
  std::size_t sample_size = 64;  // |V|
  double alpha = 0.7;            // rank exponent for sampling V
  gmm::FitConfig mixture;
  int refit_every = 1;           // exploration calls between mixture refits
};

// Lowest log-density wins; ties go to the lowest action id.
ActionId least_likely_action(const ActionScores& log_densities);
ActionScores prediction_log_densities(const gmm::GaussianMixture& g,
                                      std::span<const gmm::Embedding> predictions);

// Carries the mixture between calls so it can be refit on a schedule.
struct GuidanceState {
  VisitedSet visited;
  std::optional<gmm::GaussianMixture> mixture;
  std::int64_t calls = 0;
};

// Samples V from replay by rank, folds it into the visited set, refits the
// mixture and returns the action whose predicted next state is least likely.
// Falls back to a uniform random action while replay holds fewer than |V|
// entries. `state` is the flattened observation of `width` x `height`.
ActionId guidance_action(std::span<const double> state, int width, int height, const DomainNetwork& domain,
                         const replay::ReplayMemory& memory, GuidanceState& guidance,
                         const GuidanceConfig& config, Rng& rng);

}  // namespace uavx::explore
