#include "uavx/explore.h"

#include <algorithm>
#include <numeric>
#include <string>

#include "uavx/errors.h"

namespace uavx::explore {

void EpsilonSchedule::validate() const {
  if (!(0.0 <= epsilon_goal && epsilon_goal <= epsilon0 && epsilon0 <= 1.0)) {
    throw ConfigError("epsilon schedule needs 0 <= eps_goal <= eps0 <= 1");
  }
  if (total_episodes < 1) throw ConfigError("epsilon schedule needs at least one episode");
}

double EpsilonSchedule::at(double episode) const {
  const double span = epsilon0 - epsilon_goal;
  if (mode == EpsilonMode::kLinear) {
    // written from the floor so episode E lands on epsilon_goal exactly
    return std::clamp(epsilon_goal + span * (1.0 - episode / total_episodes), epsilon_goal, epsilon0);
  }
  return std::clamp(span / episode, epsilon_goal, epsilon0);
}

ActionId uniform_random_action(Rng& rng) {
  return ActionId(static_cast<int>(uniform_index(rng, world::kNumActions)));
}

ActionId epsilon_greedy_action(const q::PolicyPair& pair, std::span<const double> state, double eps,
                               Rng& rng) {
  // The coin is always flipped so the stream does not depend on eps.
  const bool explore = uniform01(rng) < eps;
  if (explore) return uniform_random_action(rng);
  return q::select_greedy(pair, state);
}

ActionScores convergence_errors(const q::PolicyPair& pair, std::span<const double> state) {
  const q::QVector online = pair.online.q_values(state);
  const q::QVector target = pair.target.q_values(state);
  ActionScores err;
  for (std::size_t a = 0; a < err.size(); ++a) err[a] = (target[a] - online[a]) * (target[a] - online[a]);
  return err;
}

std::optional<ActionId> pick_unconverged(const ActionScores& errors, double zeta, Rng& rng) {
  std::array<int, world::kNumActions> pool;
  std::iota(pool.begin(), pool.end(), 0);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    std::swap(pool[i], pool[i + uniform_index(rng, pool.size() - i)]);
    if (errors[pool[i]] >= zeta) return ActionId(pool[i]);
  }
  return std::nullopt;
}

ActionId convergence_action(const q::PolicyPair& pair, std::span<const double> state,
                            const ConvergenceParams& params, std::int64_t global_step, Rng& rng) {
  if (global_step >= params.tau) return q::select_greedy(pair, state);
  if (auto a = pick_unconverged(convergence_errors(pair, state), params.zeta, rng)) return *a;
  return q::select_greedy(pair, state);
}

nn::Tensor encode_state_action(std::span<const double> embedding, ActionId action) {
  nn::Tensor row = nn::Tensor::zeros({1, embedding.size() + world::kNumActions});
  std::copy(embedding.begin(), embedding.end(), row.values().begin());
  row[embedding.size() + static_cast<std::size_t>(action.value())] = 1.0;
  return row;
}

DomainNetwork::DomainNetwork(std::size_t embedding_dim, std::size_t hidden, nn::OptimizerConfig optimizer,
                             std::uint64_t seed)
    : optimizer_(optimizer) {
  const std::vector<std::size_t> dims{embedding_dim + world::kNumActions, hidden, embedding_dim};
  const std::vector<nn::Activation> acts{nn::Activation::kRelu, nn::Activation::kIdentity};
  net_ = nn::init_network(dims, acts, seed);
}

DomainNetwork::DomainNetwork(nn::Network net, nn::OptimizerConfig optimizer)
    : net_(std::move(net)), optimizer_(optimizer) {
  if (net_.input_dim() != net_.output_dim() + world::kNumActions) {
    throw ShapeError("domain network must map d + 10 inputs to d outputs");
  }
}

nn::Tensor DomainNetwork::encode(std::span<const gmm::Embedding> embeddings,
                                 std::span<const ActionId> actions) const {
  const std::size_t d = embedding_dim();
  nn::Tensor x = nn::Tensor::zeros({embeddings.size(), d + world::kNumActions});
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    if (embeddings[i].size() != d) throw ShapeError("embedding dimension does not match domain network");
    auto row = x.row_span(i);
    std::copy(embeddings[i].begin(), embeddings[i].end(), row.begin());
    row[d + static_cast<std::size_t>(actions[i].value())] = 1.0;
  }
  return x;
}

gmm::Embedding DomainNetwork::predict(std::span<const double> embedding, ActionId action) const {
  if (embedding.size() != embedding_dim()) throw ShapeError("embedding dimension does not match domain network");
  const nn::Tensor out = nn::forward(net_, encode_state_action(embedding, action));
  return {out.values().begin(), out.values().end()};
}

std::array<gmm::Embedding, world::kNumActions> DomainNetwork::predict_all(std::span<const double> embedding) const {
  std::vector<gmm::Embedding> states(world::kNumActions, gmm::Embedding(embedding.begin(), embedding.end()));
  std::vector<ActionId> actions;
  for (int a = 0; a < world::kNumActions; ++a) actions.emplace_back(a);
  const nn::Tensor out = nn::forward(net_, encode(states, actions));
  std::array<gmm::Embedding, world::kNumActions> preds;
  for (std::size_t a = 0; a < preds.size(); ++a) {
    auto row = out.row_span(a);
    preds[a].assign(row.begin(), row.end());
  }
  return preds;
}

double DomainNetwork::train(std::span<const gmm::Embedding> embeddings, std::span<const ActionId> actions,
                            std::span<const gmm::Embedding> next_embeddings) {
  if (embeddings.empty()) throw ArgumentError("domain training needs a non-empty batch");
  if (actions.size() != embeddings.size() || next_embeddings.size() != embeddings.size()) {
    throw ArgumentError("domain training batch fields differ in length");
  }
  const nn::ForwardTrace trace = nn::forward_trace(net_, encode(embeddings, actions));
  nn::Tensor target = nn::Tensor::zeros(trace.output().shape());
  for (std::size_t i = 0; i < next_embeddings.size(); ++i) {
    if (next_embeddings[i].size() != embedding_dim()) throw ShapeError("next embedding dimension mismatch");
    std::copy(next_embeddings[i].begin(), next_embeddings[i].end(), target.row_span(i).begin());
  }
  const nn::Loss loss = nn::mse_loss(trace.output(), target);
  if (!std::isfinite(loss.value)) throw NumericError("non-finite domain network loss");
  optimizer_.step(net_, nn::backward(net_, trace, loss.grad, false));
  return loss.value;
}

VisitedSet::VisitedSet(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ConfigError("visited-set capacity must be positive");
}

void VisitedSet::add(gmm::Embedding e) {
  items_.push_back(std::move(e));
  while (items_.size() > capacity_) items_.pop_front();
}

ActionId least_likely_action(const ActionScores& log_densities) {
  std::size_t best = 0;
  for (std::size_t a = 1; a < log_densities.size(); ++a) {
    if (log_densities[a] < log_densities[best]) best = a;
  }
  return ActionId(static_cast<int>(best));
}

ActionScores prediction_log_densities(const gmm::GaussianMixture& g,
                                      std::span<const gmm::Embedding> predictions) {
  if (predictions.size() != world::kNumActions) throw ArgumentError("need one prediction per action");
  ActionScores out;
  for (std::size_t a = 0; a < out.size(); ++a) out[a] = gmm::log_density(g, predictions[a]);
  return out;
}

ActionId guidance_action(std::span<const double> state, int width, int height, const DomainNetwork& domain,
                         const replay::ReplayMemory& memory, GuidanceState& guidance,
                         const GuidanceConfig& config, Rng& rng) {
  if (memory.size() < config.sample_size || config.sample_size == 0) return uniform_random_action(rng);

  const bool refit = !guidance.mixture || config.refit_every <= 1 || guidance.calls % config.refit_every == 0;
  ++guidance.calls;
  if (refit) {
    const replay::Batch sample = memory.sample_rank_prioritized(config.sample_size, config.alpha, rng);
    for (const Transition& t : sample.transitions) guidance.visited.add(gmm::embed(t.state, width, height));
    gmm::FitConfig fit_config = config.mixture;
    fit_config.seed = rng();
    const auto points = guidance.visited.snapshot();
    guidance.mixture = gmm::fit(points, fit_config).mixture;
  }
  const auto predictions = domain.predict_all(gmm::embed(state, width, height));
  return least_likely_action(prediction_log_densities(*guidance.mixture, predictions));
}

}  // namespace uavx::explore
