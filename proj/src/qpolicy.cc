#include "uavx/qpolicy.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "uavx/errors.h"
#include "uavx/rng.h"

namespace uavx::q {
namespace {

using nn::Activation;
using nn::Network;
using nn::Tensor;
constexpr std::size_t kActions = world::kNumActions;

Tensor stack_rows(std::span<const std::reference_wrapper<const Transition>> batch, bool next) {
  const std::size_t dim = (next ? batch[0].get().next_state : batch[0].get().state).size();
  Tensor out = Tensor::zeros({batch.size(), dim});
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& v = next ? batch[i].get().next_state : batch[i].get().state;
    if (v.size() != dim) throw ShapeError("transition states in a batch differ in size");
    std::copy(v.begin(), v.end(), out.row_span(i).begin());
  }
  return out;
}

double bootstrap(const QVector& target_q, const QVector* online_q) {
  if (online_q) return target_q[argmax_action(*online_q).value()];
  return *std::max_element(target_q.begin(), target_q.end());
}

std::string fmt_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

QVector aggregate(double value, std::span<const double> advantages) {
  if (advantages.size() != kActions) throw ShapeError("advantage head must output 10 values");
  double mean = 0.0;
  for (double a : advantages) mean += a;
  mean /= static_cast<double>(kActions);
  QVector q;
  for (std::size_t a = 0; a < kActions; ++a) q[a] = value + (advantages[a] - mean);
  return q;
}

DuelingQNetwork::DuelingQNetwork(const NetworkShape& shape, double gamma, std::uint64_t seed)
    : gamma_(gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in (0, 1)");
  std::vector<std::size_t> dims{shape.input_dim};
  dims.insert(dims.end(), shape.trunk_hidden.begin(), shape.trunk_hidden.end());
  std::vector<Activation> acts(dims.size() - 1, Activation::kRelu);
  trunk_ = nn::init_network(dims, acts, derive_seed(seed, 1));
  const std::size_t features = dims.back();
  const std::vector<Activation> linear{Activation::kIdentity};
  value_ = nn::init_network(std::vector<std::size_t>{features, 1}, linear, derive_seed(seed, 2));
  advantage_ = nn::init_network(std::vector<std::size_t>{features, kActions}, linear, derive_seed(seed, 3));
}

DuelingQNetwork::DuelingQNetwork(Network trunk, Network value_head, Network advantage_head, double gamma)
    : trunk_(std::move(trunk)), value_(std::move(value_head)), advantage_(std::move(advantage_head)),
      gamma_(gamma) {
  if (value_.input_dim() != trunk_.output_dim() || advantage_.input_dim() != trunk_.output_dim()) {
    throw ShapeError("heads must consume the trunk's output");
  }
  if (value_.output_dim() != 1 || advantage_.output_dim() != kActions) {
    throw ShapeError("value head must output 1 value and advantage head 10");
  }
}

QVector DuelingQNetwork::q_values(std::span<const double> state) const {
  return q_values_batch(Tensor::row(state)).front();
}

std::vector<QVector> DuelingQNetwork::q_values_batch(const Tensor& states) const {
  const Tensor features = nn::forward(trunk_, states);
  const Tensor values = nn::forward(value_, features);
  const Tensor advantages = nn::forward(advantage_, features);
  std::vector<QVector> out;
  out.reserve(features.rows());
  for (std::size_t r = 0; r < features.rows(); ++r) {
    out.push_back(aggregate(values.at(r, 0), advantages.row_span(r)));
  }
  return out;
}

PolicyPair::PolicyPair(const PolicyConfig& config, std::uint64_t seed)
    : PolicyPair(DuelingQNetwork(config.shape, config.gamma, seed), config) {}

PolicyPair::PolicyPair(DuelingQNetwork net, const PolicyConfig& config)
    : online(std::move(net)), target(online), trunk_opt(config.optimizer),
      value_opt(config.optimizer), advantage_opt(config.optimizer), config_(config) {
  if (config.sync_interval < 1) throw ConfigError("sync_interval must be at least 1");
}

world::ActionId argmax_action(const QVector& q) {
  std::size_t best = 0;
  for (std::size_t a = 1; a < q.size(); ++a) {
    if (q[a] > q[best]) best = a;
  }
  return world::ActionId(static_cast<int>(best));
}

world::ActionId select_greedy(const PolicyPair& pair, std::span<const double> state) {
  return argmax_action(pair.online.q_values(state));
}

double td_target(const Transition& t, const PolicyPair& pair) {
  if (t.terminal) return t.reward;
  const QVector target_q = pair.target.q_values(t.next_state);
  QVector online_q;
  if (pair.config().double_dqn) online_q = pair.online.q_values(t.next_state);
  return t.reward + pair.target.gamma() * bootstrap(target_q, pair.config().double_dqn ? &online_q : nullptr);
}

TrainResult train_batch(PolicyPair& pair, std::span<const std::reference_wrapper<const Transition>> batch,
                        std::span<const double> weights) {
  if (batch.empty()) throw ArgumentError("train_batch needs a non-empty batch");
  if (!weights.empty() && weights.size() != batch.size()) throw ArgumentError("one weight per sample required");
  const std::size_t n = batch.size();
  const double inv_n = 1.0 / static_cast<double>(n);

  // Targets from the pre-update networks.
  std::vector<double> y(n);
  {
    const Tensor next = stack_rows(batch, true);
    const auto target_q = pair.target.q_values_batch(next);
    std::vector<QVector> online_next;
    if (pair.config().double_dqn) online_next = pair.online.q_values_batch(next);
    for (std::size_t i = 0; i < n; ++i) {
      const Transition& t = batch[i];
      y[i] = t.terminal ? t.reward
                        : t.reward + pair.target.gamma() *
                                         bootstrap(target_q[i], pair.config().double_dqn ? &online_next[i] : nullptr);
    }
  }

  DuelingQNetwork& net = pair.online;
  const nn::ForwardTrace trunk_trace = nn::forward_trace(net.trunk(), stack_rows(batch, false));
  const nn::ForwardTrace value_trace = nn::forward_trace(net.value_head(), trunk_trace.output());
  const nn::ForwardTrace adv_trace = nn::forward_trace(net.advantage_head(), trunk_trace.output());

  TrainResult result;
  result.td_errors.resize(n);
  Tensor d_value = Tensor::zeros({n, 1});
  Tensor d_adv = Tensor::zeros({n, kActions});
  for (std::size_t i = 0; i < n; ++i) {
    const QVector q = aggregate(value_trace.output().at(i, 0), adv_trace.output().row_span(i));
    const int a = batch[i].get().action.value();
    const double td = y[i] - q[a];
    result.td_errors[i] = td;
    const double w = weights.empty() ? 1.0 : weights[i];
    result.loss += w * td * td * inv_n;
    // d loss / d Q(s_i, a_i); other actions receive no gradient.
    const double dq = -2.0 * w * td * inv_n;
    d_value.at(i, 0) = dq;
    for (std::size_t j = 0; j < kActions; ++j) {
      d_adv.at(i, j) = dq * ((static_cast<int>(j) == a ? 1.0 : 0.0) - 1.0 / kActions);
    }
  }
  if (!std::isfinite(result.loss)) throw NumericError("non-finite TD loss");

  nn::Gradients g_value = nn::backward(net.value_head(), value_trace, d_value);
  nn::Gradients g_adv = nn::backward(net.advantage_head(), adv_trace, d_adv);
  Tensor d_features = g_value.input;
  for (std::size_t i = 0; i < d_features.size(); ++i) d_features[i] += g_adv.input[i];
  nn::Gradients g_trunk = nn::backward(net.trunk(), trunk_trace, d_features, false);

  pair.trunk_opt.step(net.trunk(), g_trunk);
  pair.value_opt.step(net.value_head(), g_value);
  pair.advantage_opt.step(net.advantage_head(), g_adv);
  return result;
}

bool maybe_sync(PolicyPair& pair, std::int64_t global_step) {
  if (global_step % pair.sync_interval() != 0) return false;
  pair.sync();
  return true;
}

void save_checkpoint(const PolicyPair& pair, std::int64_t global_step, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  nn::save_network(pair.online.trunk(), dir / "online_trunk.bin");
  nn::save_network(pair.online.value_head(), dir / "online_value.bin");
  nn::save_network(pair.online.advantage_head(), dir / "online_advantage.bin");
  nn::save_network(pair.target.trunk(), dir / "target_trunk.bin");
  nn::save_network(pair.target.value_head(), dir / "target_value.bin");
  nn::save_network(pair.target.advantage_head(), dir / "target_advantage.bin");
  std::ofstream out(dir / "manifest.txt", std::ios::trunc);
  if (!out) throw IoError("cannot write " + (dir / "manifest.txt").string());
  out << "format=uavx-checkpoint-1\n"
      << "global_step=" << global_step << "\n"
      << "gamma=" << fmt_double(pair.online.gamma()) << "\n"
      << "sync_interval=" << pair.sync_interval() << "\n";
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.txt";
  std::ifstream in(manifest_path);
  if (!in) throw IoError("missing checkpoint manifest " + manifest_path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  if (kv["format"] != "uavx-checkpoint-1") throw IoError(manifest_path.string() + ": unknown format");
  Checkpoint ck;
  double gamma = 0.0;
  try {
    ck.global_step = std::stoll(kv.at("global_step"));
    ck.sync_interval = std::stoll(kv.at("sync_interval"));
    gamma = std::stod(kv.at("gamma"));
  } catch (const std::exception&) {
    throw IoError(manifest_path.string() + ": malformed manifest");
  }
  auto load = [&](const std::string& prefix) {
    return DuelingQNetwork(nn::load_network(dir / (prefix + "_trunk.bin")),
                           nn::load_network(dir / (prefix + "_value.bin")),
                           nn::load_network(dir / (prefix + "_advantage.bin")), gamma);
  };
  ck.online = load("online");
  ck.target = load("target");
  return ck;
}

}  // namespace uavx::q
