#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "uavx/errors.h"
#include "uavx/qpolicy.h"

using namespace uavx;
using namespace uavx::q;
using nn::Activation;
using nn::Tensor;

namespace {

constexpr std::size_t kIn = 12;

PolicyConfig small_config(nn::Algorithm algo = nn::Algorithm::kAdam, double lr = 1e-3) {
  PolicyConfig c;
  c.shape.input_dim = kIn;
  c.shape.trunk_hidden = {16, 8};
  c.optimizer.algo = algo;
  c.optimizer.lr = lr;
  return c;
}

std::vector<double> random_state(std::mt19937_64& rng, std::size_t n = kIn) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> s(n);
  for (double& x : s) x = u(rng);
  return s;
}

// Constant heads on a tiny trunk: V(s) = value, A(s, .) = advantages.
DuelingQNetwork constant_net(double value, const QVector& advantages, double gamma = 0.99) {
  nn::Network trunk({nn::DenseLayer{Tensor::zeros({kIn, 2}), Tensor::zeros({2}), Activation::kRelu}});
  nn::Network v({nn::DenseLayer{Tensor::zeros({2, 1}), Tensor({1}, {value}), Activation::kIdentity}});
  nn::Network a({nn::DenseLayer{Tensor::zeros({2, 10}),
                                Tensor({10}, std::vector<double>(advantages.begin(), advantages.end())),
                                Activation::kIdentity}});
  return DuelingQNetwork(trunk, v, a, gamma);
}

Transition transition(std::mt19937_64& rng, int action, double reward, bool terminal) {
  return {random_state(rng), world::ActionId(action), reward, random_state(rng), terminal};
}

std::vector<std::reference_wrapper<const Transition>> refs(const std::vector<Transition>& ts) {
  return {ts.begin(), ts.end()};
}

std::vector<double> flat_params(const DuelingQNetwork& net) {
  std::vector<double> out;
  for (const nn::Network* n : {&net.trunk(), &net.value_head(), &net.advantage_head()}) {
    for (const auto& l : n->layers()) {
      out.insert(out.end(), l.weights.values().begin(), l.weights.values().end());
      out.insert(out.end(), l.biases.values().begin(), l.biases.values().end());
    }
  }
  return out;
}

std::vector<std::span<double>> param_spans(DuelingQNetwork& net) {
  std::vector<std::span<double>> out;
  for (nn::Network* n : {&net.trunk(), &net.value_head(), &net.advantage_head()}) {
    for (auto& l : n->mutable_layers()) {
      out.push_back(l.weights.values());
      out.push_back(l.biases.values());
    }
  }
  return out;
}

}  // namespace

TEST(Aggregate, FormulaArithmetic) {
  const double adv[10] = {1, 0, 0, 0, 0, 0, 0, 0, 0, 0};
  const QVector q = aggregate(2.0, adv);
  EXPECT_DOUBLE_EQ(q[0], 2.0 + 1.0 - 0.1);
  for (int a = 1; a < 10; ++a) EXPECT_DOUBLE_EQ(q[a], 2.0 - 0.1);
}

TEST(QValues, EqualAdvantagesGiveValue) {
  QVector adv;
  adv.fill(3.25);
  const DuelingQNetwork net = constant_net(-1.5, adv);
  std::mt19937_64 rng(1);
  for (double q : net.q_values(random_state(rng))) EXPECT_EQ(q, -1.5);
}

TEST(QValues, MeanZeroIdentityOnRandomNets) {
  std::mt19937_64 rng(2);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const DuelingQNetwork net(small_config().shape, 0.99, seed);
    for (int i = 0; i < 20; ++i) {
      const auto s = random_state(rng);
      const QVector q = net.q_values(s);
      const double v = nn::forward(net.value_head(), nn::forward(net.trunk(), Tensor::row(s)))[0];
      double mean = 0.0;
      for (double x : q) mean += (x - v) / 10.0;
      EXPECT_NEAR(mean, 0.0, 1e-12);
    }
  }
}

TEST(QValues, BatchMatchesSingle) {
  const DuelingQNetwork net(small_config().shape, 0.99, 4);
  std::mt19937_64 rng(3);
  std::vector<double> flat;
  std::vector<std::vector<double>> states;
  for (int i = 0; i < 5; ++i) {
    states.push_back(random_state(rng));
    flat.insert(flat.end(), states.back().begin(), states.back().end());
  }
  const auto batch = net.q_values_batch(Tensor({5, kIn}, flat));
  for (int i = 0; i < 5; ++i) {
    const QVector single = net.q_values(states[i]);
    for (int a = 0; a < 10; ++a) EXPECT_NEAR(batch[i][a], single[a], 1e-14);
  }
}

TEST(QValues, ShapeMismatchThrows) {
  const DuelingQNetwork net(small_config().shape, 0.99, 4);
  EXPECT_THROW(net.q_values(std::vector<double>(kIn + 1, 0.0)), ShapeError);
}

TEST(ArgmaxAction, TieBreaksLow) {
  QVector q{};
  q[9] = 5;
  EXPECT_EQ(argmax_action(q).value(), 9);
  q.fill(1.0);
  EXPECT_EQ(argmax_action(q).value(), 0);
  q.fill(0.0);
  q[3] = q[7] = 2.0;
  EXPECT_EQ(argmax_action(q).value(), 3);
}

TEST(SelectGreedy, UsesOnlineNetwork) {
  QVector adv{};
  adv[6] = 1.0;
  PolicyPair pair(constant_net(0.0, adv), small_config());
  QVector other{};
  other[2] = 1.0;
  pair.target = constant_net(0.0, other);
  std::mt19937_64 rng(4);
  EXPECT_EQ(select_greedy(pair, random_state(rng)).value(), 6);
}

TEST(TdTarget, TerminalIsRewardExactly) {
  const PolicyPair pair(small_config(), 5);
  std::mt19937_64 rng(5);
  for (double r : {-10.0, 0.6, 0.1 + 0.2, -1e-300}) {
    const Transition t = transition(rng, 0, r, true);
    EXPECT_EQ(td_target(t, pair), r);
  }
}

TEST(TdTarget, GammaZeroIsReward) {
  PolicyConfig c = small_config();
  const PolicyPair pair(DuelingQNetwork(c.shape, 1e-300, 6), c);
  PolicyPair zero = pair;
  zero.target = constant_net(0.0, QVector{}, 0.0);
  std::mt19937_64 rng(6);
  const Transition t = transition(rng, 0, 0.75, false);
  EXPECT_EQ(td_target(t, zero), 0.75);
}

TEST(TdTarget, BootstrapFixture) {
  QVector adv{};
  adv.fill(0.0);
  PolicyPair pair(constant_net(0.0, adv), small_config());
  pair.target = constant_net(2.0, adv, 0.99);
  std::mt19937_64 rng(7);
  const Transition t = transition(rng, 1, 0.6, false);
  EXPECT_NEAR(td_target(t, pair), 2.58, 1e-15);
}

TEST(TdTarget, DoubleDqnUsesOnlineArgmax) {
  QVector online_adv{}, target_adv{};
  online_adv[4] = 1.0;   // online prefers 4
  target_adv[7] = 10.0;  // target prefers 7
  target_adv[4] = 2.0;
  PolicyConfig c = small_config();
  c.double_dqn = true;
  PolicyPair pair(constant_net(0.0, online_adv), c);
  pair.target = constant_net(0.0, target_adv, 0.5);
  std::mt19937_64 rng(8);
  const Transition t = transition(rng, 0, 1.0, false);
  const QVector tq = pair.target.q_values(t.next_state);
  EXPECT_DOUBLE_EQ(td_target(t, pair), 1.0 + 0.5 * tq[4]);
  PolicyConfig plain = small_config();
  PolicyPair p2(constant_net(0.0, online_adv), plain);
  p2.target = pair.target;
  EXPECT_DOUBLE_EQ(td_target(t, p2), 1.0 + 0.5 * tq[7]);
}

TEST(TrainBatch, EmptyBatchThrows) {
  PolicyPair pair(small_config(), 1);
  EXPECT_THROW(train_batch(pair, std::vector<std::reference_wrapper<const Transition>>{}), ArgumentError);
}

TEST(TrainBatch, ZeroErrorLeavesParametersUnderSgd) {
  PolicyPair pair(small_config(nn::Algorithm::kSgd, 0.1), 2);
  std::mt19937_64 rng(9);
  std::vector<Transition> ts;
  for (int i = 0; i < 6; ++i) {
    Transition t = transition(rng, i % 10, 0.0, true);
    t.reward = pair.online.q_values(t.state)[t.action.value()];
    ts.push_back(t);
  }
  const auto before = flat_params(pair.online);
  const TrainResult r = train_batch(pair, refs(ts));
  // batched and single-row forwards may round differently
  EXPECT_LT(r.loss, 1e-28);
  const auto after = flat_params(pair.online);
  for (std::size_t i = 0; i < before.size(); ++i) EXPECT_NEAR(after[i], before[i], 1e-14);
}

TEST(TrainBatch, TdErrorsMatchPreUpdateDefinition) {
  PolicyPair pair(small_config(), 3);
  pair.target = DuelingQNetwork(small_config().shape, 0.99, 33);
  std::mt19937_64 rng(10);
  std::vector<Transition> ts;
  for (int i = 0; i < 8; ++i) ts.push_back(transition(rng, (i * 3) % 10, i - 4.0, i % 3 == 0));
  std::vector<double> expected;
  for (const auto& t : ts) expected.push_back(td_target(t, pair) - pair.online.q_values(t.state)[t.action.value()]);
  const TrainResult r = train_batch(pair, refs(ts));
  ASSERT_EQ(r.td_errors.size(), ts.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    EXPECT_NEAR(r.td_errors[i], expected[i], 1e-12);
    loss += expected[i] * expected[i] / ts.size();
  }
  EXPECT_NEAR(r.loss, loss, 1e-12);
}

TEST(TrainBatch, SingleSampleDescends) {
  PolicyPair pair(small_config(nn::Algorithm::kSgd, 1e-3), 4);
  std::mt19937_64 rng(11);
  const std::vector<Transition> ts{transition(rng, 5, 3.0, true)};
  const double first = train_batch(pair, refs(ts)).loss;
  const double second = train_batch(pair, refs(ts)).loss;
  EXPECT_GT(first, 0.0);
  EXPECT_LT(second, first);
}

// With SGD at lr 1 the update is exactly minus the gradient, so the applied
// step can be compared with central differences of the TD loss.
TEST(TrainBatch, GradientMatchesFiniteDifferences) {
  PolicyConfig c = small_config(nn::Algorithm::kSgd, 1.0);
  PolicyPair pair(c, 5);
  pair.target = DuelingQNetwork(c.shape, 0.9, 55);
  std::mt19937_64 rng(12);
  std::vector<Transition> ts;
  for (int i = 0; i < 5; ++i) ts.push_back(transition(rng, (i * 7) % 10, 0.3 * i, i == 2));
  std::vector<double> y;
  for (const auto& t : ts) y.push_back(td_target(t, pair));
  auto loss = [&](const DuelingQNetwork& net) {
    double l = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      const double d = y[i] - net.q_values(ts[i].state)[ts[i].action.value()];
      l += d * d / ts.size();
    }
    return l;
  };

  DuelingQNetwork probe = pair.online;
  const auto before = flat_params(pair.online);
  train_batch(pair, refs(ts));
  const auto after = flat_params(pair.online);

  constexpr double h = 1e-5;
  double worst = 0.0;
  std::size_t k = 0;
  for (auto span : param_spans(probe)) {
    for (double& p : span) {
      const double saved = p;
      p = saved + h;
      const double up = loss(probe);
      p = saved - h;
      const double down = loss(probe);
      p = saved;
      const double numeric = (up - down) / (2 * h);
      const double analytic = before[k] - after[k];
      const double scale = std::max(std::abs(numeric), std::abs(analytic));
      worst = std::max(worst, scale < 1e-8 ? std::abs(numeric - analytic) : std::abs(numeric - analytic) / scale);
      ++k;
    }
  }
  EXPECT_EQ(k, before.size());
  EXPECT_LT(worst, 1e-6);
}

TEST(TrainBatch, WeightsScaleSquaredErrors) {
  PolicyPair a(small_config(nn::Algorithm::kSgd, 0.01), 6);
  PolicyPair b = a;
  std::mt19937_64 rng(13);
  const std::vector<Transition> ts{transition(rng, 1, 1.0, true), transition(rng, 2, -1.0, true)};
  const std::vector<double> ones{1.0, 1.0};
  const TrainResult ra = train_batch(a, refs(ts));
  const TrainResult rb = train_batch(b, refs(ts), ones);
  EXPECT_EQ(ra.loss, rb.loss);
  EXPECT_EQ(flat_params(a.online), flat_params(b.online));
  PolicyPair c = PolicyPair(small_config(nn::Algorithm::kSgd, 0.01), 6);
  const std::vector<double> half{0.5, 0.0};
  const TrainResult rc = train_batch(c, refs(ts), half);
  EXPECT_NEAR(rc.loss, 0.5 * ra.td_errors[0] * ra.td_errors[0] / 2.0, 1e-15);
  EXPECT_THROW(train_batch(c, refs(ts), std::vector<double>{1.0}), ArgumentError);
}

// A sample's error only reaches its own action's Q path: with a frozen trunk
// the advantage rows of other actions receive the same shared -1/10 share.
TEST(TrainBatch, OnlyTakenActionGetsDirectGradient) {
  PolicyPair pair(small_config(nn::Algorithm::kSgd, 1.0), 7);
  std::mt19937_64 rng(14);
  const std::vector<Transition> ts{transition(rng, 3, 5.0, true)};
  const auto& before = pair.online.advantage_head().layers().back().biases;
  const Tensor b0 = before;
  const TrainResult r = train_batch(pair, refs(ts));
  const Tensor& b1 = pair.online.advantage_head().layers().back().biases;
  const double dq = -2.0 * r.td_errors[0];
  for (int a = 0; a < 10; ++a) {
    const double expected = dq * ((a == 3 ? 1.0 : 0.0) - 0.1);
    EXPECT_NEAR(b0[a] - b1[a], expected, 1e-12);
  }
}

TEST(MaybeSync, FiresOnMultiplesOnly) {
  PolicyConfig c = small_config();
  c.sync_interval = 4;
  PolicyPair pair(c, 8);
  std::mt19937_64 rng(15);
  std::vector<Transition> ts{transition(rng, 0, 1.0, true)};
  train_batch(pair, refs(ts));
  const auto state = random_state(rng);
  const QVector target_before = pair.target.q_values(state);
  EXPECT_FALSE(maybe_sync(pair, 3));
  EXPECT_EQ(pair.target.q_values(state), target_before);
  EXPECT_NE(pair.online.q_values(state), target_before);
  EXPECT_TRUE(maybe_sync(pair, 8));
  for (int i = 0; i < 100; ++i) {
    const auto s = random_state(rng);
    EXPECT_EQ(pair.online.q_values(s), pair.target.q_values(s));
  }
}

TEST(MaybeSync, IntervalOneAlwaysSyncs) {
  PolicyConfig c = small_config();
  c.sync_interval = 1;
  PolicyPair pair(c, 9);
  std::mt19937_64 rng(16);
  std::vector<Transition> ts{transition(rng, 0, 1.0, true)};
  for (int step = 1; step <= 5; ++step) {
    train_batch(pair, refs(ts));
    EXPECT_TRUE(maybe_sync(pair, step));
    const auto s = random_state(rng);
    EXPECT_EQ(pair.online.q_values(s), pair.target.q_values(s));
  }
}

TEST(PolicyPair, StartsSynchronized) {
  const PolicyPair pair(small_config(), 10);
  std::mt19937_64 rng(17);
  const auto s = random_state(rng);
  EXPECT_EQ(pair.online.q_values(s), pair.target.q_values(s));
}

TEST(Checkpoint, RoundTrip) {
  PolicyConfig c = small_config();
  c.sync_interval = 77;
  PolicyPair pair(c, 11);
  std::mt19937_64 rng(18);
  std::vector<Transition> ts{transition(rng, 2, 1.0, true)};
  train_batch(pair, refs(ts));
  const auto dir = std::filesystem::temp_directory_path() / "uavx_ckpt_test";
  std::filesystem::remove_all(dir);
  save_checkpoint(pair, 1234, dir);
  EXPECT_TRUE(std::filesystem::exists(dir / "manifest.txt"));
  const Checkpoint back = load_checkpoint(dir);
  EXPECT_EQ(back.global_step, 1234);
  EXPECT_EQ(back.sync_interval, 77);
  EXPECT_EQ(back.online.gamma(), pair.online.gamma());
  const auto s = random_state(rng);
  EXPECT_EQ(back.online.q_values(s), pair.online.q_values(s));
  EXPECT_EQ(back.target.q_values(s), pair.target.q_values(s));
  std::filesystem::remove(dir / "online_trunk.bin");
  EXPECT_THROW(load_checkpoint(dir), IoError);
  std::filesystem::remove_all(dir);
}
