#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <map>
#include <numeric>
#include <set>

#include "uavx/errors.h"
#include "uavx/memory.h"

using namespace uavx;
using namespace uavx::replay;

namespace {

Transition make(double reward) {
  return {{reward}, world::ActionId(0), reward, {reward}, false};
}

ReplayMemory filled(std::size_t n, std::size_t capacity = ReplayMemory::kDefaultCapacity) {
  ReplayMemory mem(capacity);
  for (std::size_t i = 0; i < n; ++i) mem.push(make(static_cast<double>(i)));
  return mem;
}

double chi_square_p(const std::vector<double>& observed, const std::vector<double>& expected) {
  double stat = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    stat += (observed[i] - expected[i]) * (observed[i] - expected[i]) / expected[i];
  }
  boost::math::chi_squared dist(static_cast<double>(observed.size() - 1));
  return boost::math::cdf(boost::math::complement(dist, stat));
}

}  // namespace

TEST(Push, SizeGrowsToCapacityThenEvictsOldest) {
  ReplayMemory one;
  one.push(make(0));
  EXPECT_EQ(one.size(), 1u);

  ReplayMemory mem = filled(5001);
  EXPECT_EQ(mem.size(), 5000u);
  std::set<std::uint64_t> seen;
  for (std::size_t slot = 0; slot < mem.size(); ++slot) seen.insert(mem.entry(slot).insertion_index);
  EXPECT_EQ(seen.count(0), 0u);
  EXPECT_EQ(*seen.begin(), 1u);
  EXPECT_EQ(*seen.rbegin(), 5000u);
}

TEST(Push, EvictionIsStrictlyFifo) {
  ReplayMemory mem(7);
  for (int i = 0; i < 40; ++i) {
    mem.push(make(i));
    std::uint64_t lo = UINT64_MAX;
    for (std::size_t s = 0; s < mem.size(); ++s) lo = std::min(lo, mem.entry(s).insertion_index);
    EXPECT_EQ(lo, static_cast<std::uint64_t>(std::max(0, i - 6)));
  }
}

TEST(Push, FreshEntriesTakeMaxPriority) {
  ReplayMemory mem = filled(3);
  const std::vector<std::size_t> idx{0, 1, 2};
  const std::vector<double> td{0.5, -4.0, 2.0};
  mem.update_priorities(idx, td);
  mem.push(make(9));
  EXPECT_EQ(mem.entry(3).priority, 4.0);
  EXPECT_EQ(filled(1).entry(0).priority, 1.0);
}

TEST(SampleUniform, FullDrawCoversEverything) {
  const ReplayMemory mem = filled(10);
  Rng rng(1);
  const Batch b = mem.sample_uniform(10, rng);
  std::set<std::size_t> s(b.indices.begin(), b.indices.end());
  EXPECT_EQ(s.size(), 10u);
}

TEST(SampleUniform, Errors) {
  const ReplayMemory mem = filled(5);
  Rng rng(1);
  EXPECT_THROW(mem.sample_uniform(0, rng), ArgumentError);
  EXPECT_THROW(mem.sample_uniform(6, rng), InsufficientDataError);
  EXPECT_THROW(mem.sample_rank_prioritized(6, 0.7, rng), InsufficientDataError);
}

TEST(SampleUniform, FrequenciesPassChiSquare) {
  const ReplayMemory mem = filled(50);
  Rng rng(2);
  std::vector<double> counts(50, 0.0);
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) counts[mem.sample_uniform(1, rng).indices[0]] += 1.0;
  for (double c : counts) EXPECT_NEAR(c / draws, 0.02, 0.005);
  EXPECT_GT(chi_square_p(counts, std::vector<double>(50, draws / 50.0)), 0.01);
}

TEST(SampleUniform, WithoutReplacementAndSeeded) {
  const ReplayMemory mem = filled(300);
  Rng a(5), b(5);
  for (std::size_t n : {1u, 7u, 32u, 100u, 250u, 300u}) {
    const Batch x = mem.sample_uniform(n, a);
    const Batch y = mem.sample_uniform(n, b);
    EXPECT_EQ(x.indices, y.indices);
    EXPECT_EQ(std::set<std::size_t>(x.indices.begin(), x.indices.end()).size(), n);
  }
}

TEST(SortByTd, DescendingAndStable) {
  ReplayMemory mem = filled(3);
  const std::vector<std::size_t> idx{0, 1, 2};
  mem.update_priorities(idx, std::vector<double>{1, 5, 3});
  mem.sort_by_td();
  EXPECT_EQ(mem.ranked_priorities(), (std::vector<double>{5, 3, 1}));
  mem.sort_by_td();
  EXPECT_EQ(mem.ranked_priorities(), (std::vector<double>{5, 3, 1}));

  ReplayMemory ties = filled(6);
  ties.sort_by_td();
  std::vector<std::uint64_t> order;
  for (std::size_t s : ties.ranked_slots()) order.push_back(ties.entry(s).insertion_index);
  EXPECT_EQ(order, (std::vector<std::uint64_t>{0, 1, 2, 3, 4, 5}));
}

TEST(SortByTd, NonIncreasingAfterRandomUpdates) {
  ReplayMemory mem = filled(200, 150);
  Rng rng(4);
  std::vector<std::size_t> idx;
  std::vector<double> td;
  for (std::size_t i = 0; i < 150; ++i) {
    idx.push_back(i);
    td.push_back(uniform01(rng) * 10.0 - 5.0);
  }
  mem.update_priorities(idx, td);
  mem.sort_by_td();
  const auto p = mem.ranked_priorities();
  for (std::size_t i = 1; i < p.size(); ++i) EXPECT_GE(p[i - 1], p[i]);
}

TEST(UpdatePriorities, AbsoluteValueAndReorder) {
  ReplayMemory mem = filled(3);
  mem.update_priorities(std::vector<std::size_t>{0, 1, 2}, std::vector<double>{-3.0, 0.0, 2.0});
  EXPECT_EQ(mem.entry(0).priority, 3.0);
  mem.sort_by_td();
  EXPECT_EQ(mem.ranked_slots().front(), 0u);
  EXPECT_EQ(mem.ranked_slots().back(), 1u);
  EXPECT_THROW(mem.update_priorities(std::vector<std::size_t>{3}, std::vector<double>{1.0}), ArgumentError);
  EXPECT_THROW(mem.update_priorities(std::vector<std::size_t>{0, 1}, std::vector<double>{1.0}), ArgumentError);
}

TEST(RankProbabilities, ClosedForm) {
  const auto p = ReplayMemory::rank_probabilities(3, 1.0);
  EXPECT_NEAR(p[0], 6.0 / 11.0, 1e-15);
  EXPECT_NEAR(p[1], 3.0 / 11.0, 1e-15);
  EXPECT_NEAR(p[2], 2.0 / 11.0, 1e-15);
  for (double q : ReplayMemory::rank_probabilities(9, 0.0)) EXPECT_NEAR(q, 1.0 / 9.0, 1e-15);
}

TEST(SampleRankPrioritized, SizeThreeAlphaOne) {
  ReplayMemory mem = filled(3);
  mem.update_priorities(std::vector<std::size_t>{0, 1, 2}, std::vector<double>{1, 3, 2});
  mem.sort_by_td();
  Rng rng(7);
  std::map<std::size_t, int> by_rank;
  const int draws = 100000;
  const auto ranked = mem.ranked_slots();
  for (int i = 0; i < draws; ++i) {
    const std::size_t slot = mem.sample_rank_prioritized(1, 1.0, rng).indices[0];
    by_rank[static_cast<std::size_t>(std::find(ranked.begin(), ranked.end(), slot) - ranked.begin())]++;
  }
  EXPECT_NEAR(by_rank[0] / double(draws), 6.0 / 11.0, 0.01);
  EXPECT_NEAR(by_rank[1] / double(draws), 3.0 / 11.0, 0.01);
  EXPECT_NEAR(by_rank[2] / double(draws), 2.0 / 11.0, 0.01);
}

TEST(SampleRankPrioritized, AlphaZeroIsUniform) {
  ReplayMemory mem = filled(20);
  mem.update_priorities(std::vector<std::size_t>{3, 8}, std::vector<double>{50.0, 20.0});
  mem.sort_by_td();
  Rng rng(8);
  std::vector<double> counts(20, 0.0);
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) counts[mem.sample_rank_prioritized(1, 0.0, rng).indices[0]] += 1.0;
  EXPECT_GT(chi_square_p(counts, std::vector<double>(20, draws / 20.0)), 0.01);
}

TEST(SampleRankPrioritized, DistinctAndSeeded) {
  ReplayMemory mem = filled(100);
  Rng a(3), b(3);
  for (std::size_t n : {1u, 10u, 64u, 100u}) {
    const Batch x = mem.sample_rank_prioritized(n, 0.7, a);
    EXPECT_EQ(x.indices, mem.sample_rank_prioritized(n, 0.7, b).indices);
    EXPECT_EQ(std::set<std::size_t>(x.indices.begin(), x.indices.end()).size(), n);
    ASSERT_EQ(x.transitions.size(), n);
    for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(&x.transitions[i].get(), &mem.entry(x.indices[i]).transition);
  }
}

// Successive draws without replacement: the second pick from {1,2,3} given
// rank 1 went first has P(rank 2) = (1/2) / (1/2 + 1/3) = 0.6.
TEST(SampleRankPrioritized, SecondDrawRenormalizes) {
  ReplayMemory mem = filled(3);
  mem.sort_by_td();
  Rng rng(9);
  int first_one = 0, then_two = 0;
  for (int i = 0; i < 100000; ++i) {
    const Batch b = mem.sample_rank_prioritized(2, 1.0, rng);
    if (b.indices[0] == mem.ranked_slots()[0]) {
      ++first_one;
      if (b.indices[1] == mem.ranked_slots()[1]) ++then_two;
    }
  }
  EXPECT_NEAR(then_two / double(first_one), 0.6, 0.01);
}

TEST(SampleRankPrioritized, RanksMatchSortedOrder) {
  ReplayMemory mem = filled(30);
  std::vector<std::size_t> idx(30);
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<double> td(30);
  for (std::size_t i = 0; i < 30; ++i) td[i] = static_cast<double>((i * 7) % 30);
  mem.update_priorities(idx, td);
  mem.sort_by_td();
  Rng rng(10);
  const Batch b = mem.sample_rank_prioritized(12, 0.7, rng);
  ASSERT_EQ(b.ranks.size(), b.indices.size());
  const auto order = mem.ranked_slots();
  for (std::size_t i = 0; i < b.indices.size(); ++i) EXPECT_EQ(order[b.ranks[i]], b.indices[i]);
}

TEST(ImportanceWeights, ClosedForm) {
  // n = 3, alpha = 1: P = (6/11, 3/11, 2/11); w = (n P)^-beta / max
  const auto w = ReplayMemory::importance_weights(std::vector<std::size_t>{0, 2}, 3, 1.0, 1.0);
  ASSERT_EQ(w.size(), 2u);
  EXPECT_NEAR(w[0], (11.0 / 18.0) / (11.0 / 6.0), 1e-15);
  EXPECT_NEAR(w[1], 1.0, 1e-15);
  const auto half = ReplayMemory::importance_weights(std::vector<std::size_t>{0, 1}, 3, 1.0, 0.5);
  EXPECT_NEAR(half[0], std::sqrt(0.5), 1e-15);
  EXPECT_NEAR(half[1], 1.0, 1e-15);
  for (double x : ReplayMemory::importance_weights(std::vector<std::size_t>{0, 4, 9}, 10, 0.7, 0.0)) EXPECT_EQ(x, 1.0);
  for (double x : ReplayMemory::importance_weights(std::vector<std::size_t>{1, 3}, 10, 0.0, 1.0)) EXPECT_NEAR(x, 1.0, 1e-15);
  EXPECT_THROW(ReplayMemory::importance_weights(std::vector<std::size_t>{3}, 3, 1.0, 1.0), ArgumentError);
}
