#include "uavx/memory.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "uavx/errors.h"

namespace uavx::replay {

ReplayMemory::ReplayMemory(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ConfigError("replay capacity must be positive");
  slots_.reserve(capacity);
  order_.reserve(capacity);
}

bool ReplayMemory::ranks_before(std::size_t a, std::size_t b) const {
  const PrioritizedEntry& ea = slots_[a];
  const PrioritizedEntry& eb = slots_[b];
  if (ea.priority != eb.priority) return ea.priority > eb.priority;
  return ea.insertion_index < eb.insertion_index;
}

void ReplayMemory::push(Transition transition) {
  double max_priority = 0.0;
  for (const auto& e : slots_) max_priority = std::max(max_priority, e.priority);
  if (slots_.empty() || max_priority == 0.0) max_priority = 1.0;

  const std::uint64_t insertion = next_insertion_++;
  const std::size_t slot = static_cast<std::size_t>(insertion % capacity_);
  PrioritizedEntry fresh{std::move(transition), max_priority, insertion};
  if (slot < slots_.size()) {
    order_.erase(std::find(order_.begin(), order_.end(), slot));
    slots_[slot] = std::move(fresh);
  } else {
    slots_.push_back(std::move(fresh));
  }
  // First rank position that the new entry precedes.
  auto pos = std::find_if(order_.begin(), order_.end(),
                          [&](std::size_t other) { return ranks_before(slot, other); });
  order_.insert(pos, slot);
}

const PrioritizedEntry& ReplayMemory::entry(std::size_t slot) const {
  if (slot >= slots_.size()) throw ArgumentError("replay slot out of range: " + std::to_string(slot));
  return slots_[slot];
}

std::vector<double> ReplayMemory::ranked_priorities() const {
  std::vector<double> out;
  out.reserve(order_.size());
  for (std::size_t slot : order_) out.push_back(slots_[slot].priority);
  return out;
}

void ReplayMemory::check_request(std::size_t b) const {
  if (b == 0) throw ArgumentError("batch size must be at least 1");
  if (b > slots_.size()) {
    throw InsufficientDataError("requested " + std::to_string(b) + " transitions but replay holds " +
                                std::to_string(slots_.size()));
  }
}

Batch ReplayMemory::make_batch(std::vector<std::size_t> slots) const {
  Batch batch;
  batch.transitions.reserve(slots.size());
  for (std::size_t slot : slots) batch.transitions.emplace_back(slots_[slot].transition);
  batch.indices = std::move(slots);
  return batch;
}

Batch ReplayMemory::sample_uniform(std::size_t b, Rng& rng) const {
  check_request(b);
  const std::size_t n = slots_.size();
  std::vector<std::size_t> picked;
  picked.reserve(b);
  if (b * 4 < n) {
    while (picked.size() < b) {
      const std::size_t s = uniform_index(rng, n);
      if (std::find(picked.begin(), picked.end(), s) == picked.end()) picked.push_back(s);
    }
  } else {
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    for (std::size_t i = 0; i < b; ++i) {
      std::swap(pool[i], pool[i + uniform_index(rng, n - i)]);
      picked.push_back(pool[i]);
    }
  }
  return make_batch(std::move(picked));
}

void ReplayMemory::sort_by_td() {
  std::sort(order_.begin(), order_.end(),
            [this](std::size_t a, std::size_t b) { return ranks_before(a, b); });
}

std::vector<double> ReplayMemory::rank_probabilities(std::size_t n, double alpha) {
  std::vector<double> p(n);
  double total = 0.0;
  for (std::size_t k = 0; k < n; ++k) total += p[k] = std::pow(1.0 / static_cast<double>(k + 1), alpha);
  for (double& v : p) v /= total;
  return p;
}

std::vector<double> ReplayMemory::importance_weights(std::span<const std::size_t> ranks, std::size_t n, double alpha,
                                                     double beta) {
  const std::vector<double> p = rank_probabilities(n, alpha);
  std::vector<double> w;
  w.reserve(ranks.size());
  double largest = 0.0;
  for (std::size_t k : ranks) {
    if (k >= n) throw ArgumentError("rank out of range");
    w.push_back(std::pow(static_cast<double>(n) * p[k], -beta));
    largest = std::max(largest, w.back());
  }
  for (double& x : w) x /= largest;
  return w;
}

Batch ReplayMemory::sample_rank_prioritized(std::size_t b, double alpha, Rng& rng) const {
  check_request(b);
  if (!(alpha >= 0.0)) throw ArgumentError("alpha must be non-negative");
  const std::size_t n = slots_.size();
  std::vector<std::size_t> ranks;
  ranks.reserve(b);

  if (b * 2 <= n) {
    if (cdf_size_ != n || cdf_alpha_ != alpha) {
      cdf_.resize(n);
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) cdf_[k] = acc += std::pow(1.0 / static_cast<double>(k + 1), alpha);
      cdf_size_ = n;
      cdf_alpha_ = alpha;
    }
    // Rejecting repeats realizes successive sampling without replacement.
    while (ranks.size() < b) {
      const double u = uniform01(rng) * cdf_.back();
      std::size_t k = static_cast<std::size_t>(std::upper_bound(cdf_.begin(), cdf_.end(), u) - cdf_.begin());
      k = std::min(k, n - 1);
      if (std::find(ranks.begin(), ranks.end(), k) == ranks.end()) ranks.push_back(k);
    }
  } else {
    std::vector<double> weights(n);
    double total = 0.0;
    for (std::size_t k = 0; k < n; ++k) total += weights[k] = std::pow(1.0 / static_cast<double>(k + 1), alpha);
    for (std::size_t i = 0; i < b; ++i) {
      const double u = uniform01(rng) * total;
      double acc = 0.0;
      std::size_t k = 0;
      std::size_t last_live = 0;
      for (; k < n; ++k) {
        if (weights[k] == 0.0) continue;
        last_live = k;
        acc += weights[k];
        if (u < acc) break;
      }
      if (k == n) k = last_live;
      ranks.push_back(k);
      total -= weights[k];
      weights[k] = 0.0;
    }
  }

  std::vector<std::size_t> slots;
  slots.reserve(b);
  for (std::size_t k : ranks) slots.push_back(order_[k]);
  Batch batch = make_batch(std::move(slots));
  batch.ranks = std::move(ranks);
  return batch;
}

void ReplayMemory::update_priorities(std::span<const std::size_t> indices,
                                     std::span<const double> td_errors) {
  if (indices.size() != td_errors.size()) {
    throw ArgumentError("update_priorities needs one TD error per index");
  }
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= slots_.size()) {
      throw ArgumentError("replay slot out of range: " + std::to_string(indices[i]));
    }
    if (!std::isfinite(td_errors[i])) throw NumericError("non-finite TD error");
  }
  for (std::size_t i = 0; i < indices.size(); ++i) {
    slots_[indices[i]].priority = std::abs(td_errors[i]);
  }
}

}  // namespace uavx::replay
