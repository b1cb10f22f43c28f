#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "uavx/rng.h"
#include "uavx/transition.h"

namespace uavx::replay {

struct PrioritizedEntry {
  Transition transition;
  double priority = 0.0;  // |TD error|
  std::uint64_t insertion_index = 0;
};

// Sampled transitions plus the slot handles used by update_priorities().
struct Batch {
  std::vector<std::size_t> indices;
  std::vector<std::reference_wrapper<const Transition>> transitions;
  std::vector<std::size_t> ranks;  // 0-based rank of each pick; rank sampling only

  std::size_t size() const { return indices.size(); }
};

// Bounded FIFO transition store that doubles as a rank-based prioritized
// replay. Entries live in fixed slots (slot = insertion_index % capacity);
// a separate rank list orders the slots by descending priority.
class ReplayMemory {
 public:
  static constexpr std::size_t kDefaultCapacity = 5000;

  explicit ReplayMemory(std::size_t capacity = kDefaultCapacity);

  // Evicts the oldest entry when full. Fresh entries take the current
  // maximum priority (1.0 when empty) and rank after existing ties.
  void push(Transition transition);

  std::size_t size() const { return slots_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return slots_.empty(); }

  const PrioritizedEntry& entry(std::size_t slot) const;
  // Slots in rank order (rank 1 first).
  std::span<const std::size_t> ranked_slots() const { return order_; }
  std::vector<double> ranked_priorities() const;

  // b distinct entries, uniformly.
  Batch sample_uniform(std::size_t b, Rng& rng) const;

  // Descending priority, ties by insertion order.
  void sort_by_td();

  // b distinct entries with P(rank k) proportional to (1/k)^alpha, drawn
  // successively without replacement over the current rank order.
  Batch sample_rank_prioritized(std::size_t b, double alpha, Rng& rng) const;

  void update_priorities(std::span<const std::size_t> indices, std::span<const double> td_errors);

  // Distribution over ranks 1..n used by sample_rank_prioritized.
  static std::vector<double> rank_probabilities(std::size_t n, double alpha);
  // Importance-sampling weights (n P(rank))^-beta for a rank-sampled batch,
  // scaled so the largest weight in the batch is 1.
  static std::vector<double> importance_weights(std::span<const std::size_t> ranks, std::size_t n, double alpha,
                                                double beta);

 private:
  void check_request(std::size_t b) const;
  Batch make_batch(std::vector<std::size_t> slots) const;
  bool ranks_before(std::size_t a, std::size_t b) const;

  std::size_t capacity_;
  std::uint64_t next_insertion_ = 0;
  std::vector<PrioritizedEntry> slots_;
  std::vector<std::size_t> order_;

  // Cumulative rank weights, cached per (size, alpha).
  mutable std::vector<double> cdf_;
  mutable std::size_t cdf_size_ = 0;
  mutable double cdf_alpha_ = -1.0;
};

}  // namespace uavx::replay
