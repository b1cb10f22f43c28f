#pragma once

#include <optional>
#include <vector>

#include "uavx/image.h"
#include "uavx/worldsim.h"

namespace uavx::perception {

enum class PenaltyMode {
  kHeightFraction,  // bbox height / image height
  kAspectRatio,     // min(w, h) / max(w, h) of the bbox
};

struct RewardParams {
  double dt = 0.5;
  double lambda = 0.5;
  double rho = 1.0;
  double collision_reward = -10.0;
  double shrink = 0.5;
  PenaltyMode penalty_mode = PenaltyMode::kHeightFraction;

  void validate() const;
};

struct Observation {
  DepthImage depth;  // augmented
  std::optional<BBox> bbox;
};

inline constexpr double kMinAugmentedDepth = 1e-3;

// Scales depths inside the person's box so the person looks closer.
DepthImage augment_depth(const DepthImage& raw, const std::optional<BBox>& bbox, double shrink);

// Horizontal offset of the box center from the image center, in [0, 1].
double bb_distance(const std::optional<BBox>& bbox, int width);

// Closeness proxy of the detected person, in [0, 1].
double bb_penalty(const std::optional<BBox>& bbox, int height,
                  PenaltyMode mode = PenaltyMode::kHeightFraction);

double reward(double applied_v, double applied_psi, const std::optional<BBox>& bbox, int width,
              int height, bool collided, const RewardParams& params);

// render_depth -> person_bbox -> augment_depth
Observation observe(const world::WorldState& state, const world::WorldConfig& config,
                    double shrink);

// Normalizes by max_range and area-averages down to out_w x out_h.
std::vector<double> network_input(const DepthImage& depth, double max_range, int out_w, int out_h);

}  // namespace uavx::perception
