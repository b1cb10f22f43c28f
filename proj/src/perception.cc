#include "uavx/perception.h"

#include <algorithm>
#include <cmath>

#include "uavx/errors.h"

namespace uavx::perception {

void RewardParams::validate() const {
  if (!(dt > 0.0)) throw ConfigError("reward.dt must be positive");
  if (!(lambda >= 0.0)) throw ConfigError("reward.lambda must be non-negative");
  if (!(rho >= 0.0)) throw ConfigError("reward.rho must be non-negative");
  if (!(shrink > 0.0 && shrink <= 1.0)) throw ConfigError("reward.shrink must lie in (0, 1]");
}

DepthImage augment_depth(const DepthImage& raw, const std::optional<BBox>& bbox, double shrink) {
  DepthImage out = raw;
  if (!bbox) return out;
  for (int row = 0; row < raw.height; ++row) {
    for (int col = 0; col < raw.width; ++col) {
      if (!bbox->contains_pixel(row, col)) continue;
      const double d = raw.at(row, col);
      // The floor never lifts a pixel above its raw value.
      out.at(row, col) = std::min(d, std::max(d * shrink, kMinAugmentedDepth));
    }
  }
  return out;
}

double bb_distance(const std::optional<BBox>& bbox, int width) {
  if (!bbox) return 0.0;
  const double half = 0.5 * width;
  return std::min(1.0, std::abs(bbox->center_x() - half) / half);
}

double bb_penalty(const std::optional<BBox>& bbox, int height, PenaltyMode mode) {
  if (!bbox) return 0.0;
  switch (mode) {
    case PenaltyMode::kHeightFraction:
      return std::clamp(bbox->height() / height, 0.0, 1.0);
    case PenaltyMode::kAspectRatio: {
      const double w = bbox->width();
      const double h = bbox->height();
      const double longest = std::max(w, h);
      return longest > 0.0 ? std::min(w, h) / longest : 0.0;
    }
  }
  return 0.0;
}

double reward(double applied_v, double applied_psi, const std::optional<BBox>& bbox, int width,
              int height, bool collided, const RewardParams& params) {
  if (collided) return params.collision_reward;
  return applied_v * std::cos(applied_psi) * params.dt + params.lambda * bb_distance(bbox, width) -
         params.rho * bb_penalty(bbox, height, params.penalty_mode);
}

Observation observe(const world::WorldState& state, const world::WorldConfig& config,
                    double shrink) {
  Observation obs;
  obs.bbox = world::person_bbox(state, config);
  obs.depth = augment_depth(world::render_depth(state, config), obs.bbox, shrink);
  return obs;
}

std::vector<double> network_input(const DepthImage& depth, double max_range, int out_w, int out_h) {
  std::vector<double> out(static_cast<std::size_t>(out_w) * out_h, 0.0);
  for (int r = 0; r < out_h; ++r) {
    const int r0 = r * depth.height / out_h;
    const int r1 = std::max(r0 + 1, (r + 1) * depth.height / out_h);
    for (int c = 0; c < out_w; ++c) {
      const int c0 = c * depth.width / out_w;
      const int c1 = std::max(c0 + 1, (c + 1) * depth.width / out_w);
      double sum = 0.0;
      for (int i = r0; i < r1; ++i) {
        for (int j = c0; j < c1; ++j) sum += depth.at(i, j);
      }
      out[static_cast<std::size_t>(r) * out_w + c] =
          std::clamp(sum / ((r1 - r0) * (c1 - c0) * max_range), 0.0, 1.0);
    }
  }
  return out;
}

}  // namespace uavx::perception
