#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "uavx/config.h"
#include "uavx/errors.h"
#include "uavx/worldsim.h"

using namespace uavx;
using namespace uavx::world;

namespace {

constexpr double kPi = std::numbers::pi;

WorldConfig open_world() {
  WorldConfig c;
  c.bounds = {{-50, -50, 0}, {50, 50, 10}};
  c.spawn = {{0, 0, 5}, 0.0};
  return c;
}

// Wall whose near face is the plane x = 3 as seen from the origin.
WorldConfig wall_world(int size = 31) {
  WorldConfig c = open_world();
  c.obstacles.push_back({{3, -40, 0}, {4, 40, 10}});
  c.spawn = {{0, 0, 5}, 0.0};
  c.camera.width = size;
  c.camera.height = size;
  return c;
}

bool inside_solid(const Vec3& p, const WorldState& s, const WorldConfig& c) {
  const Box& b = c.bounds;
  if (p.x <= b.min.x || p.x >= b.max.x || p.y <= b.min.y || p.y >= b.max.y || p.z <= b.min.z ||
      p.z >= b.max.z) {
    return true;
  }
  for (const Box& o : c.obstacles) {
    if (p.x >= o.min.x && p.x <= o.max.x && p.y >= o.min.y && p.y <= o.max.y && p.z >= o.min.z &&
        p.z <= o.max.z) {
      return true;
    }
  }
  if (c.has_person()) {
    const double dx = p.x - s.person_position.x;
    const double dy = p.y - s.person_position.y;
    const double dz = p.z - s.person_position.z;
    if (dx * dx + dy * dy <= c.person.radius * c.person.radius && dz >= 0 && dz <= c.person.height) return true;
  }
  return false;
}

// Fixed-step march; returns the first sampled distance inside a solid.
double march(const Vec3& o, const Vec3& d, const WorldState& s, const WorldConfig& c, double max_range,
             double h = 1e-3) {
  for (double t = 0.0; t <= max_range; t += h) {
    if (inside_solid(o + d * t, s, c)) return t;
  }
  return max_range;
}

}  // namespace

TEST(ActionId, RejectsOutOfRange) {
  EXPECT_THROW(ActionId(-1), ArgumentError);
  EXPECT_THROW(ActionId(10), ArgumentError);
  EXPECT_EQ(ActionId(9).value(), 9);
}

TEST(Reset, PlacesUavAtSpawn) {
  const auto cfg = config::resolve_config("corridor").world;
  const WorldState s = reset(cfg, 0);
  EXPECT_EQ(s.uav_position, cfg.spawn.position);
  EXPECT_EQ(s.step_count, 0);
  EXPECT_EQ(reset(cfg, 7), reset(cfg, 7));
}

TEST(Reset, SpawnInsideObstacleIsConfigError) {
  WorldConfig c = open_world();
  c.obstacles.push_back({{-1, -1, 0}, {1, 1, 10}});
  EXPECT_THROW(reset(c, 0), ConfigError);
}

TEST(Reset, InvalidCameraIsConfigError) {
  WorldConfig c = open_world();
  c.camera.fov = kPi;
  EXPECT_THROW(reset(c, 0), ConfigError);
  c = open_world();
  c.control_dt = 0.0;
  EXPECT_THROW(reset(c, 0), ConfigError);
}

TEST(Step, ForwardMovesAlongHeading) {
  WorldConfig c = open_world();
  WorldState s = reset(c, 0);
  s.uav_position = {0, 0, 5};
  const StepResult r = step(s, ActionId(0), c);
  EXPECT_NEAR(r.state.uav_position.x, 0.6, 1e-15);
  EXPECT_NEAR(r.state.uav_position.y, 0.0, 1e-15);
  EXPECT_NEAR(r.state.uav_position.z, 5.0, 1e-15);
  EXPECT_EQ(r.applied_psi, 0.0);
  EXPECT_EQ(r.applied_v, 1.2);
  EXPECT_FALSE(r.collided);
  EXPECT_EQ(r.state.step_count, 1);
}

TEST(Step, ClimbIsVertical) {
  WorldConfig c = open_world();
  const WorldState s = reset(c, 0);
  const StepResult r = step(s, ActionId(1), c);
  EXPECT_NEAR(r.state.uav_position.z, 5.3, 1e-15);
  EXPECT_EQ(r.state.uav_position.x, 0.0);
  EXPECT_EQ(r.applied_psi, kPi / 2);
  EXPECT_NEAR(std::cos(r.applied_psi), 0.0, 1e-15);
}

TEST(Step, YawLeftTurnsByTwelfthOfPi) {
  WorldConfig c = open_world();
  const WorldState s = reset(c, 0);
  const StepResult r = step(s, ActionId(2), c);
  EXPECT_NEAR(r.state.uav_heading, kPi / 12, 1e-15);
  EXPECT_NEAR(r.applied_psi, kPi / 12, 1e-15);
}

TEST(Step, KinematicExactnessForAllActions) {
  WorldConfig c = open_world();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> heading(-kPi, kPi), pitch(-0.9, 0.9);
  for (int trial = 0; trial < 200; ++trial) {
    WorldState s = reset(c, 0);
    s.uav_heading = heading(rng);
    s.uav_pitch = pitch(rng);
    for (int a = 0; a < kNumActions; ++a) {
      const StepResult r = step(s, ActionId(a), c);
      const double moved = norm(r.state.uav_position - s.uav_position);
      EXPECT_NEAR(moved, r.applied_v * c.control_dt, 1e-12);
      if (a >= 2) {
        const Vec3 f0 = forward_vector(s.uav_heading, s.uav_pitch);
        const Vec3 f1 = forward_vector(r.state.uav_heading, r.state.uav_pitch);
        const double turned = std::acos(std::clamp(dot(f0, f1), -1.0, 1.0));
        // Pure yaw or pure pitch turns rotate by exactly pi/6 * dt away from
        // the pitch limit; diagonal turns never exceed it.
        if (a <= 5 && std::abs(r.state.uav_pitch) < kMaxPitch - 1e-9) {
          if (a <= 3) {
            const double dh = std::abs(normalize_heading(r.state.uav_heading - s.uav_heading));
            EXPECT_NEAR(dh, kTurnRate * c.control_dt, 1e-12);
          } else {
            EXPECT_NEAR(turned, kTurnRate * c.control_dt, 1e-9);
          }
        }
        EXPECT_LE(turned, kTurnRate * c.control_dt + 1e-9);
        EXPECT_NEAR(r.applied_psi, kTurnRate * c.control_dt, 1e-15);
      }
    }
  }
}

TEST(Step, PitchAndHeadingStayNormalized) {
  WorldConfig c = open_world();
  c.bounds = {{-500, -500, -500}, {500, 500, 500}};
  WorldState s = reset(c, 0);
  for (int i = 0; i < 100; ++i) {
    s = step(s, ActionId(4), c).state;  // pitch up
    EXPECT_LE(s.uav_pitch, kMaxPitch);
  }
  for (int i = 0; i < 100; ++i) {
    s = step(s, ActionId(2), c).state;
    EXPECT_GE(s.uav_heading, -kPi);
    EXPECT_LT(s.uav_heading, kPi);
  }
}

TEST(Step, PersonWrapsAroundWaypoints) {
  WorldConfig c = open_world();
  c.person.waypoints = {{10, 0, 0}, {10, 1, 0}};
  c.person.speed = 1.0;
  WorldState s = reset(c, 0);
  // 0.5 m per step, 1 m per leg: back at the first waypoint after 4 steps.
  for (int i = 0; i < 4; ++i) s = step(s, ActionId(1), c).state;
  EXPECT_NEAR(s.person_position.x, 10.0, 1e-12);
  EXPECT_NEAR(s.person_position.y, 0.0, 1e-12);
  EXPECT_EQ(s.person_waypoint_index, 0);
}

TEST(Step, CollisionSoundness) {
  const auto cfg = config::resolve_config("complex").world;
  std::mt19937_64 rng(11);
  for (int episode = 0; episode < 30; ++episode) {
    WorldState s = reset(cfg, 0);
    for (int t = 0; t < 300; ++t) {
      const StepResult r = step(s, ActionId(static_cast<int>(rng() % kNumActions)), cfg);
      if (!r.collided) {
        EXPECT_GE(clearance(r.state.uav_position, r.state, cfg), cfg.uav_radius);
      } else {
        EXPECT_LT(clearance(r.state.uav_position, r.state, cfg), cfg.uav_radius);
        break;
      }
      s = r.state;
    }
  }
}

TEST(Step, DeterministicTrajectories) {
  const auto cfg = config::resolve_config("simple").world;
  auto roll = [&] {
    std::mt19937_64 rng(5);
    std::vector<WorldState> states;
    WorldState s = reset(cfg, 1);
    for (int t = 0; t < 100; ++t) {
      s = step(s, ActionId(static_cast<int>(rng() % kNumActions)), cfg).state;
      states.push_back(s);
    }
    return std::pair{states, render_depth(s, cfg)};
  };
  EXPECT_EQ(roll(), roll());
}

TEST(RenderDepth, CenterPixelSeesWallDistance) {
  const WorldConfig c = wall_world();
  const WorldState s = reset(c, 0);
  const DepthImage img = render_depth(s, c);
  EXPECT_NEAR(img.at(15, 15), 3.0, 1e-12);
}

TEST(RenderDepth, EmptySceneIsMaxRange) {
  const auto cfg = config::resolve_config("empty").world;
  const DepthImage img = render_depth(reset(cfg, 0), cfg);
  for (double d : img.depths) EXPECT_EQ(d, cfg.camera.max_range);
}

TEST(RenderDepth, OffAxisPixelsFollowCosineLaw) {
  const WorldConfig c = wall_world();
  const WorldState s = reset(c, 0);
  const DepthImage img = render_depth(s, c);
  const double f = c.camera.focal_px();
  for (int col = 0; col < c.camera.width; ++col) {
    const double u = col + 0.5 - c.camera.width / 2.0;
    const double theta = std::atan(std::abs(u) / f);
    const double expected = 3.0 / std::cos(theta);
    EXPECT_NEAR(img.at(15, col), expected, 1e-12) << "col " << col;
    EXPECT_NEAR(march(s.uav_position, pixel_ray(s, c.camera, 15, col), s, c, c.camera.max_range, 1e-4),
                expected, 2e-4);
  }
}

TEST(RenderDepth, MatchesRayMarcherInPresetWorlds) {
  for (const char* name : {"simple", "complex"}) {
    const auto cfg = config::resolve_config(name).world;
    std::mt19937_64 rng(17);
    WorldState s = reset(cfg, 0);
    for (int t = 0; t < 40; ++t) {
      const StepResult r = step(s, ActionId(static_cast<int>(rng() % kNumActions)), cfg);
      if (r.collided) break;
      s = r.state;
      const DepthImage img = render_depth(s, cfg);
      for (int k = 0; k < 8; ++k) {
        const int row = static_cast<int>(rng() % cfg.camera.height);
        const int col = static_cast<int>(rng() % cfg.camera.width);
        const Vec3 d = pixel_ray(s, cfg.camera, row, col);
        const double exact = img.at(row, col);
        // Nothing solid before the reported hit; solid just past it.
        EXPECT_GE(march(s.uav_position, d, s, cfg, exact - 1e-6, 5e-3), exact - 1e-6) << name;
        if (exact < cfg.camera.max_range) EXPECT_TRUE(inside_solid(s.uav_position + d * (exact + 1e-7), s, cfg));
      }
    }
  }
}

TEST(RenderDepth, ShrinkingMaxRangeNeverIncreasesDepth) {
  auto cfg = config::resolve_config("complex").world;
  const WorldState s = reset(cfg, 0);
  const DepthImage wide = render_depth(s, cfg);
  cfg.camera.max_range = 5.0;
  const DepthImage narrow = render_depth(s, cfg);
  for (std::size_t i = 0; i < wide.depths.size(); ++i) {
    EXPECT_LE(narrow.depths[i], wide.depths[i]);
    EXPECT_GT(narrow.depths[i], 0.0);
  }
}

TEST(PersonBBox, BehindUavIsNone) {
  WorldConfig c = open_world();
  c.person.waypoints = {{-5, 0, 0}};
  c.spawn = {{0, 0, 0.9}, 0.0};
  EXPECT_FALSE(person_bbox(reset(c, 0), c).has_value());
}

TEST(PersonBBox, PinholeProjection) {
  WorldConfig c = open_world();
  const double dist = 8.0;
  c.person.waypoints = {{dist, 0, 0}};
  c.spawn = {{0, 0, 0.9}, 0.0};  // eye level with the person's middle
  const auto box = person_bbox(reset(c, 0), c);
  ASSERT_TRUE(box.has_value());
  const double f = c.camera.focal_px();
  const double h = c.person.height;
  EXPECT_NEAR(box->center_x(), c.camera.width / 2.0, 1e-12);
  EXPECT_NEAR(0.5 * (box->y_min + box->y_max), c.camera.height / 2.0, 1e-12);
  // The nearest rim point sits at dist - radius.
  EXPECT_NEAR(box->height(), h * f / (dist - c.person.radius), 1e-9);
  EXPECT_NEAR(box->height(), h * f / dist, 0.05 * h * f / dist);
}

TEST(PersonBBox, OccludedByWallIsNone) {
  WorldConfig c = open_world();
  c.person.waypoints = {{8, 0, 0}};
  c.obstacles.push_back({{4, -5, 0}, {5, 5, 10}});
  c.spawn = {{0, 0, 0.9}, 0.0};
  EXPECT_FALSE(person_bbox(reset(c, 0), c).has_value());
}

TEST(PersonBBox, ClippedToImage) {
  WorldConfig c = open_world();
  c.person.waypoints = {{1.0, 0, 0}};
  c.spawn = {{0, 0, 0.9}, 0.0};
  const auto box = person_bbox(reset(c, 0), c);
  ASSERT_TRUE(box.has_value());
  EXPECT_GE(box->y_min, 0.0);
  EXPECT_LE(box->y_max, c.camera.height);
  EXPECT_DOUBLE_EQ(box->height(), c.camera.height);
}
