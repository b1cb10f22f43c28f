#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "uavx/config.h"

namespace uavx::config {
namespace {

struct Preset {
  std::string_view name;
  std::string_view text;
};

// Ring corridor around a solid core; no person.
constexpr std::string_view kCorridor = R"(# Closed ring corridor, 6 m wide, 5 m tall.
world.name = corridor
world.bounds = -20 -10 0 20 10 5
world.obstacle = -14 -4 0 14 4 5
world.spawn = 0 7 2.5 0
world.control_dt = 0.5
world.uav_radius = 0.3
)";

// Small room, four pillars, one person walking a square loop.
constexpr std::string_view kSimple = R"(# Simple environment: 30 x 30 m room.
world.name = simple
world.bounds = -15 -15 0 15 15 5
world.obstacle = -7 -7 0 -5 -5 5
world.obstacle = 5 -7 0 7 -5 5
world.obstacle = -7 5 0 -5 7 5
world.obstacle = 5 5 0 7 7 5
world.waypoint = -3 -3 0
world.waypoint = 3 -3 0
world.waypoint = 3 3 0
world.waypoint = -3 3 0
world.person_speed = 0.5
world.spawn = -12 0 2 0
world.control_dt = 0.5
world.uav_radius = 0.3
)";

// Larger cluttered hall: pillars, wall segments, low crates and a person
// crossing the central aisle.
constexpr std::string_view kComplex = R"(# Complex environment: 50 x 50 m hall with mixed clutter.
world.name = complex
world.bounds = -25 -25 0 25 25 6
world.obstacle = -15 -2 0 -13 2 6
world.obstacle = -8 8 0 -6 10 6
world.obstacle = -8 -10 0 -6 -8 6
world.obstacle = 0 -3 0 2 -1 6
world.obstacle = 0 14 0 12 15 6
world.obstacle = 0 -15 0 12 -14 6
world.obstacle = 8 2 0 10 4 6
world.obstacle = 14 -6 0 16 6 6
world.obstacle = -20 12 0 -16 16 2
world.obstacle = -20 -16 0 -16 -12 2
world.obstacle = 18 16 0 22 20 3
world.obstacle = 18 -20 0 22 -16 3
world.obstacle = -4 18 0 -2 24 6
world.obstacle = -4 -24 0 -2 -18 6
world.waypoint = -10 -6 0
world.waypoint = 6 -6 0
world.waypoint = 6 6 0
world.waypoint = -10 6 0
world.person_speed = 0.6
world.spawn = -22 0 2 0
world.control_dt = 0.5
world.uav_radius = 0.3
)";

// Bounds far beyond the reach of a 500-step episode; no solids.
constexpr std::string_view kEmpty = R"(# Empty world.
world.name = empty
world.bounds = -1000 -1000 -1000 1000 1000 1000
world.spawn = 0 0 2 0
)";

constexpr std::array<Preset, 4> kPresets = {{
    {"simple", kSimple},
    {"complex", kComplex},
    {"corridor", kCorridor},
    {"empty", kEmpty},
}};

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& p : kPresets) names.emplace_back(p.name);
  return names;
}

std::optional<std::string_view> preset_text(std::string_view name) {
  for (const auto& p : kPresets) {
    if (p.name == name) return p.text;
  }
  return std::nullopt;
}

}  // namespace uavx::config
