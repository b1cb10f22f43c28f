#pragma once

#include <cstdint>
#include <numbers>
#include <optional>
#include <vector>

#include "uavx/geometry.h"
#include "uavx/image.h"

namespace uavx::world {

inline constexpr int kNumActions = 10;
inline constexpr double kForwardSpeed = 1.2;   // m/s
inline constexpr double kClimbSpeed = 0.6;     // m/s
inline constexpr double kTurnRate = std::numbers::pi / 6.0;  // rad/s
inline constexpr double kMaxPitch = std::numbers::pi / 3.0;

// One of the ten discrete UAV commands.
//   0      forward at 1.2 m/s
//   1      climb at 0.6 m/s
//   2..9   forward at 1.2 m/s while turning at pi/6 rad/s towards
//          left, right, up, down, up-left, up-right, down-left, down-right
class ActionId {
 public:
  constexpr ActionId() = default;
  explicit ActionId(int id);

  constexpr int value() const { return id_; }
  constexpr bool operator==(const ActionId&) const = default;

 private:
  int id_ = 0;
};

struct CameraConfig {
  int width = 32;
  int height = 32;
  double fov = std::numbers::pi / 2.0;  // horizontal, radians
  double max_range = 20.0;

  // Pinhole focal length in pixels.
  double focal_px() const;
};

struct PersonPath {
  std::vector<Vec3> waypoints;  // feet positions; empty means no person
  double speed = 0.5;
  double radius = 0.3;
  double height = 1.8;
};

struct Pose {
  Vec3 position;
  double heading = 0.0;
};

struct WorldConfig {
  Box bounds{{-50, -50, 0}, {50, 50, 10}};
  std::vector<Box> obstacles;
  PersonPath person;
  double uav_radius = 0.3;
  double control_dt = 0.5;
  CameraConfig camera;
  Pose spawn{{0, 0, 2}, 0.0};

  bool has_person() const { return !person.waypoints.empty(); }
  // Throws ConfigError on any violated invariant.
  void validate() const;
};

struct WorldState {
  Vec3 uav_position;
  double uav_heading = 0.0;  // [-pi, pi)
  double uav_pitch = 0.0;    // [-pi/3, pi/3]
  Vec3 person_position;
  int person_waypoint_index = 0;
  int step_count = 0;

  bool operator==(const WorldState&) const = default;
};

struct StepResult {
  WorldState state;
  bool collided = false;
  double applied_v = 0.0;
  double applied_psi = 0.0;
};

// Unit vector along the UAV's current heading and pitch.
Vec3 forward_vector(double heading, double pitch);
double normalize_heading(double angle);

// Spawns the UAV and puts the person on its first waypoint. The world is
// fully deterministic, so the seed does not influence the initial state.
WorldState reset(const WorldConfig& config, std::uint64_t seed);

// Moves the person onto waypoint `index` (modulo the path length).
void place_person(WorldState& state, const WorldConfig& config, int index);

StepResult step(const WorldState& state, ActionId action, const WorldConfig& config);

Cylinder person_cylinder(const WorldState& state, const WorldConfig& config);

// Smallest distance from the UAV center to any solid: obstacles, world
// bounds and the person.
double clearance(const Vec3& position, const WorldState& state, const WorldConfig& config);
bool in_collision(const WorldState& state, const WorldConfig& config);

// Distance along a unit ray to the first solid, capped at `max_range`.
double cast_ray(const Vec3& origin, const Vec3& dir, const WorldState& state,
                const WorldConfig& config, double max_range, bool include_person = true);

// Unit ray through the center of pixel (row, col).
Vec3 pixel_ray(const WorldState& state, const CameraConfig& camera, int row, int col);

DepthImage render_depth(const WorldState& state, const WorldConfig& config);

std::optional<BBox> person_bbox(const WorldState& state, const WorldConfig& config);

}  // namespace uavx::world
