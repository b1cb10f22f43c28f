#include "uavx/worldsim.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "uavx/errors.h"

namespace uavx::world {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kMinDepth = 1e-6;
constexpr int kPersonSamples = 16;

Vec3 left_vector(double heading) { return {-std::sin(heading), std::cos(heading), 0.0}; }

Vec3 up_vector(double heading, double pitch) {
  return {-std::sin(pitch) * std::cos(heading), -std::sin(pitch) * std::sin(heading),
          std::cos(pitch)};
}

bool inside(const Vec3& p, const Box& b) {
  return p.x > b.min.x && p.x < b.max.x && p.y > b.min.y && p.y < b.max.y && p.z > b.min.z &&
         p.z < b.max.z;
}

// Unit turn directions (yaw, pitch) for actions 2..9.
constexpr double kDiag = 0.70710678118654752440;
constexpr double kTurnDirs[8][2] = {
    {1, 0}, {-1, 0}, {0, 1}, {0, -1}, {kDiag, kDiag}, {-kDiag, kDiag}, {kDiag, -kDiag}, {-kDiag, -kDiag},
};

void advance_person(WorldState& state, const WorldConfig& config) {
  const auto& path = config.person.waypoints;
  const int n = static_cast<int>(path.size());
  if (n < 2) return;
  double remaining = config.person.speed * config.control_dt;
  // Bounded by one full lap per call; a zero-length lap would otherwise spin.
  for (int hops = 0; hops <= n && remaining > 0.0; ++hops) {
    const int next = (state.person_waypoint_index + 1) % n;
    const Vec3 delta = path[next] - state.person_position;
    const double dist = norm(delta);
    if (remaining >= dist) {
      state.person_position = path[next];
      state.person_waypoint_index = next;
      remaining -= dist;
    } else {
      state.person_position = state.person_position + delta * (remaining / dist);
      remaining = 0.0;
    }
  }
}

}  // namespace

ActionId::ActionId(int id) : id_(id) {
  if (id < 0 || id >= kNumActions) {
    throw ArgumentError("action id out of range: " + std::to_string(id));
  }
}

double CameraConfig::focal_px() const { return 0.5 * width / std::tan(0.5 * fov); }

void WorldConfig::validate() const {
  if (!bounds.valid()) throw ConfigError("world bounds must have positive extent");
  for (std::size_t i = 0; i < obstacles.size(); ++i) {
    if (!obstacles[i].valid()) {
      throw ConfigError("obstacle " + std::to_string(i) + " has non-positive extent");
    }
  }
  if (!(control_dt > 0.0)) throw ConfigError("control_dt must be positive");
  if (!(uav_radius > 0.0)) throw ConfigError("uav_radius must be positive");
  if (camera.width < 1 || camera.height < 1) throw ConfigError("camera size must be positive");
  if (!(camera.max_range > 0.0)) throw ConfigError("camera max_range must be positive");
  if (!(camera.fov > 0.0 && camera.fov < kPi)) throw ConfigError("camera fov must lie in (0, pi)");
  if (has_person() && !(person.radius > 0.0 && person.height > 0.0 && person.speed >= 0.0)) {
    throw ConfigError("person radius/height must be positive and speed non-negative");
  }
  if (!inside(spawn.position, bounds) ||
      distance_to_bounds_interior(spawn.position, bounds) < uav_radius) {
    throw ConfigError("spawn position is not strictly inside the world bounds");
  }
  for (std::size_t i = 0; i < obstacles.size(); ++i) {
    if (distance_to_box(spawn.position, obstacles[i]) < uav_radius) {
      throw ConfigError("spawn position collides with obstacle " + std::to_string(i));
    }
  }
}

Vec3 forward_vector(double heading, double pitch) {
  return {std::cos(pitch) * std::cos(heading), std::cos(pitch) * std::sin(heading),
          std::sin(pitch)};
}

double normalize_heading(double angle) {
  double a = std::fmod(angle + kPi, 2.0 * kPi);
  if (a < 0.0) a += 2.0 * kPi;
  a -= kPi;
  return a >= kPi ? -kPi : a;
}

WorldState reset(const WorldConfig& config, std::uint64_t /*seed*/) {
  config.validate();
  WorldState state;
  state.uav_position = config.spawn.position;
  state.uav_heading = normalize_heading(config.spawn.heading);
  state.uav_pitch = 0.0;
  if (config.has_person()) state.person_position = config.person.waypoints.front();
  state.person_waypoint_index = 0;
  state.step_count = 0;
  return state;
}

void place_person(WorldState& state, const WorldConfig& config, int index) {
  if (!config.has_person()) return;
  const int n = static_cast<int>(config.person.waypoints.size());
  const int wrapped = ((index % n) + n) % n;
  state.person_waypoint_index = wrapped;
  state.person_position = config.person.waypoints[wrapped];
}

StepResult step(const WorldState& state, ActionId action, const WorldConfig& config) {
  StepResult out;
  out.state = state;
  WorldState& next = out.state;
  const double dt = config.control_dt;
  const int id = action.value();

  if (id == 1) {
    out.applied_v = kClimbSpeed;
    out.applied_psi = kPi / 2.0;
    next.uav_position.z += kClimbSpeed * dt;
  } else {
    out.applied_v = kForwardSpeed;
    if (id >= 2) {
      const double angle = kTurnRate * dt;
      next.uav_heading = normalize_heading(state.uav_heading + kTurnDirs[id - 2][0] * angle);
      next.uav_pitch = std::clamp(state.uav_pitch + kTurnDirs[id - 2][1] * angle, -kMaxPitch, kMaxPitch);
      out.applied_psi = angle;
    }
    next.uav_position =
        state.uav_position + forward_vector(next.uav_heading, next.uav_pitch) * (kForwardSpeed * dt);
  }

  advance_person(next, config);
  next.step_count = state.step_count + 1;
  out.collided = in_collision(next, config);
  return out;
}

Cylinder person_cylinder(const WorldState& state, const WorldConfig& config) {
  return {state.person_position, config.person.radius, config.person.height};
}

double clearance(const Vec3& position, const WorldState& state, const WorldConfig& config) {
  double best = inside(position, config.bounds) ? distance_to_bounds_interior(position, config.bounds)
                                                : 0.0;
  for (const Box& box : config.obstacles) best = std::min(best, distance_to_box(position, box));
  if (config.has_person()) {
    best = std::min(best, distance_to_cylinder(position, person_cylinder(state, config)));
  }
  return best;
}

bool in_collision(const WorldState& state, const WorldConfig& config) {
  return clearance(state.uav_position, state, config) < config.uav_radius;
}

double cast_ray(const Vec3& origin, const Vec3& dir, const WorldState& state,
                const WorldConfig& config, double max_range, bool include_person) {
  double best = std::min(max_range, ray_bounds_exit(origin, dir, config.bounds));
  for (const Box& box : config.obstacles) {
    if (auto t = ray_box(origin, dir, box); t && *t < best) best = *t;
  }
  if (include_person && config.has_person()) {
    if (auto t = ray_cylinder(origin, dir, person_cylinder(state, config)); t && *t < best) best = *t;
  }
  return std::max(best, kMinDepth);
}

Vec3 pixel_ray(const WorldState& state, const CameraConfig& camera, int row, int col) {
  const double f = camera.focal_px();
  const double u = col + 0.5 - 0.5 * camera.width;
  const double v = row + 0.5 - 0.5 * camera.height;
  const Vec3 dir = forward_vector(state.uav_heading, state.uav_pitch) +
                   left_vector(state.uav_heading) * (-u / f) +
                   up_vector(state.uav_heading, state.uav_pitch) * (-v / f);
  return dir * (1.0 / norm(dir));
}

DepthImage render_depth(const WorldState& state, const WorldConfig& config) {
  const CameraConfig& cam = config.camera;
  DepthImage image(cam.width, cam.height, cam.max_range);
  for (int row = 0; row < cam.height; ++row) {
    for (int col = 0; col < cam.width; ++col) {
      image.at(row, col) =
          cast_ray(state.uav_position, pixel_ray(state, cam, row, col), state, config, cam.max_range);
    }
  }
  return image;
}

std::optional<BBox> person_bbox(const WorldState& state, const WorldConfig& config) {
  if (!config.has_person()) return std::nullopt;
  const CameraConfig& cam = config.camera;
  const Cylinder cyl = person_cylinder(state, config);
  const Vec3 eye = state.uav_position;
  const Vec3 fwd = forward_vector(state.uav_heading, state.uav_pitch);
  const Vec3 left = left_vector(state.uav_heading);
  const Vec3 up = up_vector(state.uav_heading, state.uav_pitch);
  const double f = cam.focal_px();

  double u_min = std::numeric_limits<double>::infinity();
  double v_min = u_min;
  double u_max = -u_min;
  double v_max = -u_min;
  bool any = false;
  for (int k = 0; k < kPersonSamples; ++k) {
    const double angle = 2.0 * kPi * k / kPersonSamples;
    const Vec3 rim{cyl.radius * std::cos(angle), cyl.radius * std::sin(angle), 0.0};
    for (double z : {0.0, cyl.height}) {
      const Vec3 rel = cyl.base + rim + Vec3{0, 0, z} - eye;
      const double depth = dot(rel, fwd);
      if (depth <= 1e-6) continue;
      const double u = 0.5 * cam.width - f * dot(rel, left) / depth;
      const double v = 0.5 * cam.height - f * dot(rel, up) / depth;
      u_min = std::min(u_min, u);
      u_max = std::max(u_max, u);
      v_min = std::min(v_min, v);
      v_max = std::max(v_max, v);
      any = true;
    }
  }
  if (!any) return std::nullopt;

  BBox box{std::max(u_min, 0.0), std::max(v_min, 0.0), std::min(u_max, double(cam.width)),
           std::min(v_max, double(cam.height))};
  if (box.x_max <= box.x_min || box.y_max <= box.y_min) return std::nullopt;

  // Occlusion and range test along the ray to the person's center.
  const Vec3 center = cyl.base + Vec3{0, 0, 0.5 * cyl.height};
  const Vec3 to_center = center - eye;
  const double dist = norm(to_center);
  if (dist > cam.max_range) return std::nullopt;
  const Vec3 dir = to_center * (1.0 / dist);
  if (cast_ray(eye, dir, state, config, dist, /*include_person=*/false) < dist - 1e-9) {
    return std::nullopt;
  }
  return box;
}

}  // namespace uavx::world
