#pragma once

#include <cmath>
#include <optional>

namespace uavx::world {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  constexpr bool operator==(const Vec3&) const = default;
};

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

// Axis-aligned box, min corner inclusive.
struct Box {
  Vec3 min;
  Vec3 max;

  bool operator==(const Box&) const = default;
  bool valid() const { return min.x < max.x && min.y < max.y && min.z < max.z; }
};

// Solid vertical cylinder standing on `base`.
struct Cylinder {
  Vec3 base;
  double radius = 0.0;
  double height = 0.0;
};

// Euclidean distance from p to the solid box (0 when inside).
double distance_to_box(const Vec3& p, const Box& box);

// Distance from an interior point to the nearest face of an enclosing box.
// Negative when p lies outside.
double distance_to_bounds_interior(const Vec3& p, const Box& bounds);

double distance_to_cylinder(const Vec3& p, const Cylinder& cyl);

// Ray queries take a unit direction and return the smallest t >= 0 at which
// the ray enters the solid, or nullopt.
std::optional<double> ray_box(const Vec3& origin, const Vec3& dir, const Box& box);
std::optional<double> ray_cylinder(const Vec3& origin, const Vec3& dir, const Cylinder& cyl);

// Exit distance of a ray starting inside `bounds`.
double ray_bounds_exit(const Vec3& origin, const Vec3& dir, const Box& bounds);

}  // namespace uavx::world
