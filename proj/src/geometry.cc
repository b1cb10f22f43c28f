#include "uavx/geometry.h"

#include <algorithm>
#include <array>
#include <limits>

namespace uavx::world {
namespace {

constexpr double kParallelEps = 1e-12;

double component(const Vec3& v, int axis) {
  return axis == 0 ? v.x : (axis == 1 ? v.y : v.z);
}

}  // namespace

double distance_to_box(const Vec3& p, const Box& box) {
  const double dx = std::max({box.min.x - p.x, 0.0, p.x - box.max.x});
  const double dy = std::max({box.min.y - p.y, 0.0, p.y - box.max.y});
  const double dz = std::max({box.min.z - p.z, 0.0, p.z - box.max.z});
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

double distance_to_bounds_interior(const Vec3& p, const Box& bounds) {
  return std::min({p.x - bounds.min.x, bounds.max.x - p.x, p.y - bounds.min.y,
                   bounds.max.y - p.y, p.z - bounds.min.z, bounds.max.z - p.z});
}

double distance_to_cylinder(const Vec3& p, const Cylinder& cyl) {
  const double radial = std::hypot(p.x - cyl.base.x, p.y - cyl.base.y);
  const double dr = std::max(0.0, radial - cyl.radius);
  const double dz = std::max({cyl.base.z - p.z, 0.0, p.z - (cyl.base.z + cyl.height)});
  return std::hypot(dr, dz);
}

std::optional<double> ray_box(const Vec3& origin, const Vec3& dir, const Box& box) {
  double t_enter = -std::numeric_limits<double>::infinity();
  double t_exit = std::numeric_limits<double>::infinity();
  for (int axis = 0; axis < 3; ++axis) {
    const double o = component(origin, axis);
    const double d = component(dir, axis);
    const double lo = component(box.min, axis);
    const double hi = component(box.max, axis);
    if (std::abs(d) < kParallelEps) {
      if (o < lo || o > hi) return std::nullopt;
      continue;
    }
    double t0 = (lo - o) / d;
    double t1 = (hi - o) / d;
    if (t0 > t1) std::swap(t0, t1);
    t_enter = std::max(t_enter, t0);
    t_exit = std::min(t_exit, t1);
  }
  if (t_exit < std::max(t_enter, 0.0)) return std::nullopt;
  return std::max(t_enter, 0.0);
}

std::optional<double> ray_cylinder(const Vec3& origin, const Vec3& dir, const Cylinder& cyl) {
  const double ox = origin.x - cyl.base.x;
  const double oy = origin.y - cyl.base.y;
  const double z_lo = cyl.base.z;
  const double z_hi = cyl.base.z + cyl.height;
  const double r2 = cyl.radius * cyl.radius;

  if (ox * ox + oy * oy <= r2 && origin.z >= z_lo && origin.z <= z_hi) return 0.0;

  std::optional<double> best;
  auto consider = [&](double t) {
    if (t >= 0.0 && (!best || t < *best)) best = t;
  };

  const double a = dir.x * dir.x + dir.y * dir.y;
  if (a > kParallelEps) {
    const double b = 2.0 * (ox * dir.x + oy * dir.y);
    const double c = ox * ox + oy * oy - r2;
    const double disc = b * b - 4.0 * a * c;
    if (disc >= 0.0) {
      const double root = std::sqrt(disc);
      for (double t : {(-b - root) / (2.0 * a), (-b + root) / (2.0 * a)}) {
        const double z = origin.z + t * dir.z;
        if (z >= z_lo && z <= z_hi) consider(t);
      }
    }
  }
  if (std::abs(dir.z) > kParallelEps) {
    for (double plane : {z_lo, z_hi}) {
      const double t = (plane - origin.z) / dir.z;
      const double x = ox + t * dir.x;
      const double y = oy + t * dir.y;
      if (x * x + y * y <= r2) consider(t);
    }
  }
  return best;
}

double ray_bounds_exit(const Vec3& origin, const Vec3& dir, const Box& bounds) {
  double t_exit = std::numeric_limits<double>::infinity();
  for (int axis = 0; axis < 3; ++axis) {
    const double d = component(dir, axis);
    const double o = component(origin, axis);
    if (d > kParallelEps) {
      t_exit = std::min(t_exit, (component(bounds.max, axis) - o) / d);
    } else if (d < -kParallelEps) {
      t_exit = std::min(t_exit, (component(bounds.min, axis) - o) / d);
    }
  }
  return std::max(t_exit, 0.0);
}

}  // namespace uavx::world
