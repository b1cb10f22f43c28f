#pragma once

#include <cstddef>
#include <vector>

namespace uavx {

// Row-major grid of metric depths.
struct DepthImage {
  int width = 0;
  int height = 0;
  std::vector<double> depths;

  DepthImage() = default;
  DepthImage(int w, int h, double fill) : width(w), height(h), depths(static_cast<std::size_t>(w) * h, fill) {}

  double& at(int row, int col) { return depths[static_cast<std::size_t>(row) * width + col]; }
  double at(int row, int col) const { return depths[static_cast<std::size_t>(row) * width + col]; }

  bool operator==(const DepthImage&) const = default;
};

// Axis-aligned image box in continuous pixel coordinates: x grows to the
// right, y grows downwards, the image spans [0, width] x [0, height].
struct BBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double center_x() const { return 0.5 * (x_min + x_max); }
  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  // A pixel belongs to the box when its center does.
  bool contains_pixel(int row, int col) const {
    const double cx = col + 0.5;
    const double cy = row + 0.5;
    return cx >= x_min && cx <= x_max && cy >= y_min && cy <= y_max;
  }

  bool operator==(const BBox&) const = default;
};

}  // namespace uavx
