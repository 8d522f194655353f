#pragma once

// Generators and independent reference implementations shared by the tests.

#include "emtr/geom.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

namespace support {

using emtr::geom::Point3;
using emtr::geom::PointCloud;
using emtr::geom::RotationMatrix;

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline PointCloud random_cloud(std::mt19937_64& rng, std::size_t n, double extent = 1.0) {
  PointCloud c;
  c.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    c.points.emplace_back(uniform(rng, -extent, extent), uniform(rng, -extent, extent), uniform(rng, -extent, extent));
  }
  return c;
}

/// Points on a regular grid over the faces of the unit cube [-1,1]^3
/// (minus the edges, so every point has a full planar neighborhood).
inline PointCloud cube_surface(int per_side) {
  PointCloud c;
  const double step = 2.0 / per_side;
  for (int axis = 0; axis < 3; ++axis) {
    for (double sign : {-1.0, 1.0}) {
      for (int i = 0; i < per_side; ++i) {
        for (int j = 0; j < per_side; ++j) {
          Point3 p;
          p[axis] = sign;
          p[(axis + 1) % 3] = -1.0 + step * (i + 0.5);
          p[(axis + 2) % 3] = -1.0 + step * (j + 0.5);
          c.points.push_back(p);
        }
      }
    }
  }
  return c;
}

inline RotationMatrix rot_x(double a) {
  RotationMatrix m;
  m << 1, 0, 0, 0, std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a);
  return m;
}
inline RotationMatrix rot_y(double a) {
  RotationMatrix m;
  m << std::cos(a), 0, std::sin(a), 0, 1, 0, -std::sin(a), 0, std::cos(a);
  return m;
}
inline RotationMatrix rot_z(double a) {
  RotationMatrix m;
  m << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
  return m;
}

/// Per-axis product oracle for Z-Y-X Euler angles.
inline RotationMatrix per_axis_rotation(double t1, double t2, double t3) {
  return rot_z(t1) * rot_y(t2) * rot_x(t3);
}

inline RotationMatrix random_rotation(std::mt19937_64& rng) {
  using std::numbers::pi;
  return per_axis_rotation(uniform(rng, -pi, pi), uniform(rng, -pi / 2, pi / 2), uniform(rng, -pi, pi));
}

struct ScanHit {
  std::size_t index = 0;
  double distance = std::numeric_limits<double>::infinity();
};

/// Exhaustive nearest-neighbor scan; lowest index wins ties.
inline ScanHit linear_scan(const std::vector<Point3>& pts, const Point3& q) {
  ScanHit best;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double d2 = (pts[i] - q).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best.index = i;
    }
  }
  best.distance = std::sqrt(best_d2);
  return best;
}

/// O(n^2) mean distance to the nearest other point.
inline double brute_resolution(const std::vector<Point3>& pts) {
  double sum = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < pts.size(); ++j) {
      if (i != j) best = std::min(best, (pts[i] - pts[j]).norm());
    }
    sum += best;
  }
  return sum / static_cast<double>(pts.size());
}

}  // namespace support
