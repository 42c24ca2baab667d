#pragma once

#include <cmath>
#include <numbers>

namespace bciassist {

// Wraps an angle into (-pi, pi].
inline double normalize_angle(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  if (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
  return a;
}

// Planar pose of the mobile base (and of anything placed in the 2D world).
struct Pose2D {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;  // (-pi, pi]

  Pose2D() = default;
  Pose2D(double x_, double y_, double theta_)
      : x(x_), y(y_), theta(normalize_angle(theta_)) {}

  friend bool operator==(const Pose2D&, const Pose2D&) = default;
};

}  // namespace bciassist
