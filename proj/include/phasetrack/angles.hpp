#pragma once

#include <cmath>
#include <numbers>

namespace phasetrack {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Reduce an angle to (-pi, pi].
inline double wrap_angle(double a) {
  double w = std::remainder(a, kTwoPi);
  if (w <= -kPi) w += kTwoPi;
  return w;
}

/// Interpolate from angle `from` towards angle `to` along the shorter arc.
/// weight 0 returns `from`, weight 1 returns `to` (mod 2 pi). Weights outside
/// [0, 1] extrapolate along the same arc.
inline double shorter_arc_mix(double from, double to, double weight) {
  return wrap_angle(from + weight * wrap_angle(to - from));
}

}  // namespace phasetrack
