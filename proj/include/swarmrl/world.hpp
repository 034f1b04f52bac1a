#pragma once

#include <algorithm>
#include <cmath>

#include "swarmrl/rng.hpp"

namespace swarm {

// Square 2D torus spanning [-half_width, +half_width) in both coordinates.
struct WorldExtent {
  double half_width = 10.0;
};

struct AgentPose {
  double x = 0.0;
  double y = 0.0;
  double phi = 0.0;  // heading, kept in (-pi, pi]
};

// Motion command: forward speed in [0, 1], turn angle in [-pi, pi].
struct AgentAction {
  double speed = 0.0;
  double turn = 0.0;
};

// Maps v into [-half_width, +half_width), congruent to v modulo 2*half_width.
// Values already in range pass through bit-exactly.
inline double wrap_coordinate(double v, double half_width) {
  if (v >= -half_width && v < half_width) return v;
  double period = 2.0 * half_width;
  double w = std::fmod(v + half_width, period);
  if (w < 0.0) w += period;
  double r = w - half_width;
  // the additions above can land exactly on the open upper boundary
  if (r >= half_width) r -= period;
  return r;
}

// Maps a into (-pi, pi]; canonical angles pass through bit-exactly.
inline double normalize_angle(double a) {
  if (a > -kPi && a <= kPi) return a;
  double r = std::fmod(a + kPi, 2.0 * kPi);
  if (r <= 0.0) r += 2.0 * kPi;
  return r - kPi;
}

inline AgentAction clamp_action(const AgentAction& a) {
  return {std::clamp(a.speed, 0.0, 1.0), std::clamp(a.turn, -kPi, kPi)};
}

// Deterministic kinematics: turn first, then advance one speed unit along the
// new heading, wrapping both coordinates on the torus.
inline AgentPose step_pose(const AgentPose& p, const AgentAction& a,
                           const WorldExtent& w) {
  double heading = p.phi + a.turn;
  AgentPose next;
  next.x = wrap_coordinate(p.x + a.speed * std::cos(heading), w.half_width);
  next.y = wrap_coordinate(p.y + a.speed * std::sin(heading), w.half_width);
  next.phi = normalize_angle(heading);
  return next;
}

// Minimum-image Euclidean distance between two canonical positions on the
// torus. Symmetric by construction: both argument orders see the same
// absolute coordinate differences.
inline double torus_distance(const AgentPose& p, const AgentPose& q,
                             const WorldExtent& w) {
  double period = 2.0 * w.half_width;
  double dx = std::abs(q.x - p.x);
  if (dx > w.half_width) dx = period - dx;
  double dy = std::abs(q.y - p.y);
  if (dy > w.half_width) dy = period - dy;
  return std::hypot(dx, dy);
}

}  // namespace swarm
