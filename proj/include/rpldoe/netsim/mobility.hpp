#pragma once

#include <chrono>
#include <cmath>

#include "rpldoe/random.hpp"

namespace rpldoe::netsim {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Vec2&) const = default;
};

inline double distance(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

struct Area {
  double width = 100.0;
  double height = 100.0;

  bool contains(Vec2 p) const { return p.x >= 0 && p.x <= width && p.y >= 0 && p.y <= height; }
  Vec2 center() const { return {width / 2, height / 2}; }
  bool operator==(const Area&) const = default;
};

template <typename URBG>
Vec2 uniform_point(const Area& area, URBG& rng) {
  const double x = uniform_real(rng, 0.0, area.width);
  const double y = uniform_real(rng, 0.0, area.height);
  return {x, y};
}

struct Waypoint {
  Vec2 position;
  Vec2 target;
};

/// Random waypoint, zero pause: move `speed * dt` toward the target, stopping
/// on it; a node that arrives draws its next target uniformly in the area.
template <typename URBG>
void mobility_step(Waypoint& w, double speed_mps, std::chrono::microseconds dt, const Area& area,
                   URBG& rng) {
  if (speed_mps <= 0.0 || dt.count() <= 0) return;
  const double step = speed_mps * static_cast<double>(dt.count()) * 1e-6;
  const double dx = w.target.x - w.position.x;
  const double dy = w.target.y - w.position.y;
  const double dist = std::hypot(dx, dy);
  if (dist <= step) {
    w.position = w.target;
    w.target = uniform_point(area, rng);
    return;
  }
  w.position.x += dx / dist * step;
  w.position.y += dy / dist * step;
}

}  // namespace rpldoe::netsim
