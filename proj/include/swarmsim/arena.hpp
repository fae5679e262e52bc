#pragma once

#include "swarmsim/geometry.hpp"

namespace swarmsim {

/// Arena centered on the origin. Bounded kinds span [-w/2, w/2] x [-h/2, h/2].
/// Walls are invisible to the sensor: clamping only limits position.
struct ArenaSpec {
  enum class Kind { Unbounded, BoundedClamp, Torus };

  Kind kind = Kind::Unbounded;
  double width = 0.0;
  double height = 0.0;

  static ArenaSpec unbounded() { return {}; }
  static ArenaSpec clamp(double w, double h) { return {Kind::BoundedClamp, w, h}; }
  static ArenaSpec torus(double w, double h) { return {Kind::Torus, w, h}; }

  bool operator==(const ArenaSpec&) const = default;

  void validate() const;

  /// Position after the boundary rule.
  Vec2 apply(Vec2 p) const;

  /// Shortest displacement from `from` to `to` (minimum image on a torus).
  Vec2 displacement(Vec2 from, Vec2 to) const;
};

}  // namespace swarmsim
