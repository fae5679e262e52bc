#include "swarmsim/arena.hpp"

#include <algorithm>
#include <cmath>

#include "swarmsim/errors.hpp"

namespace swarmsim {

namespace {

// Wraps into [-extent/2, extent/2).
double wrap_coordinate(double v, double extent) {
  double r = std::fmod(v + 0.5 * extent, extent);
  if (r < 0.0) r += extent;
  if (r >= extent) r = 0.0;
  return r - 0.5 * extent;
}

// Minimum-image difference in [-extent/2, extent/2).
double wrap_delta(double d, double extent) { return wrap_coordinate(d, extent); }

}  // namespace

void ArenaSpec::validate() const {
  if (kind == Kind::Unbounded) return;
  if (!(width > 0.0) || !(height > 0.0) || !std::isfinite(width) || !std::isfinite(height)) {
    throw ConfigError("bounded arena needs width and height > 0");
  }
}

Vec2 ArenaSpec::apply(Vec2 p) const {
  switch (kind) {
    case Kind::Unbounded:
      return p;
    case Kind::BoundedClamp:
      return {std::clamp(p.x, -0.5 * width, 0.5 * width), std::clamp(p.y, -0.5 * height, 0.5 * height)};
    case Kind::Torus:
      return {wrap_coordinate(p.x, width), wrap_coordinate(p.y, height)};
  }
  return p;
}

Vec2 ArenaSpec::displacement(Vec2 from, Vec2 to) const {
  Vec2 d = to - from;
  if (kind == Kind::Torus) {
    d.x = wrap_delta(d.x, width);
    d.y = wrap_delta(d.y, height);
  }
  return d;
}

}  // namespace swarmsim
