#pragma once

#include <cmath>
#include <numbers>

namespace swarmsim {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr Vec2 operator/(double s) const { return {x / s, y / s}; }
  constexpr Vec2& operator+=(Vec2 o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  constexpr bool operator==(const Vec2&) const = default;

  constexpr double dot(Vec2 o) const { return x * o.x + y * o.y; }
  constexpr double norm2() const { return x * x + y * y; }
  double norm() const { return std::hypot(x, y); }
};

inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }

/// Maps any finite angle into [0, 2π).
inline double wrap_angle(double a) {
  if (a >= 0.0 && a < kTwoPi) return a;
  // One turn either way is exact, so this matches fmod bit for bit.
  if (a >= kTwoPi && a < 2.0 * kTwoPi) return a - kTwoPi;
  double r = std::fmod(a, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  // fmod of a tiny negative value plus 2π can round up to exactly 2π.
  if (r >= kTwoPi) r = 0.0;
  return r;
}

/// Maps any finite angle into (-π, π].
inline double wrap_signed(double a) {
  double r = wrap_angle(a);
  if (r > std::numbers::pi) r -= kTwoPi;
  return r;
}

constexpr double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

}  // namespace swarmsim
