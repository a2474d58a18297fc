#pragma once

#include <cmath>

namespace semswarm {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
  constexpr Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
  constexpr Vec2& operator*=(double s) { x *= s; y *= s; return *this; }
  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend constexpr bool operator==(Vec2, Vec2) = default;

  constexpr double norm2() const { return x * x + y * y; }
  double norm() const { return std::sqrt(norm2()); }
};

namespace torus {

/// Wraps a coordinate into [0, 1).
inline double wrap(double v) {
  double w = v - std::floor(v);
  return w >= 1.0 ? 0.0 : w;
}

inline Vec2 wrap(Vec2 p) { return {wrap(p.x), wrap(p.y)}; }

/// Minimal-image difference component, in [-0.5, 0.5].
inline double delta(double a, double b) {
  const double d = a - b;
  if (d >= -0.5 && d < 0.5) return d;
  if (d >= 0.5 && d < 1.5) return d - 1.0;
  if (d >= -1.5 && d < -0.5) return d + 1.0;
  return d - std::floor(d + 0.5);
}

/// a ⊖ b on the unit torus.
inline Vec2 delta(Vec2 a, Vec2 b) { return {delta(a.x, b.x), delta(a.y, b.y)}; }

inline double distance2(Vec2 a, Vec2 b) { return delta(a, b).norm2(); }

inline double distance(Vec2 a, Vec2 b) { return std::sqrt(distance2(a, b)); }

}  // namespace torus
}  // namespace semswarm
