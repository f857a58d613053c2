#pragma once

#include <cmath>

namespace dldmf {

// Second-order forward-mode scalar: a value together with its first and
// second derivative with respect to one seeded input. Arithmetic follows
// truncated Taylor propagation, e.g. (a*b).d2 = a.d2*b.v + 2*a.d1*b.d1 + a.v*b.d2.
struct Dual2 {
  double v = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;

  constexpr Dual2() = default;
  constexpr Dual2(double value) : v(value) {}
  constexpr Dual2(double value, double first, double second)
      : v(value), d1(first), d2(second) {}

  // Marks an independent variable: d1 = 1, d2 = 0.
  static constexpr Dual2 seed(double value) { return {value, 1.0, 0.0}; }
};

inline constexpr Dual2 operator+(const Dual2& a, const Dual2& b) {
  return {a.v + b.v, a.d1 + b.d1, a.d2 + b.d2};
}
inline constexpr Dual2 operator-(const Dual2& a, const Dual2& b) {
  return {a.v - b.v, a.d1 - b.d1, a.d2 - b.d2};
}
inline constexpr Dual2 operator-(const Dual2& a) { return {-a.v, -a.d1, -a.d2}; }

inline constexpr Dual2 operator*(const Dual2& a, const Dual2& b) {
  return {a.v * b.v,
          a.d1 * b.v + a.v * b.d1,
          a.d2 * b.v + 2.0 * a.d1 * b.d1 + a.v * b.d2};
}
inline constexpr Dual2 operator*(double s, const Dual2& a) {
  return {s * a.v, s * a.d1, s * a.d2};
}
inline constexpr Dual2 operator*(const Dual2& a, double s) { return s * a; }

inline constexpr Dual2 operator/(const Dual2& a, const Dual2& b) {
  const double inv = 1.0 / b.v;
  const double q = a.v * inv;
  const double q1 = (a.d1 - q * b.d1) * inv;
  const double q2 = (a.d2 - 2.0 * q1 * b.d1 - q * b.d2) * inv;
  return {q, q1, q2};
}

inline constexpr Dual2& operator+=(Dual2& a, const Dual2& b) { a = a + b; return a; }
inline constexpr Dual2& operator-=(Dual2& a, const Dual2& b) { a = a - b; return a; }

inline Dual2 tanh(const Dual2& a) {
  const double t = std::tanh(a.v);
  const double s = 1.0 - t * t;  // tanh'
  return {t, s * a.d1, s * a.d2 - 2.0 * t * s * a.d1 * a.d1};
}

inline Dual2 sin(const Dual2& a) {
  const double s = std::sin(a.v);
  const double c = std::cos(a.v);
  return {s, c * a.d1, c * a.d2 - s * a.d1 * a.d1};
}

inline Dual2 cos(const Dual2& a) {
  const double s = std::sin(a.v);
  const double c = std::cos(a.v);
  return {c, -s * a.d1, -s * a.d2 - c * a.d1 * a.d1};
}

inline Dual2 exp(const Dual2& a) {
  const double e = std::exp(a.v);
  return {e, e * a.d1, e * a.d2 + e * a.d1 * a.d1};
}

inline constexpr Dual2 square(const Dual2& a) {
  return {a.v * a.v, 2.0 * a.v * a.d1, 2.0 * a.v * a.d2 + 2.0 * a.d1 * a.d1};
}

inline bool finite(const Dual2& a) {
  return std::isfinite(a.v) && std::isfinite(a.d1) && std::isfinite(a.d2);
}

}  // namespace dldmf
