#pragma once

// Second-order forward-mode differentiation.
//
// A Jet2 carries the truncated Taylor expansion v + d1 h + d2 h^2 of a
// scalar function around a point, so d2 is half the second derivative.
// Arithmetic propagates the expansion exactly up to O(h^3). CComplex is a
// minimal complex type usable with both double and Jet2, since
// std::complex<T> is only specified for floating-point T.

#include <cmath>

namespace phasetrack {

struct Jet2 {
  double v = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;

  constexpr Jet2() = default;
  constexpr Jet2(double value) : v(value) {}  // NOLINT(google-explicit-constructor)
  constexpr Jet2(double value, double first, double second)
      : v(value), d1(first), d2(second) {}

  static constexpr Jet2 variable(double at) { return {at, 1.0, 0.0}; }
};

inline constexpr Jet2 operator+(Jet2 a, Jet2 b) { return {a.v + b.v, a.d1 + b.d1, a.d2 + b.d2}; }
inline constexpr Jet2 operator-(Jet2 a, Jet2 b) { return {a.v - b.v, a.d1 - b.d1, a.d2 - b.d2}; }
inline constexpr Jet2 operator-(Jet2 a) { return {-a.v, -a.d1, -a.d2}; }
inline constexpr Jet2 operator*(Jet2 a, Jet2 b) {
  return {a.v * b.v, a.v * b.d1 + a.d1 * b.v, a.v * b.d2 + a.d1 * b.d1 + a.d2 * b.v};
}
inline constexpr Jet2 operator/(Jet2 a, Jet2 b) {
  // q = a / b  =>  a = q b, solve order by order.
  const double q0 = a.v / b.v;
  const double q1 = (a.d1 - q0 * b.d1) / b.v;
  const double q2 = (a.d2 - q0 * b.d2 - q1 * b.d1) / b.v;
  return {q0, q1, q2};
}

/// Compose a jet with a scalar function given its value and first two
/// derivatives at a.v.
inline constexpr Jet2 chain(Jet2 a, double f0, double f1, double f2) {
  return {f0, f1 * a.d1, f1 * a.d2 + 0.5 * f2 * a.d1 * a.d1};
}

inline Jet2 sqrt(Jet2 a) {
  const double s = std::sqrt(a.v);
  return chain(a, s, 0.5 / s, -0.25 / (s * a.v));
}
inline Jet2 sin(Jet2 a) {
  const double s = std::sin(a.v), c = std::cos(a.v);
  return chain(a, s, c, -s);
}
inline Jet2 cos(Jet2 a) {
  const double s = std::sin(a.v), c = std::cos(a.v);
  return chain(a, c, -s, -c);
}

inline double value_of(double x) { return x; }
inline double value_of(const Jet2& x) { return x.v; }

template <class T>
struct CComplex {
  T re{};
  T im{};
};

template <class T>
inline CComplex<T> operator+(const CComplex<T>& a, const CComplex<T>& b) {
  return {a.re + b.re, a.im + b.im};
}
template <class T>
inline CComplex<T> operator-(const CComplex<T>& a, const CComplex<T>& b) {
  return {a.re - b.re, a.im - b.im};
}
template <class T>
inline CComplex<T> operator*(const CComplex<T>& a, const CComplex<T>& b) {
  return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
}
template <class T>
inline CComplex<T> operator*(const T& s, const CComplex<T>& a) {
  return {s * a.re, s * a.im};
}
template <class T>
inline CComplex<T> operator/(const CComplex<T>& a, const CComplex<T>& b) {
  const T den = b.re * b.re + b.im * b.im;
  return {(a.re * b.re + a.im * b.im) / den, (a.im * b.re - a.re * b.im) / den};
}
template <class T>
inline T norm(const CComplex<T>& a) {
  return a.re * a.re + a.im * a.im;
}

}  // namespace phasetrack
