// Copyright 2026 The ffsim Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FFSIM_DUAL_HPP
#define FFSIM_DUAL_HPP

#include <cmath>

namespace ffsim {

// First-order dual number: carries a value and one directional derivative.
// Running the hand-written backward pass on Dual scalars yields the exact
// Jacobian-vector product of the gradient, i.e. a Hessian-vector product,
// without finite differences.
struct Dual {
  double v = 0.0;
  double d = 0.0;

  constexpr Dual() = default;
  constexpr Dual(double value) : v(value) {}  // NOLINT(google-explicit-constructor)
  constexpr Dual(double value, double deriv) : v(value), d(deriv) {}

  Dual& operator+=(const Dual& o) {
    v += o.v;
    d += o.d;
    return *this;
  }
  Dual& operator-=(const Dual& o) {
    v -= o.v;
    d -= o.d;
    return *this;
  }
  Dual& operator*=(const Dual& o) {
    d = d * o.v + v * o.d;
    v *= o.v;
    return *this;
  }
  Dual& operator/=(const Dual& o) {
    d = (d * o.v - v * o.d) / (o.v * o.v);
    v /= o.v;
    return *this;
  }
};

inline Dual operator+(Dual a, const Dual& b) { return a += b; }
inline Dual operator-(Dual a, const Dual& b) { return a -= b; }
inline Dual operator*(Dual a, const Dual& b) { return a *= b; }
inline Dual operator/(Dual a, const Dual& b) { return a /= b; }
inline Dual operator-(const Dual& a) { return {-a.v, -a.d}; }

inline bool operator<(const Dual& a, const Dual& b) { return a.v < b.v; }
inline bool operator>(const Dual& a, const Dual& b) { return a.v > b.v; }
inline bool operator<=(const Dual& a, const Dual& b) { return a.v <= b.v; }
inline bool operator>=(const Dual& a, const Dual& b) { return a.v >= b.v; }

inline Dual exp(const Dual& a) {
  double e = std::exp(a.v);
  return {e, e * a.d};
}
inline Dual log(const Dual& a) { return {std::log(a.v), a.d / a.v}; }
inline Dual sqrt(const Dual& a) {
  double s = std::sqrt(a.v);
  return {s, a.d / (2.0 * s)};
}
inline Dual max(const Dual& a, const Dual& b) { return a.v >= b.v ? a : b; }

// Pull the double overloads into scope so templated code can call these
// unqualified for either scalar type.
using std::exp;
using std::log;
using std::max;
using std::sqrt;

template <typename T>
double value_of(const T& x) {
  return static_cast<double>(x);
}
inline double value_of(const Dual& x) { return x.v; }

}  // namespace ffsim

#endif  // FFSIM_DUAL_HPP
