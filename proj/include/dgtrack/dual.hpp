#pragma once

#include <array>
#include <cmath>

namespace dgtrack {

// Fixed-size forward-mode scalar: value plus N directional derivatives.
// Used to differentiate pointwise flux/source/indicator kernels exactly;
// the results are chained into nodal derivatives by the assembly loops.
template <int N>
struct Dual {
  double v = 0.0;
  std::array<double, N> d{};

  Dual() = default;
  Dual(double value) : v(value) { d.fill(0.0); }

  static Dual seed(double value, int slot) {
    Dual r(value);
    r.d[slot] = 1.0;
    return r;
  }

  Dual& operator+=(const Dual& o) {
    v += o.v;
    for (int i = 0; i < N; ++i) d[i] += o.d[i];
    return *this;
  }
  Dual& operator-=(const Dual& o) {
    v -= o.v;
    for (int i = 0; i < N; ++i) d[i] -= o.d[i];
    return *this;
  }
  Dual& operator*=(const Dual& o) { return *this = *this * o; }
  Dual& operator/=(const Dual& o) { return *this = *this / o; }

  friend Dual operator+(Dual a, const Dual& b) { return a += b; }
  friend Dual operator-(Dual a, const Dual& b) { return a -= b; }
  friend Dual operator-(const Dual& a) {
    Dual r;
    r.v = -a.v;
    for (int i = 0; i < N; ++i) r.d[i] = -a.d[i];
    return r;
  }
  friend Dual operator*(const Dual& a, const Dual& b) {
    Dual r;
    r.v = a.v * b.v;
    for (int i = 0; i < N; ++i) r.d[i] = a.d[i] * b.v + a.v * b.d[i];
    return r;
  }
  friend Dual operator/(const Dual& a, const Dual& b) {
    Dual r;
    const double inv = 1.0 / b.v;
    r.v = a.v * inv;
    for (int i = 0; i < N; ++i) r.d[i] = (a.d[i] - r.v * b.d[i]) * inv;
    return r;
  }

  friend bool operator<(const Dual& a, const Dual& b) { return a.v < b.v; }
  friend bool operator>(const Dual& a, const Dual& b) { return a.v > b.v; }
  friend bool operator<=(const Dual& a, const Dual& b) { return a.v <= b.v; }
  friend bool operator>=(const Dual& a, const Dual& b) { return a.v >= b.v; }
  friend bool operator==(const Dual& a, const Dual& b) { return a.v == b.v; }
};

template <int N>
inline Dual<N> chain(double fv, double dfdv, const Dual<N>& a) {
  Dual<N> r;
  r.v = fv;
  for (int i = 0; i < N; ++i) r.d[i] = dfdv * a.d[i];
  return r;
}

template <int N> inline Dual<N> sqrt(const Dual<N>& a) {
  const double s = std::sqrt(a.v);
  return chain(s, 0.5 / s, a);
}
template <int N> inline Dual<N> abs(const Dual<N>& a) {
  return a.v < 0.0 ? -a : a;
}
template <int N> inline Dual<N> sin(const Dual<N>& a) { return chain(std::sin(a.v), std::cos(a.v), a); }
template <int N> inline Dual<N> cos(const Dual<N>& a) { return chain(std::cos(a.v), -std::sin(a.v), a); }
template <int N> inline Dual<N> exp(const Dual<N>& a) {
  const double e = std::exp(a.v);
  return chain(e, e, a);
}
template <int N> inline Dual<N> log(const Dual<N>& a) { return chain(std::log(a.v), 1.0 / a.v, a); }
template <int N> inline Dual<N> tanh(const Dual<N>& a) {
  const double t = std::tanh(a.v);
  return chain(t, 1.0 - t * t, a);
}
template <int N> inline Dual<N> pow(const Dual<N>& a, double e) {
  return chain(std::pow(a.v, e), e * std::pow(a.v, e - 1.0), a);
}
template <int N> inline Dual<N> max(const Dual<N>& a, const Dual<N>& b) { return a.v >= b.v ? a : b; }
template <int N> inline Dual<N> min(const Dual<N>& a, const Dual<N>& b) { return a.v <= b.v ? a : b; }

// Scalar fallbacks so kernels templated on T work with plain doubles.
using std::abs;
using std::cos;
using std::exp;
using std::log;
using std::max;
using std::min;
using std::pow;
using std::sin;
using std::sqrt;
using std::tanh;

template <class T> inline double value_of(const T& a) { return a.v; }
inline double value_of(double a) { return a; }

}  // namespace dgtrack
