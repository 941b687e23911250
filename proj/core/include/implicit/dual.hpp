#pragma once

#include <cmath>

namespace implicit {

/// Forward-mode dual number carrying one tangent direction. Nesting
/// (Dual<Dual<double>>) gives second derivatives.
template <class T>
struct Dual {
  T v{};
  T d{};

  constexpr Dual() = default;
  constexpr Dual(T value) : v(value), d(T{}) {}  // NOLINT: implicit lift of constants
  constexpr Dual(T value, T tangent) : v(value), d(tangent) {}

  Dual& operator+=(const Dual& o) { v += o.v; d += o.d; return *this; }
  Dual& operator-=(const Dual& o) { v -= o.v; d -= o.d; return *this; }
  Dual& operator*=(const Dual& o) { d = d * o.v + v * o.d; v *= o.v; return *this; }
  Dual& operator/=(const Dual& o) { *this = *this / o; return *this; }

  friend Dual operator+(Dual a, const Dual& b) { return a += b; }
  friend Dual operator-(Dual a, const Dual& b) { return a -= b; }
  friend Dual operator*(const Dual& a, const Dual& b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
  friend Dual operator/(const Dual& a, const Dual& b) {
    T q = a.v / b.v;
    return {q, (a.d - q * b.d) / b.v};
  }
  friend Dual operator-(const Dual& a) { return {-a.v, -a.d}; }
};

inline double primal(double x) { return x; }
template <class T>
double primal(const Dual<T>& x) { return primal(x.v); }

template <class T>
Dual<T> sin(const Dual<T>& x) { using std::sin, std::cos; return {sin(x.v), cos(x.v) * x.d}; }
template <class T>
Dual<T> cos(const Dual<T>& x) { using std::sin, std::cos; return {cos(x.v), -(sin(x.v) * x.d)}; }
template <class T>
Dual<T> exp(const Dual<T>& x) { using std::exp; T e = exp(x.v); return {e, e * x.d}; }
template <class T>
Dual<T> log(const Dual<T>& x) { using std::log; return {log(x.v), x.d / x.v}; }
template <class T>
Dual<T> sqrt(const Dual<T>& x) {
  using std::sqrt;
  T s = sqrt(x.v);
  return {s, x.d / (T(2.0) * s)};
}
template <class T>
Dual<T> abs(const Dual<T>& x) { return primal(x) < 0.0 ? -x : x; }

}  // namespace implicit
