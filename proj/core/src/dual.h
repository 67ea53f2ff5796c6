/* Copyright 2026 The SGR Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Forward-mode dual numbers. Not installed.

#ifndef SGR_SRC_DUAL_H_
#define SGR_SRC_DUAL_H_

#include <algorithm>
#include <array>
#include <cmath>

namespace sgr::internal {

// Value plus gradient with respect to N seeded inputs.
template <int N>
struct Dual {
  double v = 0.0;
  std::array<double, N> d{};

  Dual() = default;
  Dual(double value) : v(value) {}  // NOLINT: constants promote implicitly

  static Dual Seed(double value, int index) {
    Dual x(value);
    x.d[index] = 1.0;
    return x;
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
  Dual& operator*=(const Dual& o) {
    for (int i = 0; i < N; ++i) d[i] = d[i] * o.v + v * o.d[i];
    v *= o.v;
    return *this;
  }
};

template <int N>
Dual<N> operator+(Dual<N> a, const Dual<N>& b) {
  return a += b;
}
template <int N>
Dual<N> operator-(Dual<N> a, const Dual<N>& b) {
  return a -= b;
}
template <int N>
Dual<N> operator*(Dual<N> a, const Dual<N>& b) {
  return a *= b;
}
template <int N>
Dual<N> operator+(Dual<N> a, double b) {
  a.v += b;
  return a;
}
template <int N>
Dual<N> operator+(double a, Dual<N> b) {
  b.v += a;
  return b;
}
template <int N>
Dual<N> operator-(Dual<N> a, double b) {
  a.v -= b;
  return a;
}
template <int N>
Dual<N> operator-(double a, Dual<N> b) {
  b.v = a - b.v;
  for (auto& x : b.d) x = -x;
  return b;
}
template <int N>
Dual<N> operator-(Dual<N> a) {
  a.v = -a.v;
  for (auto& x : a.d) x = -x;
  return a;
}
template <int N>
Dual<N> operator*(Dual<N> a, double b) {
  a.v *= b;
  for (auto& x : a.d) x *= b;
  return a;
}
template <int N>
Dual<N> operator*(double a, Dual<N> b) {
  return b * a;
}

// Applies a scalar function with known derivative.
template <int N>
Dual<N> Chain(const Dual<N>& x, double value, double slope) {
  Dual<N> y(value);
  for (int i = 0; i < N; ++i) y.d[i] = slope * x.d[i];
  return y;
}

inline double Value(double x) { return x; }
template <int N>
double Value(const Dual<N>& x) {
  return x.v;
}

inline double Exp(double x) { return std::exp(x); }
template <int N>
Dual<N> Exp(const Dual<N>& x) {
  const double e = std::exp(x.v);
  return Chain(x, e, e);
}

inline double Log(double x) { return std::log(x); }
template <int N>
Dual<N> Log(const Dual<N>& x) {
  return Chain(x, std::log(x.v), 1.0 / x.v);
}

inline double SigmoidValue(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double Sigmoid(double x) { return SigmoidValue(x); }
template <int N>
Dual<N> Sigmoid(const Dual<N>& x) {
  const double s = SigmoidValue(x.v);
  return Chain(x, s, s * (1.0 - s));
}

// log(1 + e^x), stable for large |x|.
inline double SoftplusValue(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}
inline double Softplus(double x) { return SoftplusValue(x); }
template <int N>
Dual<N> Softplus(const Dual<N>& x) {
  return Chain(x, SoftplusValue(x.v), SigmoidValue(x.v));
}

// Ties resolve to the first argument, which fixes the subgradient.
template <typename T>
T Max(const T& a, const T& b) {
  return Value(a) >= Value(b) ? a : b;
}
template <typename T>
T Min(const T& a, const T& b) {
  return Value(a) <= Value(b) ? a : b;
}

}  // namespace sgr::internal

#endif  // SGR_SRC_DUAL_H_
