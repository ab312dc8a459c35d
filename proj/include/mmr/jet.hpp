#pragma once

// Second-order forward-mode automatic differentiation over N variables:
// value, gradient and the packed upper triangle of the Hessian.

#include <array>
#include <cmath>
#include <cstddef>

namespace mmr {

template <std::size_t N>
struct Jet2 {
  static constexpr std::size_t kPacked = N * (N + 1) / 2;

  double v = 0.0;
  std::array<double, N> g{};
  std::array<double, kPacked> h{};

  Jet2() = default;
  Jet2(double value) : v(value) {}  // NOLINT: constants convert implicitly

  static Jet2 variable(double value, std::size_t index) {
    Jet2 j(value);
    j.g[index] = 1.0;
    return j;
  }

  static constexpr std::size_t idx(std::size_t i, std::size_t j) {
    // row-major upper triangle, i <= j
    return i * N - i * (i - 1) / 2 + (j - i);
  }
  double hess(std::size_t i, std::size_t j) const {
    return i <= j ? h[idx(i, j)] : h[idx(j, i)];
  }

  // f(x) applied to this jet given f, f', f''.
  Jet2 chain(double f0, double f1, double f2) const {
    Jet2 r(f0);
    for (std::size_t i = 0; i < N; ++i) r.g[i] = f1 * g[i];
    std::size_t k = 0;
    for (std::size_t i = 0; i < N; ++i) {
      const double gi = f2 * g[i];
      for (std::size_t j = i; j < N; ++j, ++k) r.h[k] = f1 * h[k] + gi * g[j];
    }
    return r;
  }

  Jet2& operator+=(const Jet2& o) {
    v += o.v;
    for (std::size_t i = 0; i < N; ++i) g[i] += o.g[i];
    for (std::size_t k = 0; k < kPacked; ++k) h[k] += o.h[k];
    return *this;
  }
  Jet2& operator-=(const Jet2& o) {
    v -= o.v;
    for (std::size_t i = 0; i < N; ++i) g[i] -= o.g[i];
    for (std::size_t k = 0; k < kPacked; ++k) h[k] -= o.h[k];
    return *this;
  }
  Jet2& operator*=(double s) {
    v *= s;
    for (auto& x : g) x *= s;
    for (auto& x : h) x *= s;
    return *this;
  }
};

template <std::size_t N>
Jet2<N> operator-(Jet2<N> a) {
  a *= -1.0;
  return a;
}
template <std::size_t N>
Jet2<N> operator+(Jet2<N> a, const Jet2<N>& b) {
  return a += b;
}
template <std::size_t N>
Jet2<N> operator-(Jet2<N> a, const Jet2<N>& b) {
  return a -= b;
}
template <std::size_t N>
Jet2<N> operator+(Jet2<N> a, double b) {
  a.v += b;
  return a;
}
template <std::size_t N>
Jet2<N> operator+(double b, Jet2<N> a) {
  a.v += b;
  return a;
}
template <std::size_t N>
Jet2<N> operator-(Jet2<N> a, double b) {
  a.v -= b;
  return a;
}
template <std::size_t N>
Jet2<N> operator-(double b, const Jet2<N>& a) {
  return (-a) + b;
}
template <std::size_t N>
Jet2<N> operator*(Jet2<N> a, double s) {
  return a *= s;
}
template <std::size_t N>
Jet2<N> operator*(double s, Jet2<N> a) {
  return a *= s;
}

template <std::size_t N>
Jet2<N> operator*(const Jet2<N>& a, const Jet2<N>& b) {
  Jet2<N> r(a.v * b.v);
  for (std::size_t i = 0; i < N; ++i) r.g[i] = a.v * b.g[i] + b.v * a.g[i];
  std::size_t k = 0;
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = i; j < N; ++j, ++k) {
      r.h[k] = a.v * b.h[k] + b.v * a.h[k] + a.g[i] * b.g[j] + a.g[j] * b.g[i];
    }
  }
  return r;
}

template <std::size_t N>
Jet2<N> operator/(const Jet2<N>& a, double s) {
  return a * (1.0 / s);
}

template <std::size_t N>
Jet2<N> inverse(const Jet2<N>& a) {
  const double iv = 1.0 / a.v;
  return a.chain(iv, -iv * iv, 2.0 * iv * iv * iv);
}

template <std::size_t N>
Jet2<N> operator/(const Jet2<N>& a, const Jet2<N>& b) {
  return a * inverse(b);
}

template <std::size_t N>
Jet2<N> sin(const Jet2<N>& a) {
  const double s = std::sin(a.v);
  return a.chain(s, std::cos(a.v), -s);
}
template <std::size_t N>
Jet2<N> cos(const Jet2<N>& a) {
  const double c = std::cos(a.v);
  return a.chain(c, -std::sin(a.v), -c);
}
template <std::size_t N>
Jet2<N> sqrt(const Jet2<N>& a) {
  const double s = std::sqrt(a.v);
  return a.chain(s, 0.5 / s, -0.25 / (s * a.v));
}

/// atan2(y, x) through the identity d atan2 = (x dy - y dx) / (x^2 + y^2).
template <std::size_t N>
Jet2<N> atan2(const Jet2<N>& y, const Jet2<N>& x) {
  const double r2 = x.v * x.v + y.v * y.v;
  Jet2<N> r(std::atan2(y.v, x.v));
  const double ax = -y.v / r2;  // d/dx
  const double ay = x.v / r2;   // d/dy
  // second partials
  const double axx = 2.0 * x.v * y.v / (r2 * r2);
  const double ayy = -axx;
  const double axy = (y.v * y.v - x.v * x.v) / (r2 * r2);
  for (std::size_t i = 0; i < N; ++i) r.g[i] = ax * x.g[i] + ay * y.g[i];
  std::size_t k = 0;
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = i; j < N; ++j, ++k) {
      r.h[k] = ax * x.h[k] + ay * y.h[k] + axx * x.g[i] * x.g[j] +
               ayy * y.g[i] * y.g[j] + axy * (x.g[i] * y.g[j] + y.g[i] * x.g[j]);
    }
  }
  return r;
}

/// Value of a double or a jet.
inline double value_of(double x) { return x; }
template <std::size_t N>
double value_of(const Jet2<N>& x) {
  return x.v;
}

}  // namespace mmr
