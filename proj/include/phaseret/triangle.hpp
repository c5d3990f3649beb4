#pragma once

// Two-phase triangle equations.
//
//   x e^{i a1} + y e^{i a2} = z         (solve_triangle)
//   P e^{i a}  + Q e^{-i a} = z         (solve_conjugate_pair)
//
// Both return two branches. When no exact solution exists the branches are
// the closest point (least |lhs - rhs|) and are identical.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>

#include "phaseret/error.hpp"

namespace phaseret {

using cplx = std::complex<double>;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Reduce an angle to [0, 2 pi).
inline double wrap_phase(double angle) noexcept {
  double r = std::fmod(angle, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

/// Signed distance between two angles, in (-pi, pi].
inline double phase_distance(double a, double b) noexcept {
  double d = wrap_phase(a - b);
  return d > std::numbers::pi ? d - kTwoPi : d;
}

struct PhasePair {
  double first = 0.0;
  double second = 0.0;
};

struct TriangleSolution {
  std::array<PhasePair, 2> branches{};
  std::array<double, 2> residuals{};
  /// The equation is satisfied (triangle inequality held, up to round-off).
  bool feasible = true;
  /// A vanishing modulus or a vanishing target left a phase undetermined;
  /// the supplied default was used for it.
  bool degenerate = false;
};

/// Scale-aware zero threshold for moduli.
inline double degeneracy_threshold(double a, double b, double c) noexcept {
  return 1e-12 * std::max({a, b, c, 1.0});
}

/// Relative residual below which a solution counts as exact.
inline constexpr double kExactResidual = 1e-10;

namespace detail {

inline double triangle_residual(cplx x, cplx y, cplx z, PhasePair p) {
  return std::abs(x * std::polar(1.0, p.first) + y * std::polar(1.0, p.second) - z);
}

inline TriangleSolution finish_triangle(cplx x, cplx y, cplx z, std::array<PhasePair, 2> branches,
                                        bool clamped, bool degenerate) {
  TriangleSolution s;
  for (std::size_t k = 0; k < 2; ++k) {
    s.branches[k] = {wrap_phase(branches[k].first), wrap_phase(branches[k].second)};
    s.residuals[k] = triangle_residual(x, y, z, s.branches[k]);
  }
  const double scale = std::abs(x) + std::abs(y) + std::abs(z);
  const double worst = std::max(s.residuals[0], s.residuals[1]);
  s.feasible = !clamped || worst <= kExactResidual * scale;
  s.degenerate = degenerate;
  return s;
}

}  // namespace detail

/// Solve x e^{i a1} + y e^{i a2} = z by the law of cosines. Branch 1 places
/// x at arg z + theta, branch 2 at arg z - theta. `defaults` supplies phases
/// that the data leave undetermined.
inline TriangleSolution solve_triangle(cplx x, cplx y, cplx z, PhasePair defaults = {}) {
  const double a = std::abs(x);
  const double b = std::abs(y);
  const double c = std::abs(z);
  const double tau = degeneracy_threshold(a, b, c);

  if (a <= tau && b <= tau) {
    if (c > tau) throw DegenerateTriangle("both unknown vectors vanish but the target does not");
    return detail::finish_triangle(x, y, z, {defaults, defaults}, false, true);
  }
  if (a <= tau || b <= tau) {
    // One side vanishes: its phase is free, the other points along what is left of z.
    PhasePair p = defaults;
    if (a <= tau) {
      const cplx rest = z - x * std::polar(1.0, p.first);
      p.second = std::abs(rest) > tau ? std::arg(rest) - std::arg(y) : defaults.second;
    } else {
      const cplx rest = z - y * std::polar(1.0, p.second);
      p.first = std::abs(rest) > tau ? std::arg(rest) - std::arg(x) : defaults.first;
    }
    return detail::finish_triangle(x, y, z, {p, p}, true, true);
  }
  if (c <= tau) {
    // z = 0: y must cancel x. Exact only when |x| = |y|, and then a1 is free.
    const auto opposite = [&](double a1) {
      return PhasePair{a1, a1 + std::arg(x) + std::numbers::pi - std::arg(y)};
    };
    const bool balanced = std::abs(a - b) <= kExactResidual * (a + b + c);
    if (balanced) {
      return detail::finish_triangle(x, y, z, {opposite(defaults.first), opposite(0.0)}, false, true);
    }
    return detail::finish_triangle(x, y, z, {opposite(defaults.first), opposite(defaults.first)}, true,
                                   true);
  }

  // Heron-style factors: (b-a+c)(b+a-c)(a+c-b)(a+b+c) = 4a^2c^2 - (a^2+c^2-b^2)^2.
  // At most one of the first three can be negative.
  const double f1 = (b - a) + c;
  const double f2 = (b + a) - c;
  const double f3 = (a + c) - b;
  const double cos_num = a * a + c * c - b * b;
  const bool clamped = f1 < 0.0 || f2 < 0.0 || f3 < 0.0;
  const double sin_num = clamped ? 0.0 : std::sqrt(f1 * f2 * f3 * (a + b + c));
  const double theta = std::atan2(sin_num, cos_num);

  std::array<PhasePair, 2> branches{};
  const double sign[2] = {1.0, -1.0};
  for (std::size_t k = 0; k < 2; ++k) {
    const double a1 = std::arg(z) + sign[k] * theta - std::arg(x);
    const cplx rest = z - x * std::polar(1.0, a1);
    const double a2 = std::abs(rest) > tau ? std::arg(rest) - std::arg(y) : std::arg(z) - std::arg(y);
    branches[k] = {a1, a2};
  }
  return detail::finish_triangle(x, y, z, branches, clamped, false);
}

namespace detail {

// |e^{i mu}((p+q) cos t + i (p-q) sin t) - z|^2 with the rotation folded into
// (u, v) = z e^{-i mu}: f(t) = (A cos t - u)^2 + (B sin t - v)^2.
struct EllipseDistance {
  double major;
  double minor;
  double u;
  double v;

  double value(double t) const {
    const double dx = major * std::cos(t) - u;
    const double dy = minor * std::sin(t) - v;
    return dx * dx + dy * dy;
  }
  double slope(double t) const {
    const double c = std::cos(t), s = std::sin(t);
    return 2.0 * ((minor * minor - major * major) * s * c + major * u * s - minor * v * c);
  }
  double curvature(double t) const {
    const double c = std::cos(t), s = std::sin(t);
    return 2.0 * ((minor * minor - major * major) * (c * c - s * s) + major * u * c + minor * v * s);
  }
};

// Global minimiser of f over the circle: coarse scan then safeguarded Newton.
inline double minimise_on_circle(const EllipseDistance& f) {
  constexpr int kSamples = 128;
  double best_t = 0.0;
  double best_f = f.value(0.0);
  for (int i = 0; i < kSamples; ++i) {
    const double t0 = kTwoPi * i / kSamples;
    double t = t0;
    double ft = f.value(t);
    for (int it = 0; it < 50; ++it) {
      const double h = f.curvature(t);
      const double g = f.slope(t);
      if (!(h > 0.0)) break;
      const double step = std::clamp(-g / h, -kTwoPi / kSamples, kTwoPi / kSamples);
      const double next = t + step;
      const double fn = f.value(next);
      if (fn > ft) break;
      t = next;
      ft = fn;
      if (std::abs(step) < 1e-16) break;
    }
    if (ft < best_f) {
      best_f = ft;
      best_t = t;
    }
  }
  return best_t;
}

}  // namespace detail

/// Solve P e^{i a} + Q e^{-i a} = z for a, in the least-squares sense when
/// no exact solution exists. Branches report (a, -a).
inline TriangleSolution solve_conjugate_pair(cplx p, cplx q, cplx z, double default_phase = 0.0) {
  const double mp = std::abs(p);
  const double mq = std::abs(q);
  const double mz = std::abs(z);
  const double tau = degeneracy_threshold(mp, mq, mz);
  const auto as_pair = [](double a) { return PhasePair{a, -a}; };

  if (mp <= tau && mq <= tau) {
    if (mz > tau) throw DegenerateTriangle("both conjugate-pair coefficients vanish but the target does not");
    return detail::finish_triangle(p, q, z, {as_pair(default_phase), as_pair(default_phase)}, false,
                                   true);
  }

  // P e^{ia} + Q e^{-ia} = e^{i mu} (|P| e^{it} + |Q| e^{-it}),  t = a + (arg P - arg Q)/2.
  const double mu = 0.5 * (std::arg(p) + std::arg(q));
  const double shift = 0.5 * (std::arg(p) - std::arg(q));
  const cplx zr = z * std::polar(1.0, -mu);
  const double major = mp + mq;
  const double minor = mp - mq;

  if (std::abs(minor) <= 1e-12 * major) {
    // Rank deficient: the left side sweeps a segment of length 2(|P|+|Q|).
    const double cos_t = zr.real() / major;
    const bool clamped = cos_t > 1.0 || cos_t < -1.0;
    const double t = std::acos(std::clamp(cos_t, -1.0, 1.0));
    return detail::finish_triangle(p, q, z, {as_pair(t - shift), as_pair(-t - shift)}, clamped, false);
  }

  const double c = zr.real() / major;
  const double s = zr.imag() / minor;
  const double t_linear = std::atan2(s, c);
  const auto linear = as_pair(t_linear - shift);
  const double scale = mp + mq + mz;
  if (detail::triangle_residual(p, q, z, linear) <= kExactResidual * scale) {
    return detail::finish_triangle(p, q, z, {linear, linear}, false, false);
  }
  const detail::EllipseDistance f{major, minor, zr.real(), zr.imag()};
  const double t = detail::minimise_on_circle(f);
  return detail::finish_triangle(p, q, z, {as_pair(t - shift), as_pair(t - shift)}, true, false);
}

}  // namespace phaseret
