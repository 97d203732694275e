#pragma once

// Small shape builders for tests that must not depend on the scenarios module.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "pinchlab/surface.hpp"

namespace pinchlab::testing {

inline Surface circle(double radius, std::size_t n, Vec2 center = {0.0, 0.0}) {
  std::vector<Vec2> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
    v[i] = center + Vec2{radius * std::cos(t), radius * std::sin(t)};
  }
  return Surface::curve(std::move(v));
}

/// Uniform in the parameter t; vertex 0 at (a, 0).
inline Surface ellipse(double a, double b, std::size_t n) {
  std::vector<Vec2> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
    v[i] = {a * std::cos(t), b * std::sin(t)};
  }
  return Surface::curve(std::move(v));
}

/// Sphere profile from the south pole to the north pole, uniform in the polar angle.
inline Surface sphere_profile(double radius, std::size_t n) {
  std::vector<Vec2> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1);
    v[i] = {radius * std::sin(t), -radius * std::cos(t)};
  }
  v.front().x = 0.0;
  v.back().x = 0.0;
  return Surface::axisym(std::move(v));
}

/// Ellipse curvature at parameter t.
inline double ellipse_curvature(double a, double b, double t) {
  const double s = std::sin(t);
  const double c = std::cos(t);
  return a * b / std::pow(a * a * s * s + b * b * c * c, 1.5);
}

}  // namespace pinchlab::testing

#include <random>

namespace pinchlab::testing {

/// Star-shaped curve r(t) = R (1 + sum_m a_m cos(m t + phase_m)), m = 2..6, with random
/// amplitudes |a_m| <= amplitude / m^2. Convex for amplitude <= 0.1.
inline Surface wobbly_circle(std::size_t n, double amplitude, std::uint64_t seed, double radius = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  double a[7] = {};
  double ph[7] = {};
  for (int m = 2; m <= 6; ++m) {
    a[m] = amplitude * unit(rng) / (m * m);
    ph[m] = angle(rng);
  }
  std::vector<Vec2> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
    double r = 1.0;
    for (int m = 2; m <= 6; ++m) r += a[m] * std::cos(m * t + ph[m]);
    v[i] = {radius * r * std::cos(t), radius * r * std::sin(t)};
  }
  return Surface::curve(std::move(v));
}

}  // namespace pinchlab::testing
