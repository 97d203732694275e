#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "pinchlab/error.hpp"
#include "pinchlab/geometry.hpp"
#include "shapes.hpp"

using namespace pinchlab;
using namespace pinchlab::testing;

namespace {

// Curvature of the parametrized ellipse from centered differences of (a cos t, b sin t) on a
// grid ten times finer than the polygon under test; independent of the circumcircle formula.
double ellipse_curvature_fd(double a, double b, double t, double dt) {
  auto x = [&](double s) { return a * std::cos(s); };
  auto y = [&](double s) { return b * std::sin(s); };
  const double x1 = (x(t + dt) - x(t - dt)) / (2 * dt);
  const double y1 = (y(t + dt) - y(t - dt)) / (2 * dt);
  const double x2 = (x(t + dt) - 2 * x(t) + x(t - dt)) / (dt * dt);
  const double y2 = (y(t + dt) - 2 * y(t) + y(t - dt)) / (dt * dt);
  return (x1 * y2 - y1 * x2) / std::pow(x1 * x1 + y1 * y1, 1.5);
}

double ellipse_perimeter(double a, double b) {
  // Composite Simpson on the speed, far finer than any polygon in these tests.
  const int n = 200000;
  const double h = 2 * std::numbers::pi / n;
  auto f = [&](double t) { return std::hypot(a * std::sin(t), b * std::cos(t)); };
  double s = f(0) + f(2 * std::numbers::pi);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(i * h);
  return s * h / 3;
}

std::vector<double> random_field(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> f(n);
  for (auto& v : f) v = u(rng);
  return f;
}

}  // namespace

TEST_CASE("unit circle has curvature 1 and outward radial normals") {
  const Surface c = circle(1.0, 256);
  const GeometryData g = build_geometry(c);
  CHECK(g.n == 1);
  for (std::size_t i = 0; i < c.size(); ++i) {
    CHECK(g.lambda_max(i) == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(g.H[i] == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(dot(g.normal[i], c[i]) == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(g.total_measure() == doctest::Approx(c.length()).epsilon(1e-14));
}

TEST_CASE("sphere of radius 2 has both principal curvatures 0.5") {
  const Surface s = sphere_profile(2.0, 400);
  const GeometryData g = build_geometry(s);
  CHECK(g.n == 2);
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(g.principal[i][0] == doctest::Approx(0.5).epsilon(1e-2));
    CHECK(g.principal[i][1] == doctest::Approx(0.5).epsilon(1e-2));
    CHECK(g.A2[i] / (g.H[i] * g.H[i]) == doctest::Approx(0.5).epsilon(1e-2));
  }
  CHECK(g.total_measure() == doctest::Approx(16 * std::numbers::pi).epsilon(1e-3));
}

TEST_CASE("ellipse curvature matches the analytic and finite-difference oracles") {
  const double a = 2.0;
  const double b = 1.0;
  const std::size_t n = 4096;
  const Surface e = ellipse(a, b, n);
  const GeometryData g = build_geometry(e);
  CHECK(g.H[0] == doctest::Approx(2.0).epsilon(1e-2));
  CHECK(g.H[n / 4] == doctest::Approx(0.25).epsilon(1e-2));
  const double dt = 2 * std::numbers::pi / (10.0 * n);
  for (std::size_t i = 0; i < n; i += 37) {
    const double t = 2 * std::numbers::pi * i / n;
    const double exact = ellipse_curvature(a, b, t);
    CHECK(g.H[i] == doctest::Approx(exact).epsilon(1e-4));
    CHECK(ellipse_curvature_fd(a, b, t, dt) == doctest::Approx(exact).epsilon(1e-4));
  }
}

TEST_CASE("curvature converges at second order under refinement") {
  std::vector<double> errors;
  for (std::size_t n : {64u, 128u, 256u, 512u}) {
    const Surface e = ellipse(2.0, 1.0, n);
    const GeometryData g = build_geometry(e);
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      err = std::max(err, std::abs(g.H[i] - ellipse_curvature(2.0, 1.0, 2 * std::numbers::pi * i / n)));
    }
    errors.push_back(err);
  }
  for (std::size_t k = 1; k < errors.size(); ++k) {
    CHECK(std::log2(errors[k - 1] / errors[k]) >= 1.8);
  }
}

TEST_CASE("clockwise curves are rejected") {
  std::vector<Vec2> v = circle(1.0, 32).points();
  std::reverse(v.begin(), v.end());
  try {
    Surface::curve(v);
    FAIL("expected InvalidSurface");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidSurface);
  }
}

TEST_CASE("scalar gradient") {
  SUBCASE("constant field has zero gradient") {
    const Surface e = ellipse(2.0, 1.0, 300);
    const GeometryData g = build_geometry(e);
    const std::vector<double> f(e.size(), 3.5);
    for (const auto& d : scalar_gradient(e, g, f)) {
      CHECK(std::abs(d[0]) <= 1e-12);
      CHECK(std::abs(d[1]) <= 1e-12);
    }
  }
  SUBCASE("height on the unit circle has |grad| = |cos theta|") {
    const std::size_t n = 512;
    const Surface c = circle(1.0, n);
    const GeometryData g = build_geometry(c);
    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = c[i].y;
    const auto norm = gradient_norm(scalar_gradient(c, g, z));
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(std::abs(norm[i] - std::abs(std::cos(2 * std::numbers::pi * i / n))) <= 1e-3);
    }
  }
  SUBCASE("derivative of the ellipse curvature matches dk/ds") {
    const double a = 2.0;
    const double b = 1.0;
    const std::size_t n = 2048;
    const Surface e = ellipse(a, b, n);
    const GeometryData g = build_geometry(e);
    const auto grad = scalar_gradient(e, g, g.H);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = 2 * std::numbers::pi * i / n;
      // dk/ds = (dk/dt) / |dF/dt|; dk/dt by a tiny centered difference of the closed form.
      const double dkdt = (ellipse_curvature(a, b, t + 1e-6) - ellipse_curvature(a, b, t - 1e-6)) / 2e-6;
      const double dkds = dkdt / std::hypot(a * std::sin(t), b * std::cos(t));
      if (std::abs(dkds) < 0.1) continue;  // vertices: relative error is meaningless near zero
      CHECK(grad[i][0] == doctest::Approx(dkds).epsilon(2e-2));
    }
  }
}

TEST_CASE("laplacian") {
  SUBCASE("sin theta on the unit circle") {
    const std::size_t n = 512;
    const Surface c = circle(1.0, n);
    const GeometryData g = build_geometry(c);
    std::vector<double> f(n);
    for (std::size_t i = 0; i < n; ++i) f[i] = std::sin(2 * std::numbers::pi * i / n);
    const auto lap = scalar_laplacian(c, g, f);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(lap[i] + f[i]) <= 5e-3);
  }
  SUBCASE("height on the unit sphere is an eigenfunction with eigenvalue -2") {
    const Surface s = sphere_profile(1.0, 400);
    const GeometryData g = build_geometry(s);
    std::vector<double> z(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) z[i] = s[i].y;
    const auto lap = scalar_laplacian(s, g, z);
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(std::abs(lap[i] + 2 * z[i]) <= 2e-2);
  }
  SUBCASE("duality with the Dirichlet form") {
    for (const Surface& s : {ellipse(2.0, 1.0, 333), sphere_profile(1.5, 201)}) {
      const GeometryData g = build_geometry(s);
      const auto u = random_field(s.size(), 11);
      const auto v = random_field(s.size(), 12);
      const auto lap = scalar_laplacian(s, g, u);
      double lhs = 0.0;
      for (std::size_t i = 0; i < s.size(); ++i) lhs += g.weight[i] * v[i] * lap[i];
      const double rhs = -dirichlet_form(s, g, u, v);
      CHECK(std::abs(lhs - rhs) <= 1e-8 * std::abs(rhs));
    }
  }
}

TEST_CASE("azimuthal and meridional curvatures agree next to the poles") {
  for (std::size_t n : {101u, 401u}) {
    const Surface s = sphere_profile(1.0, n);
    const GeometryData g = build_geometry(s);
    for (std::size_t i : {std::size_t{0}, std::size_t{1}, n - 2, n - 1}) {
      CHECK(std::abs(g.principal[i][0] - g.principal[i][1]) <= 5e-2 * g.H[i]);
    }
    CHECK(g.normal.front().y == -1.0);
    CHECK(g.normal.back().y == 1.0);
  }
}

TEST_CASE("resample") {
  SUBCASE("equally spaced circle is a fixed point") {
    const Surface c = circle(1.0, 128);
    const Surface r = resample_count(c, 128);
    for (std::size_t i = 0; i < c.size(); ++i) CHECK(norm(r[i] - c[i]) <= 1e-12);
  }
  SUBCASE("clustered vertices come out equally spaced") {
    std::vector<Vec2> v(400);
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double u = static_cast<double>(i) / v.size();
      const double t = 2 * std::numbers::pi * (u + 0.12 * std::sin(2 * std::numbers::pi * u));
      v[i] = {std::cos(t), std::sin(t)};
    }
    const Surface c = Surface::curve(v);
    const Surface r = resample_count(c, 400);
    const GeometryData g = build_geometry(r);
    CHECK(g.h_max / g.h_min <= 1.01);
  }
  SUBCASE("ellipse perimeter is preserved") {
    const Surface e = ellipse(2.0, 1.0, 1000);
    const Surface r = resample(e, e.length() / 1000);
    CHECK(r.size() == 1000);
    CHECK(r.length() == doctest::Approx(ellipse_perimeter(2.0, 1.0)).epsilon(1e-4));
  }
  SUBCASE("profile keeps both poles") {
    const Surface s = sphere_profile(1.0, 101);
    const Surface r = resample_count(s, 77);
    CHECK(r[0] == s[0]);
    CHECK(r[76] == s[100]);
    CHECK_NOTHROW(validate(r));
  }
  SUBCASE("too coarse a spacing is refused") {
    const Surface c = circle(1.0, 64);
    CHECK_THROWS_AS(resample(c, c.diameter() / 7.0), Error);
    try {
      resample(c, c.diameter() / 7.0);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ResampleTooCoarse);
    }
  }
}
