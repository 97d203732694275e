#include <algorithm>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "pinchlab/error.hpp"
#include "pinchlab/inradius.hpp"
#include "shapes.hpp"

using namespace pinchlab;
using namespace pinchlab::testing;

namespace {

void check_identical(const ContactReport& a, const ContactReport& b) {
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.value[i] == b.value[i]);
    CHECK(a.contact[i] == b.contact[i]);
  }
}

Surface rigid_motion(const Surface& s, double angle, Vec2 shift) {
  std::vector<Vec2> v(s.size());
  const double c = std::cos(angle);
  const double sn = std::sin(angle);
  for (std::size_t i = 0; i < s.size(); ++i) v[i] = Vec2{c * s[i].x - sn * s[i].y, sn * s[i].x + c * s[i].y} + shift;
  return Surface::curve(v);
}

}  // namespace

TEST_CASE("circle: mu R = 1 everywhere, rho = 0") {
  for (double radius : {1.0, 2.0, 0.3}) {
    for (std::size_t n : {8u, 64u, 256u}) {
      const Surface c = circle(radius, n);
      const GeometryData g = build_geometry(c);
      for (const ContactReport& r : {mu_brute(c, g), mu_fast(c, g)}) {
        for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(r.value[i] * radius - 1.0) <= 1e-12);
      }
      const ContactReport rr = rho(c, g);
      for (std::size_t i = 0; i < n; ++i) {
        CHECK(rr.value[i] == 0.0);
        CHECK(rr.contact[i] == kNoContact);
      }
    }
  }
}

TEST_CASE("circle: finer sampling is limited by vertex rounding") {
  // A vertex off the circle by one rounding unit moves the ratio of a neighbour pair at chord h
  // by about 2 eps R / h^2, so the identity holds to ~ eps (N / 2 pi)^2 rather than eps.
  for (std::size_t n : {512u, 2048u}) {
    const Surface c = circle(1.0, n);
    const ContactReport r = mu_fast(c, build_geometry(c));
    const double h = 2 * std::numbers::pi / n;
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(r.value[i] - 1.0) <= 4e-16 / (h * h));
  }
}

TEST_CASE("sphere: mu / H = 1/2") {
  const Surface s = sphere_profile(1.0, 200);
  const GeometryData g = build_geometry(s);
  const ContactReport r = mu_fast(s, g);
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(r.value[i] / g.H[i] == doctest::Approx(0.5).epsilon(1e-2));
  const ContactReport rr = rho(s, g);
  for (double v : rr.value) CHECK(v == 0.0);
}

TEST_CASE("ellipse: inscribed ball at the minor vertex touches the antipodal vertex") {
  const std::size_t n = 1024;
  const Surface e = ellipse(2.0, 1.0, n);
  const GeometryData g = build_geometry(e);
  ContactReport r = mu_fast(e, g);
  CHECK(r.value[n / 4] == doctest::Approx(1.0).epsilon(1e-2));
  CHECK(r.contact[n / 4] == static_cast<std::int64_t>(3 * n / 4));
  CHECK(r.value[0] == doctest::Approx(2.0).epsilon(1e-2));
  CHECK(r.contact[0] == kSelfContact);
  const auto defect = reflection_check(e, g, r);
  REQUIRE(!std::isnan(defect[n / 4]));
  CHECK(defect[n / 4] <= 2e-2);
  CHECK(std::isnan(defect[0]));
}

TEST_CASE("pruned kernels reproduce the brute-force references bit for bit") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const Surface s = wobbly_circle(200 + 37 * seed, 0.08, seed);
    const GeometryData g = build_geometry(s);
    check_identical(mu_brute(s, g), mu_fast(s, g));
    check_identical(rho_brute(s, g), rho(s, g));
  }
  const Surface s = sphere_profile(1.0, 65);
  const GeometryData g = build_geometry(s);
  check_identical(mu_brute(s, g, 32), mu_fast(s, g, 32));
  check_identical(rho_brute(s, g, 32), rho(s, g, 32));
}

TEST_CASE("a hint from a previous evaluation does not change the result") {
  const Surface s = wobbly_circle(500, 0.08, 42);
  const GeometryData g = build_geometry(s);
  const ContactReport first = mu_fast(s, g);
  check_identical(first, mu_fast(s, g, 0, &first));
  const Surface t = wobbly_circle(500, 0.08, 43);
  const GeometryData gt = build_geometry(t);
  check_identical(mu_brute(t, gt), mu_fast(t, gt, 0, &first));
}

TEST_CASE("scaling covariance") {
  const Surface s = wobbly_circle(400, 0.08, 5);
  const GeometryData g = build_geometry(s);
  const ContactReport base = mu_fast(s, g);
  for (double f : {0.5, 3.0}) {
    const Surface t = s.scaled(f);
    const ContactReport r = mu_fast(t, build_geometry(t));
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(r.value[i] * f == doctest::Approx(base.value[i]).epsilon(1e-12));
  }
}

TEST_CASE("rigid motion invariance") {
  const Surface s = wobbly_circle(400, 0.08, 6);
  const ContactReport base = mu_fast(s, build_geometry(s));
  const Surface t = rigid_motion(s, 0.7, {3.0, -1.5});
  const ContactReport r = mu_fast(t, build_geometry(t));
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(r.value[i] == doctest::Approx(base.value[i]).epsilon(1e-9));
}

TEST_CASE("reflection defect scales with the mesh spacing on convex shapes") {
  const Surface s = wobbly_circle(2048, 0.1, 9);
  const GeometryData g = build_geometry(s);
  ContactReport r = mu_fast(s, g);
  auto defect = reflection_check(s, g, r);
  std::vector<double> d;
  for (double v : defect) {
    if (!std::isnan(v)) d.push_back(v);
  }
  REQUIRE(!d.empty());
  std::sort(d.begin(), d.end());
  CHECK(d[static_cast<std::size_t>(0.95 * (d.size() - 1))] <= 5 * g.h_max);
}

TEST_CASE("refined contacts never decrease the sampled value") {
  const Surface s = wobbly_circle(300, 0.1, 3);
  const GeometryData g = build_geometry(s);
  const ContactReport r = mu_fast(s, g);
  const ContactReport fine = refine_contacts(s, g, r);
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(fine.value[i] >= r.value[i]);
    CHECK(fine.value[i] <= r.value[i] * (1 + 1e-2));
  }
}

TEST_CASE("too few azimuths are refused") {
  const Surface s = sphere_profile(1.0, 33);
  const GeometryData g = build_geometry(s);
  try {
    mu_brute(s, g, 8);
    FAIL("expected ResolutionTooLow");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ResolutionTooLow);
  }
}
