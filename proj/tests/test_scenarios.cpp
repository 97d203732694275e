#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "pinchlab/error.hpp"
#include "pinchlab/geometry.hpp"
#include "pinchlab/scenarios.hpp"
#include "pinchlab/surface_io.hpp"
#include "shapes.hpp"

using namespace pinchlab;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("circle vertices lie on the circle") {
  const Surface c = generate({.kind = ScenarioKind::Circle, .resolution = 256});
  CHECK(c.size() == 256);
  for (const Vec2& p : c.points()) CHECK(std::abs(norm(p) - 1.0) <= 1e-15);
}

TEST_CASE("ellipse curvature spans [b/a^2, a/b^2]") {
  const Surface e = generate({.kind = ScenarioKind::Ellipse, .resolution = 4096});
  const GeometryData g = build_geometry(e);
  const auto [lo, hi] = std::minmax_element(g.H.begin(), g.H.end());
  CHECK(*lo == doctest::Approx(0.25).epsilon(1e-2));
  CHECK(*hi == doctest::Approx(2.0).epsilon(1e-2));
}

TEST_CASE("dumbbell is mean convex with a saddle-shaped neck") {
  const Surface d = generate({.kind = ScenarioKind::Dumbbell, .resolution = 800, .bell = 1.0, .neck = 0.2});
  const GeometryData g = build_geometry(d);
  std::size_t neck = 1;
  for (std::size_t i = 1; i + 1 < d.size(); ++i) {
    if (std::abs(d[i].y) < std::abs(d[neck].y)) neck = i;
  }
  CHECK(d[neck].x == doctest::Approx(0.2).epsilon(1e-3));
  CHECK(g.lambda_min(neck) < 0.0);
  for (double h : g.H) CHECK(h > 0.0);
  double r_max = 0.0;
  for (const Vec2& p : d.points()) r_max = std::max(r_max, p.x);
  CHECK(r_max == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("generators are deterministic and seed dependent") {
  for (ScenarioKind k : {ScenarioKind::PerturbedCircle, ScenarioKind::PerturbedSphere}) {
    const ScenarioSpec spec{.kind = k, .seed = 7};
    CHECK(generate(spec).points() == generate(spec).points());
    ScenarioSpec other = spec;
    other.seed = 8;
    CHECK(generate(spec).points() != generate(other).points());
    for (double h : build_geometry(generate(spec)).H) CHECK(h > 0.0);
  }
}

TEST_CASE("out-of-range parameters are refused") {
  CHECK(code_of([] { generate({.kind = ScenarioKind::Dumbbell, .neck = 0.05}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { generate({.kind = ScenarioKind::Dumbbell, .flare = 1.5}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { generate({.kind = ScenarioKind::PerturbedCircle, .amplitude = 3.0}); }) ==
        ErrorCode::NotMeanConvex);
  CHECK(code_of([] { parse_scenario_kind("torus"); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("analytic oracle registry") {
  CHECK(analytic_value({.kind = ScenarioKind::Circle}, "mu_over_H") == 1.0);
  CHECK(analytic_value({.kind = ScenarioKind::Circle}, "rho") == 0.0);
  CHECK(analytic_value({.kind = ScenarioKind::Sphere}, "mu_over_H") == 0.5);
  CHECK(analytic_value({.kind = ScenarioKind::Sphere}, "A2_over_H2") == 0.5);
  CHECK(analytic_value({.kind = ScenarioKind::Ellipse}, "mu_minor_vertex") == 1.0);
  CHECK(analytic_value({.kind = ScenarioKind::Ellipse}, "mu_major_vertex") == 2.0);
  CHECK(code_of([] { analytic_values({.kind = ScenarioKind::Dumbbell}); }) == ErrorCode::NoAnalyticOracle);
}

TEST_CASE("exchange format round-trips exactly") {
  for (const Surface& s : {generate({.kind = ScenarioKind::PerturbedCircle, .resolution = 100}),
                           generate({.kind = ScenarioKind::Dumbbell, .resolution = 120})}) {
    const Surface back = parse_surface(format_surface(s, "test"));
    CHECK(back.kind() == s.kind());
    CHECK(back.points() == s.points());
  }
  CHECK(code_of([] { parse_surface("polygon\n0 0\n"); }) == ErrorCode::InvalidSurface);
  CHECK(code_of([] { parse_surface("curve\n0 zero\n"); }) == ErrorCode::InvalidSurface);
  const Surface s = parse_surface("# header\ncurve\n1 0 # a\n0.7 0.7\n0 1\n-0.7 0.7\n-1 0\n-0.7 -0.7\n0 -1\n0.7 -0.7\n");
  CHECK(s.size() == 8);
}
