#include <algorithm>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "pinchlab/error.hpp"
#include "pinchlab/flow.hpp"
#include "pinchlab/scenarios.hpp"
#include "shapes.hpp"

using namespace pinchlab;
using namespace pinchlab::testing;

namespace {

double mean_radius(const Surface& s) {
  double total = 0.0;
  for (const Vec2& p : s.points()) total += norm(p);
  return total / static_cast<double>(s.size());
}

double max_relative_radius_error(const Surface& s, double exact) {
  double err = 0.0;
  for (const Vec2& p : s.points()) err = std::max(err, std::abs(norm(p) / exact - 1.0));
  return err;
}

}  // namespace

TEST_CASE("one Euler step follows the exact radius ODE") {
  SUBCASE("circle: dR/dt = -1/R") {
    const FlowState s = step(make_state(circle(1.0, 64)), 1e-4);
    for (const Vec2& p : s.surface.points()) CHECK(std::abs(norm(p) - (1.0 - 1e-4)) <= 1e-8);
    CHECK(s.t == 1e-4);
  }
  SUBCASE("sphere: dR/dt = -2/R") {
    const FlowState s = step(make_state(sphere_profile(1.0, 33)), 1e-4);
    for (const Vec2& p : s.surface.points()) CHECK(std::abs(norm(p) - (1.0 - 2e-4)) <= 1e-7);
  }
}

TEST_CASE("ellipse perimeter decreases at the rate -integral k^2") {
  FlowState s = make_state(ellipse(2.0, 1.0, 400));
  for (int k = 0; k < 50; ++k) {
    const double dt = 0.1 * s.geometry.h_min * s.geometry.h_min;
    double k2 = 0.0;
    for (std::size_t i = 0; i < s.geometry.size(); ++i) k2 += s.geometry.weight[i] * s.geometry.H[i] * s.geometry.H[i];
    const double before = s.surface.length();
    s = step(s, dt);
    const double rate = (s.surface.length() - before) / dt;
    CHECK(rate < 0.0);
    CHECK(rate == doctest::Approx(-k2).epsilon(1e-2));
  }
}

TEST_CASE("step refuses a step beyond the stability limit") {
  const FlowState s = make_state(circle(1.0, 64));
  const double limit = 0.1 * s.geometry.h_min * s.geometry.h_min;
  CHECK_NOTHROW(step(s, limit));
  try {
    step(s, 2.0 * limit);
    FAIL("expected CFLViolation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::CflViolation);
  }
  FlowConfig cfg{.stop_time = 0.01, .dt_scale = 2.0};
  CHECK_THROWS_AS(run(circle(1.0, 64), cfg), Error);
}

TEST_CASE("shrinking circle and sphere follow sqrt(R0^2 - 2 n t)") {
  SUBCASE("circle") {
    const FlowTrace tr = run(circle(1.0, 128), {.stop_time = 0.455, .sample_interval = 0.05, .compute_contacts = false});
    CHECK(tr.stop_reason == StopReason::StopTime);
    REQUIRE(tr.samples.size() == 11);
    for (const FlowSample& s : tr.samples) {
      CHECK(max_relative_radius_error(s.surface, exact_sphere_radius(1.0, 1, s.t)) <= 1e-3);
    }
    CHECK(tr.samples.back().t == 0.455);
    CHECK(mean_radius(tr.samples.back().surface) == doctest::Approx(0.3).epsilon(1e-3));
  }
  SUBCASE("sphere") {
    const FlowTrace tr = run(sphere_profile(1.0, 101), {.stop_time = 0.2275, .sample_interval = 0.025, .compute_contacts = false});
    for (const FlowSample& s : tr.samples) {
      CHECK(max_relative_radius_error(s.surface, exact_sphere_radius(1.0, 2, s.t)) <= 5e-3);
    }
  }
}

TEST_CASE("sample times are exact multiples and strictly increasing; measure decreases") {
  const FlowTrace tr = run(ellipse(2.0, 1.0, 128), {.stop_time = 0.3, .sample_interval = 0.04});
  REQUIRE(tr.samples.size() == 9);
  for (std::size_t k = 0; k + 1 < tr.samples.size(); ++k) {
    CHECK(tr.samples[k].t == 0.04 * static_cast<double>(k));
    CHECK(tr.samples[k + 1].t > tr.samples[k].t);
    CHECK(tr.samples[k + 1].geometry.total_measure() < tr.samples[k].geometry.total_measure());
  }
  CHECK(tr.samples.back().t == 0.3);
  CHECK(tr.samples[1].has_contacts);
}

TEST_CASE("flows starting inside a circle stay inside the shrinking circle") {
  const Surface s = wobbly_circle(200, 0.1, 4, 0.9);
  double r0 = 0.0;
  for (const Vec2& p : s.points()) r0 = std::max(r0, norm(p));
  const FlowTrace tr = run(s, {.stop_time = 0.3, .sample_interval = 0.05, .compute_contacts = false});
  for (const FlowSample& smp : tr.samples) {
    double r = 0.0;
    for (const Vec2& p : smp.surface.points()) r = std::max(r, norm(p));
    CHECK(r <= exact_sphere_radius(r0, 1, smp.t) + 2 * smp.geometry.h_max);
  }
}

TEST_CASE("dumbbell pinches at the neck") {
  const Surface d = generate({.kind = ScenarioKind::Dumbbell, .resolution = 400});
  const FlowTrace tr = run(d, {.stop_H_max = 15.0, .stop_time = 1.0, .sample_interval = 0.005, .compute_contacts = false});
  CHECK(tr.stop_reason == StopReason::StopHMax);
  const FlowSample& last = tr.samples.back();
  const auto& H = last.geometry.H;
  const std::size_t at = static_cast<std::size_t>(std::max_element(H.begin(), H.end()) - H.begin());
  std::size_t neck = last.surface.size() / 2;
  for (std::size_t i = 1; i + 1 < last.surface.size(); ++i) {
    if (std::abs(last.surface[i].y) < 1.0 && last.surface[i].x < last.surface[neck].x) neck = i;
  }
  CHECK(std::abs(static_cast<long>(at) - static_cast<long>(neck)) <= 2);
  CHECK(last.surface[neck].x < 0.1);
}

TEST_CASE("exact sphere radius") {
  CHECK(exact_sphere_radius(1, 1, 0) == 1.0);
  CHECK(exact_sphere_radius(1, 1, 0.5) == 0.0);
  CHECK(exact_sphere_radius(2, 2, 0.75) == 1.0);
  try {
    exact_sphere_radius(1, 1, 0.6);
    FAIL("expected ExtinctionPassed");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ExtinctionPassed);
  }
}

TEST_CASE("config validation and step budget") {
  CHECK_THROWS_AS((FlowConfig{.cfl_factor = 0.6, .stop_time = 1}).validate(), Error);
  CHECK_THROWS_AS((FlowConfig{}).validate(), Error);
  try {
    run(circle(1.0, 64), {.stop_time = 0.4, .max_steps = 10});
    FAIL("expected MaxStepsExceeded");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MaxStepsExceeded);
  }
}
