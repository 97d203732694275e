#include "pinchlab/scenarios.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include <fmt/format.h>

#include "pinchlab/error.hpp"
#include "pinchlab/geometry.hpp"

namespace pinchlab {

namespace {

constexpr double kPi = std::numbers::pi;

struct Perturbation {
  double amplitude[7] = {};
  double phase[7] = {};

  double operator()(double t) const {
    double r = 1.0;
    for (int m = 2; m <= 6; ++m) r += amplitude[m] * std::cos(m * t + phase[m]);
    return r;
  }
};

// Draw order is fixed (amplitude then phase, m = 2..6) so a seed always gives the same shape.
Perturbation draw_perturbation(double amplitude, std::uint64_t seed, bool with_phase) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * kPi);
  Perturbation p;
  for (int m = 2; m <= 6; ++m) {
    p.amplitude[m] = amplitude * unit(rng) / (m * m);
    const double phase = angle(rng);
    p.phase[m] = with_phase ? phase : 0.0;
  }
  return p;
}

double fraction(std::size_t i, std::size_t n) { return static_cast<double>(i) / static_cast<double>(n); }

void require(bool ok, std::string_view what) {
  if (!ok) throw Error(ErrorCode::InvalidArgument, std::string(what));
}

Surface circle(double radius, std::size_t n) {
  std::vector<Vec2> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = 2.0 * kPi * fraction(i, n);
    v[i] = {radius * std::cos(t), radius * std::sin(t)};
  }
  return Surface::curve(std::move(v));
}

Surface ellipse(double a, double b, std::size_t n) {
  std::vector<Vec2> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = 2.0 * kPi * fraction(i, n);
    v[i] = {a * std::cos(t), b * std::sin(t)};
  }
  return Surface::curve(std::move(v));
}

Surface perturbed_circle(double radius, double amplitude, std::uint64_t seed, std::size_t n) {
  const Perturbation p = draw_perturbation(amplitude, seed, true);
  std::vector<Vec2> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = 2.0 * kPi * fraction(i, n);
    const double r = radius * p(t);
    v[i] = {r * std::cos(t), r * std::sin(t)};
  }
  return Surface::curve(std::move(v));
}

// Profiles in polar form about the origin, theta from the south pole; cos(m theta) modes have
// zero slope at both poles, so the surface stays smooth across the axis.
Surface polar_profile(double radius, const Perturbation& p, std::size_t n) {
  std::vector<Vec2> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double th = kPi * fraction(i, n - 1);
    const double r = radius * p(th);
    v[i] = {r * std::sin(th), -r * std::cos(th)};
  }
  v.front().x = 0.0;
  v.back().x = 0.0;
  return Surface::axisym(std::move(v));
}

Surface dumbbell(double bell, double neck, double flare, std::size_t n) {
  const double beta = flare * flare / (4.0 * (bell * bell - neck * neck));
  const double z2 = (flare + std::sqrt(flare * flare + 4.0 * beta * neck * neck)) / (2.0 * beta);
  const double alpha = neck * neck / z2;
  const double zmax = std::sqrt(z2);
  // Dense sampling clustered at the poles (where r ~ sqrt(Z - |z|)), then equal-arclength.
  const std::size_t dense = 32 * n;
  std::vector<Vec2> v(dense);
  for (std::size_t i = 0; i < dense; ++i) {
    const double z = -zmax * std::cos(kPi * fraction(i, dense - 1));
    const double g = (z2 - z * z) * (alpha + beta * z * z);
    v[i] = {std::sqrt(std::max(g, 0.0)), z};
  }
  v.front() = {0.0, -zmax};
  v.back() = {0.0, zmax};
  const Surface fine = Surface::axisym(std::move(v));
  Surface out = resample_count(fine, n);
  validate(out);
  return out;
}

}  // namespace

std::string_view to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::Circle: return "circle";
    case ScenarioKind::Ellipse: return "ellipse";
    case ScenarioKind::PerturbedCircle: return "perturbed_circle";
    case ScenarioKind::Sphere: return "sphere";
    case ScenarioKind::PerturbedSphere: return "perturbed_sphere";
    case ScenarioKind::Dumbbell: return "dumbbell";
  }
  return "unknown";
}

ScenarioKind parse_scenario_kind(std::string_view name) {
  for (ScenarioKind k : {ScenarioKind::Circle, ScenarioKind::Ellipse, ScenarioKind::PerturbedCircle,
                         ScenarioKind::Sphere, ScenarioKind::PerturbedSphere, ScenarioKind::Dumbbell}) {
    if (name == to_string(k)) return k;
  }
  throw Error(ErrorCode::InvalidArgument, fmt::format("unknown scenario kind '{}'", name));
}

std::size_t default_resolution(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::Circle: return 256;
    case ScenarioKind::Ellipse: return 512;
    case ScenarioKind::PerturbedCircle: return 512;
    case ScenarioKind::Sphere: return 201;
    case ScenarioKind::PerturbedSphere: return 201;
    case ScenarioKind::Dumbbell: return 800;
  }
  return 256;
}

Surface generate(const ScenarioSpec& spec) {
  const std::size_t n = spec.resolution == 0 ? default_resolution(spec.kind) : spec.resolution;
  require(n >= Surface::kMinVertices, "resolution below 8");
  require(spec.radius > 0.0, "radius must be positive");
  Surface s = [&] {
    switch (spec.kind) {
      case ScenarioKind::Circle:
        return circle(spec.radius, n);
      case ScenarioKind::Ellipse:
        require(spec.semi_major > 0.0 && spec.semi_minor > 0.0, "ellipse semi-axes must be positive");
        return ellipse(spec.semi_major, spec.semi_minor, n);
      case ScenarioKind::PerturbedCircle:
        require(spec.amplitude >= 0.0, "amplitude must be nonnegative");
        return perturbed_circle(spec.radius, spec.amplitude, spec.seed, n);
      case ScenarioKind::Sphere:
        return polar_profile(spec.radius, Perturbation{}, n);
      case ScenarioKind::PerturbedSphere:
        require(spec.amplitude >= 0.0, "amplitude must be nonnegative");
        return polar_profile(spec.radius, draw_perturbation(spec.amplitude, spec.seed, false), n);
      case ScenarioKind::Dumbbell:
        require(spec.bell > 0.0, "bell radius must be positive");
        require(spec.neck >= 0.1 * spec.bell && spec.neck <= 0.5 * spec.bell,
                "dumbbell neck must lie in [0.1, 0.5] x bell radius");
        require(spec.flare > 0.0 && spec.flare < 1.0, "dumbbell flare must lie in (0, 1)");
        return dumbbell(spec.bell, spec.neck, spec.flare, n);
    }
    throw Error(ErrorCode::InvalidArgument, "unknown scenario kind");
  }();
  build_geometry(s);
  return s;
}

std::vector<AnalyticValue> analytic_values(const ScenarioSpec& spec) {
  switch (spec.kind) {
    case ScenarioKind::Circle:
      return {{"mu_over_H", 1.0, "inscribed ball is the disc itself"},
              {"rho", 0.0, "convex"},
              {"curvature", 1.0 / spec.radius, "1/R"}};
    case ScenarioKind::Sphere:
      return {{"mu_over_H", 0.5, "mu = 1/R, H = 2/R"},
              {"A2_over_H2", 0.5, "|A|^2 = 2/R^2"},
              {"rho", 0.0, "convex"},
              {"curvature", 1.0 / spec.radius, "both principal curvatures 1/R"}};
    case ScenarioKind::Ellipse: {
      const double a = spec.semi_major;
      const double b = spec.semi_minor;
      if (a < b) break;
      return {{"mu_minor_vertex", 1.0 / b, "centred disc of radius b touches both minor vertices"},
              {"mu_major_vertex", a / (b * b), "osculating disc a/b^2 fits inside"},
              {"curvature_max", a / (b * b), "at the major vertices"},
              {"curvature_min", b / (a * a), "at the minor vertices"},
              {"rho", 0.0, "convex"}};
    }
    default:
      break;
  }
  throw Error(ErrorCode::NoAnalyticOracle, fmt::format("no closed-form values for '{}'", to_string(spec.kind)));
}

double analytic_value(const ScenarioSpec& spec, std::string_view name) {
  for (const AnalyticValue& v : analytic_values(spec)) {
    if (v.name == name) return v.value;
  }
  throw Error(ErrorCode::InvalidArgument, fmt::format("no analytic value '{}'", name));
}

}  // namespace pinchlab
