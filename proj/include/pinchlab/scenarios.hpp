#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "pinchlab/surface.hpp"

namespace pinchlab {

enum class ScenarioKind { Circle, Ellipse, PerturbedCircle, Sphere, PerturbedSphere, Dumbbell };

std::string_view to_string(ScenarioKind kind);
/// Accepts the snake_case names used in config files (e.g. "perturbed_circle").
ScenarioKind parse_scenario_kind(std::string_view name);

/// Initial surface description. Unused fields are ignored by the generator of the given kind.
struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::Circle;
  /// Vertex count; 0 picks default_resolution(kind).
  std::size_t resolution = 0;
  /// Circle / sphere radius, and base radius of the perturbed shapes.
  double radius = 1.0;
  /// Ellipse semi-axes along x and y.
  double semi_major = 2.0;
  double semi_minor = 1.0;
  /// Perturbations: radius(t) = R (1 + sum_{m=2..6} a_m cos(m t + phase_m)), |a_m| <= amplitude / m^2.
  double amplitude = 0.1;
  std::uint64_t seed = 1;
  /// Dumbbell: bell radius, neck radius and flare. The profile is r^2 = (Z^2 - z^2)(alpha + beta z^2)
  /// with r(0) = neck, max r = bell and (r^2)'' <= 2 flare, which keeps it mean convex for flare < 1.
  double bell = 1.0;
  double neck = 0.2;
  double flare = 0.2;
};

std::size_t default_resolution(ScenarioKind kind);

/// Builds the surface and validates it (embedded, H > 0 via build_geometry).
/// Throws InvalidArgument for out-of-range parameters and NotMeanConvex if H > 0 fails.
Surface generate(const ScenarioSpec& spec);

struct AnalyticValue {
  std::string name;
  double value;
  std::string note;
};

/// Closed-form reference values for circle, sphere and ellipse; NoAnalyticOracle otherwise.
std::vector<AnalyticValue> analytic_values(const ScenarioSpec& spec);

/// Looks up one named value of analytic_values (InvalidArgument if absent).
double analytic_value(const ScenarioSpec& spec, std::string_view name);

}  // namespace pinchlab
