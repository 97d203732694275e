#pragma once

#include <cstddef>
#include <limits>
#include <string_view>
#include <vector>

#include "pinchlab/geometry.hpp"
#include "pinchlab/inradius.hpp"
#include "pinchlab/surface.hpp"

namespace pinchlab {

struct FlowState {
  double t = 0.0;
  Surface surface;
  GeometryData geometry;
};

/// Builds the cached geometry (throws NotMeanConvex / MeshDegenerate).
FlowState make_state(Surface surface, double t = 0.0);

struct FlowConfig {
  /// Explicit Euler step dt = cfl_factor * h_min^2.
  double cfl_factor = 0.1;
  std::size_t remesh_every = 25;
  double stop_H_max = std::numeric_limits<double>::infinity();
  double stop_time = std::numeric_limits<double>::infinity();
  /// Vertex count restored at every remesh; 0 keeps the initial count.
  std::size_t resolution = 0;
  /// Time between recorded samples; 0 records only the initial and final states.
  double sample_interval = 0.0;
  std::size_t max_steps = 20'000'000;
  /// Evaluate mu and rho at every sample.
  bool compute_contacts = true;
  /// Azimuthal resolution for profiles (0 = default_azimuths).
  int azimuths = 0;
  /// Multiplies the chosen step; values above 1 push dt past the stability limit and make step()
  /// throw CflViolation. Only meant for the mutation check of the verification suite.
  double dt_scale = 1.0;

  /// Throws InvalidArgument on out-of-range fields or when no stop criterion is finite.
  void validate() const;
};

/// Moves every vertex by -H nu dt and rebuilds the geometry.
/// Throws CflViolation if dt > cfl_factor * h_min^2, SelfIntersection if a profile vertex reaches
/// the axis, NotMeanConvex if H <= 0 afterwards.
FlowState step(const FlowState& state, double dt, double cfl_factor = 0.1);

/// Equal-arclength cubic resample to `count` vertices (0 = current count) and geometry rebuild.
FlowState remesh(const FlowState& state, std::size_t count = 0);

enum class StopReason { StopTime, StopHMax, SelfIntersection };
std::string_view to_string(StopReason reason);

struct FlowSample {
  double t = 0.0;
  std::size_t step = 0;
  /// Step size in use when the sample was taken (before clipping to the sample time).
  double dt = 0.0;
  Surface surface;
  GeometryData geometry;
  /// Filled when FlowConfig::compute_contacts is set.
  ContactReport mu;
  ContactReport rho;
  bool has_contacts = false;
};

struct FlowTrace {
  std::vector<FlowSample> samples;
  StopReason stop_reason = StopReason::StopTime;
  std::size_t steps = 0;
  std::size_t remeshes = 0;
  double final_time = 0.0;
  /// Running extrema over all samples.
  double H_max = 0.0;
  double mu_over_H_max = 0.0;
  double rho_over_H_max = 0.0;
};

/// Computes mu and rho for a sample (hints speed up the search; they never change the result).
void evaluate_contacts(FlowSample& sample, int azimuths, const FlowSample* previous = nullptr);

/// Integrates until stop_time, stop_H_max or a self-intersection (checked at every remesh and
/// sample; that precedence holds when several trigger at once). Samples are taken at exact
/// multiples of sample_interval and at the stopping time. Throws MaxStepsExceeded.
FlowTrace run(const Surface& initial, const FlowConfig& config);

/// Radius sqrt(R0^2 - 2 n t) of the shrinking sphere; ExtinctionPassed beyond R0^2 / (2n).
double exact_sphere_radius(double R0, int n, double t);

}  // namespace pinchlab
