#include "pinchlab/flow.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "pinchlab/error.hpp"

namespace pinchlab {

FlowState make_state(Surface surface, double t) {
  GeometryData g = build_geometry(surface);
  return FlowState{t, std::move(surface), std::move(g)};
}

void FlowConfig::validate() const {
  auto fail = [](std::string msg) { throw Error(ErrorCode::InvalidArgument, std::move(msg)); };
  if (!(cfl_factor > 0.0 && cfl_factor <= 0.5)) fail(fmt::format("cfl_factor {} outside (0, 0.5]", cfl_factor));
  if (remesh_every == 0) fail("remesh_every must be positive");
  if (!(stop_H_max > 0.0)) fail("stop_H_max must be positive");
  if (!(stop_time > 0.0)) fail("stop_time must be positive");
  if (std::isinf(stop_H_max) && std::isinf(stop_time)) fail("need a finite stop_time or stop_H_max");
  if (!(sample_interval >= 0.0)) fail("sample_interval must be nonnegative");
  if (!(dt_scale > 0.0)) fail("dt_scale must be positive");
  if (resolution != 0 && resolution < Surface::kMinVertices) fail("resolution below 8");
}

FlowState step(const FlowState& state, double dt, double cfl_factor) {
  const GeometryData& g = state.geometry;
  const double limit = cfl_factor * g.h_min * g.h_min;
  if (!(dt > 0.0) || dt > limit) {
    throw Error(ErrorCode::CflViolation, fmt::format("dt = {:.6g} exceeds cfl * h_min^2 = {:.6g}", dt, limit));
  }
  const auto& p = state.surface.points();
  const std::size_t n = p.size();
  std::vector<Vec2> moved(n);
  for (std::size_t i = 0; i < n; ++i) moved[i] = p[i] - g.normal[i] * (g.H[i] * dt);
  if (!state.surface.is_curve()) {
    for (std::size_t i = 1; i + 1 < n; ++i) {
      if (!(moved[i].x > 0.0)) {
        throw Error(ErrorCode::SelfIntersection, fmt::format("profile vertex {} reached the axis", i));
      }
    }
  }
  Surface next = Surface::from_trusted(state.surface.kind(), std::move(moved));
  return make_state(std::move(next), state.t + dt);
}

FlowState remesh(const FlowState& state, std::size_t count) {
  return make_state(resample_count(state.surface, count == 0 ? state.surface.size() : count, Interpolation::Cubic),
                    state.t);
}

std::string_view to_string(StopReason reason) {
  switch (reason) {
    case StopReason::StopTime: return "stop_time";
    case StopReason::StopHMax: return "stop_H_max";
    case StopReason::SelfIntersection: return "self_intersection";
  }
  return "unknown";
}

void evaluate_contacts(FlowSample& sample, int azimuths, const FlowSample* previous) {
  const bool hint = previous != nullptr && previous->has_contacts;
  sample.mu = mu_fast(sample.surface, sample.geometry, azimuths, hint ? &previous->mu : nullptr);
  sample.rho = rho(sample.surface, sample.geometry, azimuths, hint ? &previous->rho : nullptr);
  sample.has_contacts = true;
}

namespace {

double max_of(const std::vector<double>& v) { return *std::max_element(v.begin(), v.end()); }

void record(FlowTrace& trace, const FlowState& state, std::size_t steps, double dt, const FlowConfig& config) {
  FlowSample s{state.t, steps, dt, state.surface, state.geometry, {}, {}, false};
  const FlowSample* prev = trace.samples.empty() ? nullptr : &trace.samples.back();
  if (config.compute_contacts) evaluate_contacts(s, config.azimuths, prev);
  trace.H_max = std::max(trace.H_max, max_of(s.geometry.H));
  if (s.has_contacts) {
    for (std::size_t i = 0; i < s.geometry.size(); ++i) {
      trace.mu_over_H_max = std::max(trace.mu_over_H_max, s.mu.value[i] / s.geometry.H[i]);
      trace.rho_over_H_max = std::max(trace.rho_over_H_max, s.rho.value[i] / s.geometry.H[i]);
    }
  }
  trace.samples.push_back(std::move(s));
}

}  // namespace

FlowTrace run(const Surface& initial, const FlowConfig& config) {
  config.validate();
  validate(initial);
  const std::size_t count = config.resolution == 0 ? initial.size() : config.resolution;
  FlowState state = make_state(count == initial.size() ? initial : resample_count(initial, count, Interpolation::Cubic));

  FlowTrace trace;
  record(trace, state, 0, 0.0, config);
  std::size_t next_index = 1;
  auto next_sample_time = [&] {
    return config.sample_interval > 0.0 ? config.sample_interval * static_cast<double>(next_index)
                                        : std::numeric_limits<double>::infinity();
  };

  std::size_t steps = 0;
  double dt = 0.0;
  while (true) {
    if (state.t >= config.stop_time) {
      trace.stop_reason = StopReason::StopTime;
      break;
    }
    dt = config.cfl_factor * state.geometry.h_min * state.geometry.h_min * config.dt_scale;
    const double target = std::min(next_sample_time(), config.stop_time);
    const bool clipped = state.t + dt >= target;
    state = step(state, clipped ? target - state.t : dt, config.cfl_factor);
    if (clipped) state.t = target;
    if (++steps > config.max_steps) {
      throw Error(ErrorCode::MaxStepsExceeded, fmt::format("{} steps without reaching a stop criterion", steps - 1));
    }

    const bool at_sample = clipped && state.t == next_sample_time();
    const bool at_remesh = steps % config.remesh_every == 0;
    if (at_remesh) {
      state = remesh(state, count);
      ++trace.remeshes;
    }
    if ((at_remesh || at_sample) && self_intersects(state.surface)) {
      trace.stop_reason = StopReason::SelfIntersection;
      break;
    }
    if (max_of(state.geometry.H) >= config.stop_H_max) {
      if (self_intersects(state.surface)) {
        trace.stop_reason = StopReason::SelfIntersection;
        break;
      }
      record(trace, state, steps, dt, config);
      trace.stop_reason = StopReason::StopHMax;
      break;
    }
    if (at_sample || (clipped && state.t >= config.stop_time)) {
      record(trace, state, steps, dt, config);
      if (at_sample) ++next_index;
    }
  }
  trace.steps = steps;
  trace.final_time = state.t;
  return trace;
}

double exact_sphere_radius(double R0, int n, double t) {
  const double r2 = R0 * R0 - 2.0 * n * t;
  if (r2 < 0.0) throw Error(ErrorCode::ExtinctionPassed, fmt::format("t = {} is past extinction at {}", t, R0 * R0 / (2.0 * n)));
  return std::sqrt(r2);
}

}  // namespace pinchlab
