#include "pinchlab/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "pinchlab/error.hpp"

namespace pinchlab {

namespace {

constexpr double kDegenerateEdge = 1e-14;

struct Stencil {
  Vec2 prev;
  Vec2 here;
  Vec2 next;
};

// Neighbours of vertex i; profile poles use the mirror image of the adjacent vertex.
Stencil stencil(const Surface& s, std::size_t i) {
  const auto& p = s.points();
  const std::size_t n = p.size();
  if (s.is_curve()) return {p[(i + n - 1) % n], p[i], p[(i + 1) % n]};
  if (i == 0) return {Vec2{-p[1].x, p[1].y}, p[0], p[1]};
  if (i == n - 1) return {p[n - 2], p[n - 1], Vec2{-p[n - 2].x, p[n - 2].y}};
  return {p[i - 1], p[i], p[i + 1]};
}

}  // namespace

double GeometryData::total_measure() const {
  double total = 0.0;
  for (double w : weight) total += w;
  return total;
}

GeometryData build_geometry(const Surface& surface, GeometryOptions options) {
  const auto& pts = surface.points();
  const std::size_t nv = pts.size();
  const std::size_t ne = surface.edge_count();
  const bool curve = surface.is_curve();

  GeometryData g;
  g.n = surface.dim();
  g.normal.resize(nv);
  g.principal.assign(nv, {0.0, 0.0});
  g.meridional_slot.assign(nv, 0);
  g.H.resize(nv);
  g.A2.resize(nv);
  g.weight.assign(nv, 0.0);
  g.edge_length.resize(ne);
  g.edge_conductance.resize(ne);

  const double diam = surface.diameter();
  g.h_min = std::numeric_limits<double>::infinity();
  double total = 0.0;
  for (std::size_t e = 0; e < ne; ++e) {
    const Vec2 a = pts[e];
    const Vec2 b = pts[(e + 1) % nv];
    const double len = norm(b - a);
    if (!(len >= kDegenerateEdge * diam)) {
      throw Error(ErrorCode::MeshDegenerate, fmt::format("edge {} has length {:.3g}", e, len));
    }
    g.edge_length[e] = len;
    g.h_min = std::min(g.h_min, len);
    g.h_max = std::max(g.h_max, len);
    total += len;
    if (curve) {
      g.edge_conductance[e] = 1.0 / len;
      g.weight[e] += 0.5 * len;
      g.weight[(e + 1) % nv] += 0.5 * len;
    } else {
      const double r_mid = 0.5 * (a.x + b.x);
      g.edge_conductance[e] = 2.0 * std::numbers::pi * r_mid / len;
      g.weight[e] += std::numbers::pi * (a.x + r_mid) * 0.5 * len;
      g.weight[e + 1] += std::numbers::pi * (b.x + r_mid) * 0.5 * len;
    }
  }
  g.h_mean = total / static_cast<double>(ne);

  for (std::size_t i = 0; i < nv; ++i) {
    const Stencil st = stencil(surface, i);
    const Vec2 e1 = st.here - st.prev;
    const Vec2 e2 = st.next - st.here;
    const double a = norm(e1);
    const double b = norm(e2);
    // Tangent of the circle through the three points at the middle one.
    const Vec2 t = e1 * (b / a) + e2 * (a / b);
    Vec2 nu = rotate_cw(t) / norm(t);
    const double kappa = 2.0 * cross(e1, e2) / (a * b * norm(e1 + e2));

    double lambda_az = 0.0;
    if (!curve) {
      if (i == 0) {
        nu = {0.0, -1.0};
        lambda_az = kappa;
      } else if (i == nv - 1) {
        nu = {0.0, 1.0};
        lambda_az = kappa;
      } else {
        lambda_az = nu.x / st.here.x;
      }
    }
    g.normal[i] = nu;

    if (curve) {
      g.principal[i] = {kappa, 0.0};
      g.H[i] = kappa;
      g.A2[i] = kappa * kappa;
    } else {
      if (kappa <= lambda_az) {
        g.principal[i] = {kappa, lambda_az};
        g.meridional_slot[i] = 0;
      } else {
        g.principal[i] = {lambda_az, kappa};
        g.meridional_slot[i] = 1;
      }
      g.H[i] = g.principal[i][0] + g.principal[i][1];
      g.A2[i] = g.principal[i][0] * g.principal[i][0] + g.principal[i][1] * g.principal[i][1];
    }
    if (options.require_mean_convex && !(g.H[i] > 0.0)) {
      throw Error(ErrorCode::NotMeanConvex, fmt::format("H = {:.6g} at vertex {}", g.H[i], i));
    }
  }
  return g;
}

std::vector<FrameGradient> scalar_gradient(const Surface& surface, const GeometryData& geometry,
                                           std::span<const double> field) {
  const std::size_t nv = surface.size();
  if (field.size() != nv) throw Error(ErrorCode::InvalidArgument, "field size does not match surface");
  std::vector<FrameGradient> grad(nv, FrameGradient{0.0, 0.0});
  const bool curve = surface.is_curve();
  for (std::size_t i = 0; i < nv; ++i) {
    if (!curve && (i == 0 || i == nv - 1)) continue;
    const std::size_t im = curve ? (i + nv - 1) % nv : i - 1;
    const std::size_t ip = curve ? (i + 1) % nv : i + 1;
    const double hm = geometry.edge_length[im];
    const double hp = geometry.edge_length[i];
    const double d =
        (hm * hm * (field[ip] - field[i]) + hp * hp * (field[i] - field[im])) / (hm * hp * (hm + hp));
    grad[i][geometry.meridional_slot[i]] = d;
  }
  return grad;
}

std::vector<double> gradient_norm(std::span<const FrameGradient> gradient) {
  std::vector<double> out(gradient.size());
  for (std::size_t i = 0; i < gradient.size(); ++i) out[i] = std::hypot(gradient[i][0], gradient[i][1]);
  return out;
}

std::vector<double> scalar_laplacian(const Surface& surface, const GeometryData& geometry,
                                     std::span<const double> field) {
  const std::size_t nv = surface.size();
  if (field.size() != nv) throw Error(ErrorCode::InvalidArgument, "field size does not match surface");
  std::vector<double> lap(nv, 0.0);
  for (std::size_t e = 0; e < surface.edge_count(); ++e) {
    const std::size_t j = (e + 1) % nv;
    const double flux = geometry.edge_conductance[e] * (field[j] - field[e]);
    lap[e] += flux;
    lap[j] -= flux;
  }
  for (std::size_t i = 0; i < nv; ++i) lap[i] /= geometry.weight[i];
  return lap;
}

double dirichlet_form(const Surface& surface, const GeometryData& geometry, std::span<const double> u,
                      std::span<const double> v) {
  const std::size_t nv = surface.size();
  double total = 0.0;
  for (std::size_t e = 0; e < surface.edge_count(); ++e) {
    const std::size_t j = (e + 1) % nv;
    total += geometry.edge_conductance[e] * (u[j] - u[e]) * (v[j] - v[e]);
  }
  return total;
}

double integrate(const GeometryData& geometry, std::span<const double> field) {
  double total = 0.0;
  for (std::size_t i = 0; i < field.size(); ++i) total += geometry.weight[i] * field[i];
  return total;
}

std::vector<double> arclength(const Surface& surface) {
  const auto& p = surface.points();
  std::vector<double> s(p.size(), 0.0);
  for (std::size_t i = 1; i < p.size(); ++i) s[i] = s[i - 1] + norm(p[i] - p[i - 1]);
  return s;
}

namespace {

/// Point at chord-length parameter s of the cubic through four consecutive vertices q[0..3] with
/// parameters c[0..3].
Vec2 cubic_point(const std::array<Vec2, 4>& q, const std::array<double, 4>& c, double s) {
  Vec2 out;
  for (std::size_t a = 0; a < 4; ++a) {
    double l = 1.0;
    for (std::size_t b = 0; b < 4; ++b) {
      if (b != a) l *= (s - c[b]) / (c[a] - c[b]);
    }
    out = out + q[a] * l;
  }
  return out;
}

}  // namespace

Surface resample_count(const Surface& surface, std::size_t count, Interpolation interpolation) {
  if (count < Surface::kMinVertices) {
    throw Error(ErrorCode::ResampleTooCoarse, fmt::format("resample to {} vertices", count));
  }
  const auto& p = surface.points();
  const std::size_t nv = p.size();
  const bool curve = surface.is_curve();
  const std::size_t ne = surface.edge_count();

  std::vector<double> cum(ne + 1, 0.0);
  for (std::size_t e = 0; e < ne; ++e) cum[e + 1] = cum[e] + norm(p[(e + 1) % nv] - p[e]);
  const double total = cum[ne];
  const std::size_t intervals = curve ? count : count - 1;
  const double spacing = total / static_cast<double>(intervals);

  // Vertex e + d with its chord-length parameter relative to vertex e; profiles continue past the
  // poles with the mirror image across the axis.
  auto neighbour = [&](std::size_t e, int d) -> std::pair<Vec2, double> {
    const auto k = static_cast<std::ptrdiff_t>(e) + d;
    if (curve) {
      const auto n = static_cast<std::ptrdiff_t>(nv);
      const auto w = static_cast<std::size_t>(((k % n) + n) % n);
      double c = cum[std::min(w, ne)] - cum[e];
      if (k < 0) c -= total;
      if (k >= n) c += total;
      return {p[w], c};
    }
    if (k < 0) {
      const Vec2 q = p[1];
      return {Vec2{-q.x, q.y}, -cum[1]};
    }
    if (k >= static_cast<std::ptrdiff_t>(nv)) {
      const Vec2 q = p[nv - 2];
      return {Vec2{-q.x, q.y}, total + (cum[ne] - cum[ne - 1]) - cum[e]};
    }
    return {p[static_cast<std::size_t>(k)], cum[static_cast<std::size_t>(k)] - cum[e]};
  };

  std::vector<Vec2> out(count);
  std::size_t e = 0;
  for (std::size_t k = 0; k < count; ++k) {
    const double s = spacing * static_cast<double>(k);
    while (e + 1 < ne && cum[e + 1] <= s) ++e;
    const double len = cum[e + 1] - cum[e];
    const double frac = std::clamp((s - cum[e]) / len, 0.0, 1.0);
    if (interpolation == Interpolation::Linear) {
      const Vec2 a = p[e];
      const Vec2 b = p[(e + 1) % nv];
      out[k] = a + (b - a) * frac;
      continue;
    }
    std::array<Vec2, 4> q;
    std::array<double, 4> c{};
    for (int d = -1; d <= 2; ++d) {
      const auto [pt, param] = neighbour(e, d);
      q[static_cast<std::size_t>(d + 1)] = pt;
      c[static_cast<std::size_t>(d + 1)] = param;
    }
    out[k] = cubic_point(q, c, frac * len);
  }
  if (!curve) {
    out.front() = p.front();
    out.back() = p.back();
  }
  return Surface::from_trusted(surface.kind(), std::move(out));
}

Surface resample(const Surface& surface, double target_spacing) {
  const double diam = surface.diameter();
  if (!(target_spacing > 0.0) || target_spacing > diam / 8.0) {
    throw Error(ErrorCode::ResampleTooCoarse,
                fmt::format("target spacing {:.6g} exceeds diameter/8 = {:.6g}", target_spacing, diam / 8.0));
  }
  const auto intervals = static_cast<std::size_t>(std::llround(surface.length() / target_spacing));
  const std::size_t count = surface.is_curve() ? intervals : intervals + 1;
  return resample_count(surface, std::max(count, Surface::kMinVertices));
}

}  // namespace pinchlab
