#include "pinchlab/surface.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "pinchlab/error.hpp"
#include "range_tree.hpp"

namespace pinchlab {

namespace {

// Relative edge length below which an edge is treated as degenerate.
constexpr double kDegenerateEdge = 1e-14;

bool segments_intersect(Vec2 a0, Vec2 a1, Vec2 b0, Vec2 b1) {
  const double d1 = cross(b1 - b0, a0 - b0);
  const double d2 = cross(b1 - b0, a1 - b0);
  const double d3 = cross(a1 - a0, b0 - a0);
  const double d4 = cross(a1 - a0, b1 - a0);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) {
    return true;
  }
  auto on_segment = [](Vec2 p, Vec2 q, Vec2 r) {
    return std::min(p.x, q.x) <= r.x && r.x <= std::max(p.x, q.x) && std::min(p.y, q.y) <= r.y &&
           r.y <= std::max(p.y, q.y);
  };
  return (d1 == 0 && on_segment(b0, b1, a0)) || (d2 == 0 && on_segment(b0, b1, a1)) ||
         (d3 == 0 && on_segment(a0, a1, b0)) || (d4 == 0 && on_segment(a0, a1, b1));
}

}  // namespace

Surface Surface::curve(std::vector<Vec2> vertices) {
  Surface s(SurfaceKind::Curve, std::move(vertices));
  validate(s);
  return s;
}

Surface Surface::axisym(std::vector<Vec2> profile) {
  Surface s(SurfaceKind::AxiSym, std::move(profile));
  validate(s);
  return s;
}

Surface Surface::from_trusted(SurfaceKind kind, std::vector<Vec2> points) {
  return Surface(kind, std::move(points));
}

std::size_t Surface::edge_count() const {
  if (points_.empty()) return 0;
  return is_curve() ? points_.size() : points_.size() - 1;
}

double Surface::length() const {
  double total = 0.0;
  const std::size_t n = points_.size();
  for (std::size_t e = 0; e < edge_count(); ++e) total += norm(points_[(e + 1) % n] - points_[e]);
  return total;
}

double Surface::diameter() const {
  detail::Box box;
  for (const Vec2& p : points_) {
    box.grow(p);
    if (!is_curve()) box.grow(Vec2{-p.x, p.y});
  }
  return norm(box.hi - box.lo);
}

double Surface::min_edge() const {
  double h = std::numeric_limits<double>::infinity();
  const std::size_t n = points_.size();
  for (std::size_t e = 0; e < edge_count(); ++e) h = std::min(h, norm(points_[(e + 1) % n] - points_[e]));
  return h;
}

Surface Surface::scaled(double s) const {
  std::vector<Vec2> pts = points_;
  for (Vec2& p : pts) p = p * s;
  return Surface(kind_, std::move(pts));
}

double signed_area(std::span<const Vec2> polygon) {
  double twice = 0.0;
  const std::size_t n = polygon.size();
  for (std::size_t i = 0; i < n; ++i) twice += cross(polygon[i], polygon[(i + 1) % n]);
  return 0.5 * twice;
}

bool self_intersects(const Surface& surface) {
  const auto& pts = surface.points();
  const std::size_t n = pts.size();
  const std::size_t edges = surface.edge_count();
  if (!surface.is_curve()) {
    for (std::size_t i = 1; i + 1 < n; ++i) {
      if (!(pts[i].x > 0.0)) return true;
    }
  }
  std::vector<detail::Box> boxes(edges);
  for (std::size_t e = 0; e < edges; ++e) {
    boxes[e].grow(pts[e]);
    boxes[e].grow(pts[(e + 1) % n]);
  }
  const detail::RangeTree tree(boxes);
  bool hit = false;
  tree.visit_overlapping_pairs([&](std::size_t i, std::size_t j) {
    if (hit) return;
    const bool adjacent = (j == i + 1) || (surface.is_curve() && i == 0 && j == edges - 1);
    if (adjacent) return;
    hit = segments_intersect(pts[i], pts[(i + 1) % n], pts[j], pts[(j + 1) % n]);
  });
  return hit;
}

void validate(const Surface& surface) {
  const auto& pts = surface.points();
  const std::size_t n = pts.size();
  if (n < Surface::kMinVertices) {
    throw Error(ErrorCode::InvalidSurface,
                fmt::format("need at least {} vertices, got {}", Surface::kMinVertices, n));
  }
  for (const Vec2& p : pts) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw Error(ErrorCode::InvalidSurface, "non-finite vertex coordinate");
    }
  }
  const double diam = surface.diameter();
  for (std::size_t e = 0; e < surface.edge_count(); ++e) {
    const double len = norm(pts[(e + 1) % n] - pts[e]);
    if (!(len >= kDegenerateEdge * diam)) {
      throw Error(ErrorCode::MeshDegenerate, fmt::format("edge {} has length {:.3g}", e, len));
    }
  }
  if (surface.is_curve()) {
    if (!(signed_area(pts) > 0.0)) {
      throw Error(ErrorCode::InvalidSurface, "curve must be counterclockwise (positive signed area)");
    }
  } else {
    if (pts.front().x != 0.0 || pts.back().x != 0.0) {
      throw Error(ErrorCode::InvalidSurface, "profile endpoints must lie on the axis (r = 0)");
    }
    if (!(pts.front().y < pts.back().y)) {
      throw Error(ErrorCode::InvalidSurface, "profile must run from the lower to the upper pole");
    }
    for (std::size_t i = 1; i + 1 < n; ++i) {
      if (!(pts[i].x > 0.0)) {
        throw Error(ErrorCode::InvalidSurface, fmt::format("interior profile vertex {} has r <= 0", i));
      }
    }
    const Vec2 first = pts[1] - pts[0];
    const Vec2 last = pts[n - 1] - pts[n - 2];
    if (std::abs(first.y) > Surface::kAxisSlopeTolerance * norm(first) ||
        std::abs(last.y) > Surface::kAxisSlopeTolerance * norm(last)) {
      throw Error(ErrorCode::InvalidSurface, "profile does not meet the axis orthogonally");
    }
  }
  if (self_intersects(surface)) {
    throw Error(ErrorCode::SelfIntersection, "surface is not embedded");
  }
}

}  // namespace pinchlab
