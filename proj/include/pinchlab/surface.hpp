#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "pinchlab/vec.hpp"

namespace pinchlab {

enum class SurfaceKind {
  /// Closed counterclockwise polygon in the plane; hypersurface dimension n = 1.
  Curve,
  /// Profile (r, z) of a surface of revolution about the z-axis; n = 2.
  /// Runs from the lower pole to the upper pole, both on the axis.
  AxiSym,
};

/// Sampled immersion of an embedded hypersurface: a closed plane curve or an axisymmetric profile.
///
/// The named constructors validate the invariants (vertex count, distinct consecutive vertices,
/// simplicity, orientation, axis conditions) and throw pinchlab::Error on violation.
/// from_trusted() skips validation and is meant for code that checks what it needs itself.
class Surface {
 public:
  static constexpr std::size_t kMinVertices = 8;
  /// Maximum |dz/ds| of the first and last profile edge (profile meets the axis orthogonally).
  static constexpr double kAxisSlopeTolerance = 0.05;

  static Surface curve(std::vector<Vec2> vertices);
  static Surface axisym(std::vector<Vec2> profile);
  static Surface from_trusted(SurfaceKind kind, std::vector<Vec2> points);

  SurfaceKind kind() const { return kind_; }
  bool is_curve() const { return kind_ == SurfaceKind::Curve; }
  /// Hypersurface dimension n.
  int dim() const { return kind_ == SurfaceKind::Curve ? 1 : 2; }
  std::size_t size() const { return points_.size(); }
  /// Number of edges: size() for the closed curve, size() - 1 for the open profile.
  std::size_t edge_count() const;
  const std::vector<Vec2>& points() const { return points_; }
  const Vec2& operator[](std::size_t i) const { return points_[i]; }

  /// Perimeter of the curve or arclength of the profile.
  double length() const;
  /// Diameter of the sampled point set in the plane of definition (curve plane or meridian plane,
  /// including the mirror image of the profile).
  double diameter() const;
  /// Smallest edge length.
  double min_edge() const;

  /// Returns a copy scaled about the origin by s > 0 (keeps r >= 0 on the profile).
  Surface scaled(double s) const;

 private:
  Surface(SurfaceKind kind, std::vector<Vec2> points) : kind_(kind), points_(std::move(points)) {}

  SurfaceKind kind_;
  std::vector<Vec2> points_;
};

/// Signed area of a closed polygon (positive when counterclockwise).
double signed_area(std::span<const Vec2> polygon);

/// True if any two non-adjacent edges of the surface intersect. For the profile this also
/// reports interior vertices on or across the axis.
bool self_intersects(const Surface& surface);

/// Throws unless the surface satisfies its construction invariants.
void validate(const Surface& surface);

}  // namespace pinchlab
