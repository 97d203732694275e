#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pinchlab/surface.hpp"
#include "pinchlab/vec.hpp"

namespace pinchlab {

/// Tangential derivatives D_i of a scalar field in the principal frame, ordered like
/// GeometryData::principal (only slot 0 is used when n = 1).
using FrameGradient = std::array<double, 2>;

/// Per-vertex differential geometry of a Surface.
///
/// Normals live in the plane of definition: (x, y) for curves, (r, z) for profiles. The 3D normal
/// of a profile point at azimuth phi is (nu_r cos phi, nu_r sin phi, nu_z). Principal curvatures
/// are sorted ascending; meridional_slot tells which slot holds the in-plane (meridional)
/// curvature. H is the sum of the principal curvatures.
struct GeometryData {
  int n = 1;
  std::vector<Vec2> normal;
  std::vector<std::array<double, 2>> principal;
  std::vector<std::uint8_t> meridional_slot;
  std::vector<double> H;
  std::vector<double> A2;
  /// Vertex measure (arclength for curves, surface area for profiles); sums to the total measure.
  std::vector<double> weight;
  /// Edge e joins vertex e to vertex e + 1 (cyclic for curves).
  std::vector<double> edge_length;
  /// Coefficient of edge e in the discrete Dirichlet form: 1/len (n = 1), 2 pi r_mid / len (n = 2).
  std::vector<double> edge_conductance;
  double h_min = 0.0;
  double h_max = 0.0;
  double h_mean = 0.0;

  std::size_t size() const { return H.size(); }
  double lambda_min(std::size_t i) const { return principal[i][0]; }
  /// lambda_n, the largest principal curvature.
  double lambda_max(std::size_t i) const { return principal[i][n - 1]; }
  double lambda_meridional(std::size_t i) const { return principal[i][meridional_slot[i]]; }
  double total_measure() const;
};

struct GeometryOptions {
  /// Throw NotMeanConvex if H <= 0 at any vertex.
  bool require_mean_convex = true;
};

/// Curvatures from the circle through each vertex and its two neighbours (exact on circles),
/// normals from the tangent of that circle. Profile poles use the mirror image of the adjacent
/// vertex across the axis. Throws MeshDegenerate / NotMeanConvex.
GeometryData build_geometry(const Surface& surface, GeometryOptions options = {});

/// Centered (non-uniform three-point) arclength derivative. Azimuthal derivatives of
/// axisymmetric fields vanish; the meridional derivative is zero at the poles.
std::vector<FrameGradient> scalar_gradient(const Surface& surface, const GeometryData& geometry,
                                           std::span<const double> field);

/// |grad u| per vertex.
std::vector<double> gradient_norm(std::span<const FrameGradient> gradient);

/// Finite-volume Laplace-Beltrami operator: Delta u_i = (sum of edge fluxes) / weight_i.
/// For profiles this is (1/r)(r u')' in arclength, with the pole limit 2 u''.
std::vector<double> scalar_laplacian(const Surface& surface, const GeometryData& geometry,
                                     std::span<const double> field);

/// Discrete Dirichlet form sum_e c_e (u_{e+1} - u_e)(v_{e+1} - v_e), the quadrature of
/// integral <grad u, grad v> that is exactly dual to scalar_laplacian:
/// sum_i w_i v_i (Delta u)_i = -dirichlet_form(u, v).
double dirichlet_form(const Surface& surface, const GeometryData& geometry, std::span<const double> u,
                      std::span<const double> v);

/// Weighted sum sum_i w_i f_i.
double integrate(const GeometryData& geometry, std::span<const double> field);

/// Equal-arclength redistribution along the polygon (piecewise-linear interpolation). Curves keep
/// vertex 0; profiles keep both poles. Throws ResampleTooCoarse if target_spacing > diameter / 8.
Surface resample(const Surface& surface, double target_spacing);

enum class Interpolation {
  /// New vertices on the old edges (chords).
  Linear,
  /// Cubic through the four nearest old vertices in chord-length parameter, mirrored across the
  /// axis at profile poles. Keeps new vertices on the underlying smooth surface to O(h^4), so
  /// repeated remeshing does not leave chord-offset noise in the curvature.
  Cubic,
};

/// Same redistribution with an explicit vertex count.
Surface resample_count(const Surface& surface, std::size_t count, Interpolation interpolation = Interpolation::Linear);

/// Cumulative arclength at each vertex (0 at vertex 0).
std::vector<double> arclength(const Surface& surface);

}  // namespace pinchlab
