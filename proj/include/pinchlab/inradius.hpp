#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "pinchlab/geometry.hpp"
#include "pinchlab/surface.hpp"
#include "pinchlab/vec.hpp"

namespace pinchlab {

enum class ContactSide {
  /// mu: reciprocal of the inscribed radius.
  Mu,
  /// rho: reciprocal of the outer radius, clamped at 0.
  Rho,
};

/// The local branch won: lambda_n for mu (the osculating ball is the inscribed ball).
inline constexpr std::int64_t kSelfContact = -1;
/// The clamp at 0 won (rho on locally convex regions).
inline constexpr std::int64_t kNoContact = -2;

/// Per-vertex mu or rho with the attaining sample point.
///
/// Contact indices address the candidate set: the vertex index for curves, j * azimuths + m for
/// profiles (profile vertex j rotated to azimuth 2 pi m / azimuths).
struct ContactReport {
  ContactSide side = ContactSide::Mu;
  int azimuths = 0;
  std::vector<double> value;
  /// lambda_n per vertex (export convenience; equals the geometry value).
  std::vector<double> lambda_n;
  std::vector<std::int64_t> contact;
  /// Two-point function at the attaining pair: Z for mu, W for rho; 0 for self/no contact.
  std::vector<double> z_residual;
  /// Filled by reflection_check; NaN where not evaluated.
  std::vector<double> reflection_defect;
  /// True once refine_contacts has replaced vertex-sampled values by sub-vertex maxima.
  bool refined = false;

  std::size_t size() const { return value.size(); }
};

/// A candidate point of the sampled surface in R^3 (curves embed at z = 0).
struct CandidatePoint {
  Vec3 position;
  Vec3 normal;
};

/// max(64, N/4) rounded up to an even count, so azimuth pi is always sampled.
int default_azimuths(std::size_t profile_vertices);

CandidatePoint candidate_point(const Surface& surface, const GeometryData& geometry, int azimuths,
                               std::int64_t index);
CandidatePoint query_point(const Surface& surface, const GeometryData& geometry, std::size_t vertex);

/// Serial reference: sup over every sample point y != x of 2<x - y, nu>/|x - y|^2, with lambda_n
/// as the local candidate. Ties go to lambda_n, then to the smallest candidate index.
/// azimuths = 0 selects default_azimuths(); profiles need at least 16 (ResolutionTooLow).
ContactReport mu_brute(const Surface& surface, const GeometryData& geometry, int azimuths = 0);

/// Same result as mu_brute, bit for bit. Only candidates inside the current inscribed-ball
/// candidate B(x - nu/mu_best, 1/mu_best) can raise mu_best, so a bounding-box hierarchy over the
/// vertices prunes everything else. Seeds: lambda_n, the hint's contact (e.g. the previous frame)
/// and the previous vertex's contact. Parallel over query vertices.
ContactReport mu_fast(const Surface& surface, const GeometryData& geometry, int azimuths = 0,
                      const ContactReport* hint = nullptr);

/// Serial reference for rho: max(0, sup of the negated ratio). Ties go to the clamp.
ContactReport rho_brute(const Surface& surface, const GeometryData& geometry, int azimuths = 0);

/// Pruned rho, identical to rho_brute. Prunes with the exterior ball B(x + nu/rho, 1/rho), or the
/// outer half-space while rho_best = 0.
ContactReport rho(const Surface& surface, const GeometryData& geometry, int azimuths = 0,
                  const ContactReport* hint = nullptr);

/// Reflection identity at interior contacts: nu(y) = nu(x) - mu (x - y) for mu and
/// nu(y) = nu(x) + rho (x - y) for rho. Evaluated where the contact is a genuine second point and
/// mu - lambda_n >= 0.05 H (resp. rho >= 0.05 H and rho + lambda_1 >= 0.05 H); NaN elsewhere.
/// Also stores the result in report.reflection_defect.
std::vector<double> reflection_check(const Surface& surface, const GeometryData& geometry,
                                     ContactReport& report);

/// Defect |nu(y) - (nu(x) -+ value (x - y))| for an arbitrary pair, ignoring eligibility.
double reflection_defect(const CandidatePoint& x, const CandidatePoint& y, double value, ContactSide side);

/// Replaces each interior-contact value by the peak of the quartic through the ratio at the
/// contact and two meridional neighbours on each side (parabola through one on each side near the
/// profile poles), searched between the adjacent neighbours and never below the sampled value.
/// Removes the sampling ripple that would otherwise dominate second differences of mu.
ContactReport refine_contacts(const Surface& surface, const GeometryData& geometry, const ContactReport& report);

/// Relative margin below which mu is treated as the local branch in eligibility rules.
inline constexpr double kInteriorContactGap = 0.05;

}  // namespace pinchlab
