#include "pinchlab/inradius.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>

#include "pinchlab/error.hpp"
#include "range_tree.hpp"

namespace pinchlab {

namespace {

using detail::Box;
using detail::RangeTree;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Both kernels evaluate candidates through these two functions only, which keeps them bit-identical.
inline double chord_ratio(Vec2 x, Vec2 nu, Vec2 y) {
  const double dx = x.x - y.x;
  const double dy = x.y - y.y;
  return 2.0 * (nu.x * dx + nu.y * dy) / (dx * dx + dy * dy);
}

inline double chord_ratio(Vec2 x, Vec2 nu, Vec2 y, double c, double s) {
  const double dx = x.x - y.x * c;
  const double dy = -y.x * s;
  const double dz = x.y - y.y;
  return 2.0 * (nu.x * dx + nu.y * dz) / (dx * dx + dy * dy + dz * dz);
}

// Candidate set of a surface, shared by all kernels.
class Candidates {
 public:
  Candidates(const Surface& surface, const GeometryData& geometry, int azimuths, ContactSide side)
      : surface_(surface), geometry_(geometry), side_(side) {
    if (geometry.size() != surface.size()) throw Error(ErrorCode::InvalidArgument, "geometry does not match surface");
    if (!surface.is_curve()) {
      m_ = azimuths == 0 ? default_azimuths(surface.size()) : azimuths;
      if (m_ < 16) throw Error(ErrorCode::ResolutionTooLow, "azimuthal resolution below 16");
      if (m_ % 2 != 0) throw Error(ErrorCode::InvalidArgument, "azimuthal resolution must be even");
      cos_.resize(m_);
      sin_.resize(m_);
      // Symmetric tables: the reflected azimuth gives the reflected point exactly, and pi is exact.
      for (int m = 0; m <= m_ / 2; ++m) {
        const double phi = 2.0 * std::numbers::pi * m / m_;
        cos_[m] = std::cos(phi);
        sin_[m] = std::sin(phi);
      }
      cos_[0] = 1.0;
      sin_[0] = 0.0;
      cos_[m_ / 2] = -1.0;
      sin_[m_ / 2] = 0.0;
      if (m_ % 4 == 0) {
        cos_[m_ / 4] = 0.0;
        sin_[m_ / 4] = 1.0;
      }
      for (int m = m_ / 2 + 1; m < m_; ++m) {
        cos_[m] = cos_[m_ - m];
        sin_[m] = -sin_[m_ - m];
      }
    }
  }

  bool curve() const { return m_ == 0; }
  int azimuths() const { return m_; }
  std::size_t vertices() const { return surface_.size(); }
  std::int64_t count() const {
    return curve() ? static_cast<std::int64_t>(vertices()) : static_cast<std::int64_t>(vertices()) * m_;
  }
  bool pole(std::size_t j) const { return !curve() && (j == 0 || j + 1 == vertices()); }

  // Index with duplicate pole copies folded onto azimuth 0.
  std::int64_t canonical(std::int64_t idx) const {
    if (curve()) return idx;
    const auto j = static_cast<std::size_t>(idx / m_);
    return pole(j) ? static_cast<std::int64_t>(j) * m_ : idx;
  }

  bool same_point(std::size_t i, std::int64_t idx) const {
    if (curve()) return static_cast<std::size_t>(idx) == i;
    const auto j = static_cast<std::size_t>(idx / m_);
    return j == i && (idx % m_ == 0 || pole(i));
  }

  // Signed chord ratio for the side: ratio for mu, its negation for rho.
  double value(std::size_t i, std::int64_t idx) const {
    const Vec2 x = surface_[i];
    const Vec2 nu = geometry_.normal[i];
    double r;
    if (curve()) {
      r = chord_ratio(x, nu, surface_[static_cast<std::size_t>(idx)]);
    } else {
      const auto j = static_cast<std::size_t>(idx / m_);
      const auto m = static_cast<std::size_t>(idx % m_);
      r = chord_ratio(x, nu, surface_[j], cos_[m], sin_[m]);
    }
    return side_ == ContactSide::Mu ? r : -r;
  }

  double local_value(std::size_t i) const {
    return side_ == ContactSide::Mu ? geometry_.lambda_max(i) : 0.0;
  }
  std::int64_t local_index() const { return side_ == ContactSide::Mu ? kSelfContact : kNoContact; }

  CandidatePoint point(std::int64_t idx) const {
    if (curve()) {
      const auto j = static_cast<std::size_t>(idx);
      const Vec2 p = surface_[j];
      const Vec2 nu = geometry_.normal[j];
      return {{p.x, p.y, 0.0}, {nu.x, nu.y, 0.0}};
    }
    const auto j = static_cast<std::size_t>(idx / m_);
    const auto m = static_cast<std::size_t>(idx % m_);
    const Vec2 p = surface_[j];
    const Vec2 nu = geometry_.normal[j];
    return {{p.x * cos_[m], p.x * sin_[m], p.y}, {nu.x * cos_[m], nu.x * sin_[m], nu.y}};
  }

 private:
  const Surface& surface_;
  const GeometryData& geometry_;
  ContactSide side_;
  int m_ = 0;
  std::vector<double> cos_;
  std::vector<double> sin_;
};

// Keeps the lexicographic maximum of (value, local branch first, smallest index).
struct Best {
  double value;
  std::int64_t index;

  void offer(double v, std::int64_t idx) {
    if (v > value || (v == value && index >= 0 && idx < index)) {
      value = v;
      index = idx;
    }
  }
};

ContactReport make_report(ContactSide side, const Candidates& cand, const GeometryData& geometry) {
  ContactReport report;
  report.side = side;
  report.azimuths = cand.azimuths();
  const std::size_t n = geometry.size();
  report.value.resize(n);
  report.contact.resize(n);
  report.z_residual.assign(n, 0.0);
  report.reflection_defect.assign(n, kNaN);
  report.lambda_n.resize(n);
  for (std::size_t i = 0; i < n; ++i) report.lambda_n[i] = geometry.lambda_max(i);
  return report;
}

double two_point_function(const CandidatePoint& x, const CandidatePoint& y, double value, ContactSide side) {
  const Vec3 d = x.position - y.position;
  const double half = 0.5 * value * dot(d, d);
  return side == ContactSide::Mu ? half - dot(d, x.normal) : half + dot(d, x.normal);
}

void finish_report(ContactReport& report, const Candidates& cand, const Surface& surface,
                   const GeometryData& geometry) {
  for (std::size_t i = 0; i < report.size(); ++i) {
    if (report.contact[i] < 0) continue;
    report.z_residual[i] = two_point_function(query_point(surface, geometry, i), cand.point(report.contact[i]),
                                              report.value[i], report.side);
  }
}

ContactReport brute(const Surface& surface, const GeometryData& geometry, int azimuths, ContactSide side) {
  const Candidates cand(surface, geometry, azimuths, side);
  ContactReport report = make_report(side, cand, geometry);
  const std::int64_t count = cand.count();
  for (std::size_t i = 0; i < cand.vertices(); ++i) {
    Best best{cand.local_value(i), cand.local_index()};
    for (std::int64_t idx = 0; idx < count; ++idx) {
      if (cand.same_point(i, idx)) continue;
      best.offer(cand.value(i, idx), idx);
    }
    report.value[i] = best.value;
    report.contact[i] = best.index;
  }
  finish_report(report, cand, surface, geometry);
  return report;
}

// Half-space {y : <y - x, nu> > 0} and the balls are tested on the plane of definition. For
// profiles a box of (r, z) stands for the solid of revolution it sweeps: its distance to the
// center (c_r, 0, c_z) is the planar distance to (|c_r|, c_z), and the largest normal projection
// uses |nu_r|.
ContactReport pruned(const Surface& surface, const GeometryData& geometry, int azimuths, ContactSide side,
                     const ContactReport* hint) {
  const Candidates cand(surface, geometry, azimuths, side);
  ContactReport report = make_report(side, cand, geometry);
  const std::size_t n = cand.vertices();
  const int M = cand.azimuths();

  std::vector<Box> boxes(n);
  double extent = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    boxes[j].grow(surface[j]);
    extent = std::max(extent, norm(surface[j]));
  }
  const RangeTree tree(boxes);

  const bool use_hint = hint != nullptr && hint->side == side && hint->azimuths == M && hint->size() == n;
  const double sign = side == ContactSide::Mu ? -1.0 : 1.0;
  const auto signed_n = static_cast<std::int64_t>(n);

#pragma omp parallel
  {
    std::int64_t last = kSelfContact;
#pragma omp for schedule(static)
    for (std::int64_t ii = 0; ii < signed_n; ++ii) {
      const auto i = static_cast<std::size_t>(ii);
      const Vec2 x = surface[i];
      const Vec2 nu = geometry.normal[i];
      Best best{cand.local_value(i), cand.local_index()};

      auto offer = [&](std::int64_t idx) {
        if (idx < 0 || idx >= cand.count()) return;
        idx = cand.canonical(idx);
        if (cand.same_point(i, idx)) return;
        best.offer(cand.value(i, idx), idx);
      };
      auto offer_with_neighbours = [&](std::int64_t idx) {
        if (idx < 0) return;
        offer(idx);
        if (cand.curve()) {
          offer((idx + 1) % signed_n);
          offer((idx + signed_n - 1) % signed_n);
        } else {
          offer(idx + M);
          offer(idx - M);
        }
      };
      if (use_hint) offer_with_neighbours(hint->contact[i]);
      offer_with_neighbours(last);

      const Vec2 dir = cand.curve() ? nu : Vec2{std::abs(nu.x), nu.y};
      auto region = [&](Vec2& center, double& radius2, bool& halfspace) {
        halfspace = best.value <= 0.0;
        if (halfspace) return;
        const double radius = 1.0 / best.value;
        Vec2 c = x + sign * radius * nu;
        if (!cand.curve()) c.x = std::abs(c.x);
        center = c;
        const double slack = radius + 1e-9 * (radius + extent);
        radius2 = slack * slack;
      };
      auto accept = [&](const Box& box) {
        Vec2 center;
        double radius2 = 0.0;
        bool halfspace = false;
        region(center, radius2, halfspace);
        if (halfspace) {
          const double px = dir.x >= 0.0 ? box.hi.x : box.lo.x;
          const double py = dir.y >= 0.0 ? box.hi.y : box.lo.y;
          const double reach = dir.x * px + dir.y * py - (nu.x * x.x + nu.y * x.y);
          return reach >= -1e-12 * (1.0 + extent);
        }
        return box.dist2(center) <= radius2;
      };
      auto priority = [&](const Box& box) {
        Vec2 center;
        double radius2 = 0.0;
        bool halfspace = false;
        region(center, radius2, halfspace);
        if (halfspace) {
          const double px = dir.x >= 0.0 ? box.hi.x : box.lo.x;
          const double py = dir.y >= 0.0 ? box.hi.y : box.lo.y;
          return -(dir.x * px + dir.y * py);
        }
        return box.dist2(center);
      };
      auto visit = [&](std::uint32_t j) {
        if (cand.curve()) {
          offer(j);
          return;
        }
        const std::int64_t base = static_cast<std::int64_t>(j) * M;
        if (cand.pole(j)) {
          offer(base);
          return;
        }
        for (int m = 0; m < M; ++m) offer(base + m);
      };
      tree.visit_region(accept, priority, visit);

      report.value[i] = best.value;
      report.contact[i] = best.index;
      last = best.index;
    }
  }
  finish_report(report, cand, surface, geometry);
  return report;
}

}  // namespace

int default_azimuths(std::size_t profile_vertices) {
  const auto m = std::max<std::size_t>(64, profile_vertices / 4);
  return static_cast<int>(m + (m % 2));
}

CandidatePoint candidate_point(const Surface& surface, const GeometryData& geometry, int azimuths,
                               std::int64_t index) {
  const Candidates cand(surface, geometry, surface.is_curve() ? 0 : azimuths, ContactSide::Mu);
  if (index < 0 || index >= cand.count()) throw Error(ErrorCode::InvalidArgument, "candidate index out of range");
  return cand.point(index);
}

CandidatePoint query_point(const Surface& surface, const GeometryData& geometry, std::size_t vertex) {
  const Vec2 p = surface[vertex];
  const Vec2 nu = geometry.normal[vertex];
  if (surface.is_curve()) return {{p.x, p.y, 0.0}, {nu.x, nu.y, 0.0}};
  return {{p.x, 0.0, p.y}, {nu.x, 0.0, nu.y}};
}

ContactReport mu_brute(const Surface& surface, const GeometryData& geometry, int azimuths) {
  return brute(surface, geometry, azimuths, ContactSide::Mu);
}

ContactReport mu_fast(const Surface& surface, const GeometryData& geometry, int azimuths, const ContactReport* hint) {
  return pruned(surface, geometry, azimuths, ContactSide::Mu, hint);
}

ContactReport rho_brute(const Surface& surface, const GeometryData& geometry, int azimuths) {
  return brute(surface, geometry, azimuths, ContactSide::Rho);
}

ContactReport rho(const Surface& surface, const GeometryData& geometry, int azimuths, const ContactReport* hint) {
  return pruned(surface, geometry, azimuths, ContactSide::Rho, hint);
}

double reflection_defect(const CandidatePoint& x, const CandidatePoint& y, double value, ContactSide side) {
  const Vec3 d = x.position - y.position;
  const double s = side == ContactSide::Mu ? -value : value;
  return norm(y.normal - (x.normal + d * s));
}

std::vector<double> reflection_check(const Surface& surface, const GeometryData& geometry, ContactReport& report) {
  const Candidates cand(surface, geometry, report.azimuths, report.side);
  std::vector<double> defect(report.size(), kNaN);
  for (std::size_t i = 0; i < report.size(); ++i) {
    if (report.contact[i] < 0) continue;
    const double v = report.value[i];
    const double gap = kInteriorContactGap * geometry.H[i];
    const bool eligible = report.side == ContactSide::Mu
                              ? v - geometry.lambda_max(i) >= gap
                              : v >= gap && v + geometry.lambda_min(i) >= gap;
    if (!eligible) continue;
    defect[i] = reflection_defect(query_point(surface, geometry, i), cand.point(report.contact[i]), v, report.side);
  }
  report.reflection_defect = defect;
  return defect;
}

namespace {

/// Maximum of the polynomial through the nodes (s_k, g_k) over [lo, hi], by golden section.
double polynomial_peak(std::span<const double> s, std::span<const double> g, double lo, double hi) {
  auto eval = [&](double x) {
    double sum = 0.0;
    for (std::size_t a = 0; a < s.size(); ++a) {
      double l = 1.0;
      for (std::size_t b = 0; b < s.size(); ++b) {
        if (b != a) l *= (x - s[b]) / (s[a] - s[b]);
      }
      sum += g[a] * l;
    }
    return sum;
  };
  constexpr double kRatio = 0.6180339887498949;
  double a = lo;
  double b = hi;
  double x1 = b - kRatio * (b - a);
  double x2 = a + kRatio * (b - a);
  double f1 = eval(x1);
  double f2 = eval(x2);
  for (int it = 0; it < 80; ++it) {
    if (f1 > f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kRatio * (b - a);
      f1 = eval(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kRatio * (b - a);
      f2 = eval(x2);
    }
  }
  return std::max(f1, f2);
}

}  // namespace

ContactReport refine_contacts(const Surface& surface, const GeometryData& geometry, const ContactReport& report) {
  const Candidates cand(surface, geometry, report.azimuths, report.side);
  ContactReport out = report;
  out.refined = true;
  const std::size_t n = cand.vertices();
  const int M = cand.azimuths();
  for (std::size_t i = 0; i < report.size(); ++i) {
    const std::int64_t idx = report.contact[i];
    if (idx < 0) continue;
    // Meridional neighbours of the contact at offsets -2..2 (curves wrap, profiles stop at the poles).
    std::array<std::int64_t, 5> nodes{};
    std::array<double, 5> offset{};
    std::array<bool, 5> present{};
    std::size_t j;
    std::int64_t stride;
    if (cand.curve()) {
      j = static_cast<std::size_t>(idx);
      stride = 1;
    } else {
      j = static_cast<std::size_t>(idx / M);
      const auto m = static_cast<int>(idx % M);
      if (cand.pole(j) || (m != 0 && m != M / 2)) continue;
      stride = M;
    }
    nodes[2] = idx;
    present[2] = true;
    for (int side : {-1, 1}) {
      double s = 0.0;
      for (int d = 1; d <= 2; ++d) {
        const auto jd = static_cast<std::ptrdiff_t>(j) + side * d;
        std::size_t edge;
        std::int64_t node;
        if (cand.curve()) {
          const auto nn = static_cast<std::ptrdiff_t>(n);
          const auto w = static_cast<std::size_t>(((jd % nn) + nn) % nn);
          edge = side < 0 ? w : (w + n - 1) % n;
          node = static_cast<std::int64_t>(w);
        } else {
          if (jd < 0 || jd >= static_cast<std::ptrdiff_t>(n)) break;
          edge = static_cast<std::size_t>(side < 0 ? jd : jd - 1);
          node = cand.canonical(idx + side * d * stride);
        }
        if (cand.same_point(i, node)) break;
        s += side * geometry.edge_length[edge];
        nodes[2 + side * d] = node;
        offset[2 + side * d] = s;
        present[2 + side * d] = true;
        if (!cand.curve() && cand.pole(static_cast<std::size_t>(jd))) break;
      }
    }
    if (!present[1] || !present[3]) continue;
    const double g0 = report.value[i];
    const double gm = cand.value(i, nodes[1]);
    const double gp = cand.value(i, nodes[3]);
    if (gm > g0 || gp > g0) continue;
    std::array<double, 5> s_nodes{};
    std::array<double, 5> g_nodes{};
    std::size_t used = 0;
    const bool wide = present[0] && present[4];
    for (std::size_t k = wide ? 0 : 1; k <= (wide ? 4u : 3u); ++k) {
      s_nodes[used] = offset[k];
      g_nodes[used] = k == 2 ? g0 : cand.value(i, nodes[k]);
      ++used;
    }
    const double peak = polynomial_peak(std::span(s_nodes.data(), used), std::span(g_nodes.data(), used),
                                        offset[1], offset[3]);
    out.value[i] = std::max(g0, peak);
  }
  return out;
}

}  // namespace pinchlab
