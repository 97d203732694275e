#include "pinchlab/estimates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "pinchlab/error.hpp"

namespace pinchlab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();
/// Gradient terms are dropped where the denominator mu - lambda_i falls below this fraction of H.
constexpr double kDegenerateGap = 1e-8;

void require_contacts(const FlowTrace& trace) {
  if (trace.samples.empty()) throw Error(ErrorCode::NoSamples, "trace has no samples");
  for (const FlowSample& s : trace.samples) {
    if (!s.has_contacts) throw Error(ErrorCode::InvalidArgument, fmt::format("sample at t = {} has no contacts", s.t));
  }
}

const ContactReport& report_of(const FlowSample& s, ContactSide side) {
  return side == ContactSide::Mu ? s.mu : s.rho;
}

/// Weighted sum over the vertices of w_i * term(i), in index order.
template <class F>
double quadrature(const GeometryData& g, F&& term) {
  double sum = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) sum += g.weight[i] * term(i);
  return sum;
}

/// Nonuniform three-point derivative at the middle node.
double centred_derivative(double fm, double f0, double fp, double a, double b) {
  return -b / (a * (a + b)) * fm + (b - a) / (a * b) * f0 + a / (b * (a + b)) * fp;
}

double plus_pow(double f, double p) { return f > 0.0 ? std::pow(f, p) : 0.0; }

}  // namespace

std::string_view to_string(Provenance source) {
  switch (source) {
    case Provenance::Configured: return "configured";
    case Provenance::Extracted: return "extracted";
    case Provenance::Fitted: return "fitted";
    case Provenance::Derived: return "derived";
  }
  return "unknown";
}

void EstimateConstants::validate() const {
  auto fail = [](std::string msg) { throw Error(ErrorCode::InvalidArgument, std::move(msg)); };
  if (!(sigma > 0.0 && sigma < 0.5)) fail(fmt::format("sigma = {} outside (0, 1/2)", sigma));
  if (!(p >= 1.0)) fail(fmt::format("p = {} below 1", p));
  if (!(delta > 0.0)) fail(fmt::format("delta = {} must be positive", delta));
  if (!(Lambda.value >= 1.0)) fail(fmt::format("Lambda = {} below 1", Lambda.value));
  if (!(c0.value > 0.0)) fail(fmt::format("c0 = {} must be positive", c0.value));
  for (const auto& [name, c] : {std::pair{"K0", K0}, {"K0_rho", K0_rho}, {"K1", K1}, {"K2", K2}}) {
    if (!(c.value >= 0.0)) fail(fmt::format("{} = {} is negative", name, c.value));
  }
}

double default_epsilon(double delta, int n, double Lambda) {
  const double n4 = std::pow(static_cast<double>(n), 4);
  return delta / (4.0 * n4 * Lambda * Lambda);
}

std::string format_constants(const EstimateConstants& c) {
  std::string out;
  auto line = [&](std::string_view key, double value, std::string_view source) {
    out += fmt::format("{} = {:.17g}  # {}\n", key, value, source);
  };
  line("n", c.n, "configured");
  line("delta", c.delta, "configured");
  line("sigma", c.sigma, "configured");
  line("p", c.p, "configured");
  line("k", c.k, "configured");
  for (const auto& [key, k] : {std::pair{"epsilon", &c.epsilon}, {"K0", &c.K0}, {"K0_rho", &c.K0_rho}, {"K1", &c.K1},
                               {"K2", &c.K2}, {"Lambda", &c.Lambda}, {"C_hat", &c.C_hat}, {"c0", &c.c0},
                               {"B_hat", &c.B_hat}}) {
    line(key, k->value, to_string(k->source));
  }
  return out;
}

std::vector<double> refined_values(const FlowSample& sample, ContactSide side) {
  return refine_contacts(sample.surface, sample.geometry, report_of(sample, side)).value;
}

EstimateConstants extract_constants(const FlowTrace& trace, double delta, std::optional<double> epsilon) {
  require_contacts(trace);
  EstimateConstants c;
  c.n = trace.samples.front().geometry.n;
  c.delta = delta;
  const double nm1 = c.n - 1;

  double K0 = 0.0;
  double K0_rho = 0.0;
  double Lambda = 1.0;
  double B = -kInf;
  for (const FlowSample& s : trace.samples) {
    const GeometryData& g = s.geometry;
    const std::vector<double> mu = refined_values(s, ContactSide::Mu);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double H = g.H[i];
      const double l1 = g.lambda_min(i);
      const double m = std::min(H, 1.0);
      K0 = std::max(K0, (-nm1 * l1 - 0.5 * delta * H) / m);
      K0_rho = std::max(K0_rho, (-l1 - 0.5 * delta * H) / m);
      Lambda = std::max({Lambda, mu[i] / H, g.A2[i] / (H * H)});
      B = std::max(B, mu[i] - (1.0 + 2.0 * delta) * H);
    }
  }
  c.K0 = {K0, Provenance::Extracted};
  c.K0_rho = {K0_rho, Provenance::Extracted};
  c.Lambda = {Lambda, Provenance::Extracted};
  c.B_hat = {B, Provenance::Extracted};
  c.epsilon = epsilon ? Constant{*epsilon, Provenance::Configured}
                      : Constant{default_epsilon(delta, c.n, Lambda), Provenance::Derived};
  const double eps = c.epsilon.value;

  double K1 = 0.0;
  double K2 = 0.0;
  for (const FlowSample& s : trace.samples) {
    const GeometryData& g = s.geometry;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double H = g.H[i];
      K1 = std::max(K1, -g.lambda_min(i) - eps * H);
      K2 = std::max(K2, g.A2[i] - (1.0 + eps) * H * H);
    }
  }
  c.K1 = {K1, Provenance::Extracted};
  c.K2 = {K2, Provenance::Extracted};
  return c;
}

bool admissible(const EstimateConstants& c) {
  const double c0 = c.c0.value;
  return c.p >= 1.0 / c0 && c.sigma <= c0 / std::sqrt(c.p);
}

void check_admissible(const EstimateConstants& c) {
  if (!admissible(c)) {
    throw Error(ErrorCode::PreconditionViolated,
                fmt::format("L^p estimate needs p >= 1/c0 and sigma <= c0 p^(-1/2); got sigma = {}, p = {}, c0 = {} "
                            "(bound {:.6g})",
                            c.sigma, c.p, c.c0.value, c.c0.value / std::sqrt(c.p)));
  }
}

PinchFields pinch_fields(const GeometryData& g, std::span<const double> value, const EstimateConstants& c,
                         ContactSide side) {
  const std::size_t n = g.size();
  PinchFields out;
  const bool mu_side = side == ContactSide::Mu;
  auto& f = mu_side ? out.f : out.g;
  auto& f_plus = mu_side ? out.f_plus : out.g_plus;
  auto& f_k = mu_side ? out.f_k : out.g_k;
  auto& f_k_plus = mu_side ? out.f_k_plus : out.g_k_plus;
  f.resize(n);
  f_plus.resize(n);
  f_k.resize(n);
  f_k_plus.resize(n);
  const double K0 = mu_side ? c.K0.value : c.K0_rho.value;
  const double shift = mu_side ? 1.0 + c.delta : c.delta;
  for (std::size_t i = 0; i < n; ++i) {
    const double H = g.H[i];
    if (!(H > 0.0)) throw Error(ErrorCode::NotMeanConvex, fmt::format("H = {} at vertex {}", H, i));
    const double base = std::pow(H, c.sigma - 1.0) * (value[i] - shift * H);
    f[i] = base - K0;
    f_plus[i] = std::max(f[i], 0.0);
    f_k[i] = base - c.k;
    f_k_plus[i] = std::max(f_k[i], 0.0);
  }
  return out;
}

PinchFields pinch_fields(const GeometryData& g, const ContactReport& contact, const EstimateConstants& c,
                         ContactSide side) {
  return pinch_fields(g, std::span<const double>(contact.value), c, side);
}

// ---------------------------------------------------------------------------------------------
// Tracking points between samples

namespace {

/// Quadratic interpolation stencil into another sample.
struct Stencil {
  std::array<std::size_t, 3> index{};
  std::array<double, 3> weight{};

  double apply(std::span<const double> field) const {
    return weight[0] * field[index[0]] + weight[1] * field[index[1]] + weight[2] * field[index[2]];
  }
};

struct SampleView {
  const FlowSample* sample;
  std::vector<double> arc;
  double length;
};

SampleView view_of(const FlowSample& s) {
  std::vector<double> arc = arclength(s.surface);
  const double L = s.surface.is_curve() ? arc.back() + s.geometry.edge_length.back() : arc.back();
  return {&s, std::move(arc), L};
}

/// Lagrange weights at offset x for nodes at -a, 0, b.
Stencil lagrange(std::size_t im, std::size_t i0, std::size_t ip, double a, double b, double x) {
  Stencil st;
  st.index = {im, i0, ip};
  st.weight = {x * (x - b) / (a * (a + b)), (x + a) * (b - x) / (a * b), x * (x + a) / (b * (a + b))};
  return st;
}

/// Follows vertex v of `from` along its normal line into `to` (nearest crossing around the
/// arclength-fraction guess) and returns the quadratic stencil there.
Stencil track(const SampleView& from, std::size_t v, const SampleView& to) {
  const Surface& sf = from.sample->surface;
  const Surface& st = to.sample->surface;
  const GeometryData& gt = to.sample->geometry;
  const std::size_t nt = st.size();
  const bool curve = st.is_curve();
  if (!curve && (v == 0 || v + 1 == sf.size())) {
    const std::size_t pole = v == 0 ? 0 : nt - 1;
    Stencil s;
    s.index = {pole, pole, pole};
    s.weight = {0.0, 1.0, 0.0};
    return s;
  }

  const double target = from.arc[v] / from.length * to.length;
  const auto it = std::upper_bound(to.arc.begin(), to.arc.end(), target);
  const auto guess = static_cast<std::ptrdiff_t>(std::max<std::ptrdiff_t>(it - to.arc.begin() - 1, 0));
  const std::size_t edges = st.edge_count();
  const auto window = static_cast<std::ptrdiff_t>(std::max<std::size_t>(8, edges / 8));

  const Vec2 x = sf[v];
  const Vec2 nu = from.sample->geometry.normal[v];
  double best_s = kInf;
  double pos = target;
  for (std::ptrdiff_t d = -window; d <= window; ++d) {
    std::ptrdiff_t e = guess + d;
    if (curve) {
      e = ((e % static_cast<std::ptrdiff_t>(edges)) + static_cast<std::ptrdiff_t>(edges)) % static_cast<std::ptrdiff_t>(edges);
    } else if (e < 0 || e >= static_cast<std::ptrdiff_t>(edges)) {
      continue;
    }
    const auto ue = static_cast<std::size_t>(e);
    const Vec2 p = st[ue];
    const Vec2 q = st[(ue + 1) % nt];
    const Vec2 dq = q - p;
    const double den = cross(dq, nu);
    if (den == 0.0) continue;
    const double u = cross(x - p, nu) / den;
    if (u < -1e-12 || u > 1.0 + 1e-12) continue;
    const double s = -cross(x - p, dq) / cross(nu, dq);
    if (std::abs(s) < std::abs(best_s)) {
      best_s = s;
      pos = to.arc[ue] + std::clamp(u, 0.0, 1.0) * gt.edge_length[ue];
    }
  }

  // Nearest vertex, then its two neighbours.
  const auto jt = std::upper_bound(to.arc.begin(), to.arc.end(), pos);
  std::size_t j = static_cast<std::size_t>(std::max<std::ptrdiff_t>(jt - to.arc.begin() - 1, 0));
  const double next_arc = j + 1 < nt ? to.arc[j + 1] : to.length;
  if (pos - to.arc[j] > next_arc - pos) j = (j + 1) % nt;
  if (!curve) j = std::clamp<std::size_t>(j, 1, nt - 2);
  const std::size_t jm = curve ? (j + nt - 1) % nt : j - 1;
  const std::size_t jp = curve ? (j + 1) % nt : j + 1;
  double x_off = pos - to.arc[j];
  if (curve) {
    if (x_off > 0.5 * to.length) x_off -= to.length;
    if (x_off < -0.5 * to.length) x_off += to.length;
  }
  return lagrange(jm, j, jp, gt.edge_length[jm], gt.edge_length[j], x_off);
}

bool interior(ContactSide side, const GeometryData& g, std::size_t i, double value, std::int64_t contact) {
  if (contact < 0) return false;
  const double H = g.H[i];
  if (side == ContactSide::Mu) return value - g.lambda_max(i) >= kInteriorContactGap * H;
  return value >= kInteriorContactGap * H && value + g.lambda_min(i) >= kInteriorContactGap * H;
}

Vec3 contact_position(const FlowSample& s, ContactSide side, std::size_t i) {
  const ContactReport& r = report_of(s, side);
  return candidate_point(s.surface, s.geometry, r.azimuths, r.contact[i]).position;
}

/// Contacts of `other` stay within reach of the reference contact y.
bool contacts_near(const FlowSample& other, ContactSide side, std::span<const std::size_t> vertices, const Vec3& y,
                   double reach) {
  const ContactReport& r = report_of(other, side);
  for (std::size_t j : vertices) {
    if (r.contact[j] < 0) return false;
    if (norm(contact_position(other, side, j) - y) > reach) return false;
  }
  return true;
}

struct Prepared {
  std::vector<SampleView> views;
  std::vector<std::vector<double>> values;
};

Prepared prepare(const FlowTrace& trace, ContactSide side) {
  Prepared p;
  p.views.reserve(trace.samples.size());
  p.values.resize(trace.samples.size());
  for (const FlowSample& s : trace.samples) p.views.push_back(view_of(s));
#pragma omp parallel for schedule(dynamic)
  for (std::size_t k = 0; k < trace.samples.size(); ++k) p.values[k] = refined_values(trace.samples[k], side);
  return p;
}

ResidualReport evolution_residual(const FlowTrace& trace, ResidualOptions options, ContactSide side) {
  require_contacts(trace);
  if (options.window < 3 || options.window % 2 == 0) {
    throw Error(ErrorCode::WindowTooShort, fmt::format("window of {} samples; need an odd count >= 3", options.window));
  }
  if (trace.samples.size() < options.window) {
    throw Error(ErrorCode::WindowTooShort,
                fmt::format("{} samples cannot hold a window of {}", trace.samples.size(), options.window));
  }
  const std::size_t w = (options.window - 1) / 2;
  const Prepared prep = prepare(trace, side);
  const std::size_t count = trace.samples.size() - 2 * w;

  ResidualReport report;
  report.side = side;
  report.samples.resize(count);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t s = k + w;
    const FlowSample& cur = trace.samples[s];
    const FlowSample& prev = trace.samples[s - w];
    const FlowSample& next = trace.samples[s + w];
    const GeometryData& g = cur.geometry;
    const std::vector<double>& phi = prep.values[s];
    const ContactReport& rep = report_of(cur, side);
    const std::size_t n = g.size();
    const bool curve = cur.surface.is_curve();

    ResidualSample out;
    out.sample = s;
    out.t = cur.t;
    const double a = cur.t - prev.t;
    const double b = next.t - cur.t;
    out.window_dt = 0.5 * (a + b);
    out.h = g.h_max;
    out.eligible.assign(n, 0);
    out.residual.assign(n, kNaN);
    out.magnitude.assign(n, kNaN);
    out.value = phi;
    if (side == ContactSide::Rho) {
      out.first_order.assign(n, kNaN);
      out.omega.assign(n, kNaN);
    }

    const std::vector<double> lap = scalar_laplacian(cur.surface, g, phi);
    const std::vector<FrameGradient> grad = scalar_gradient(cur.surface, g, phi);
    const std::vector<FrameGradient> gradH = scalar_gradient(cur.surface, g, g.H);

    for (std::size_t i = 0; i < n; ++i) {
      const double H = g.H[i];
      const double v = phi[i];
      const Stencil sm = track(prep.views[s], i, prep.views[s - w]);
      const Stencil sp = track(prep.views[s], i, prep.views[s + w]);
      if (options.require_interior_contact) {
        if (!interior(side, g, i, v, rep.contact[i])) continue;
        const Vec3 y = contact_position(cur, side, i);
        const double reach = 0.2 / v + 4.0 * std::max({g.h_max, prev.geometry.h_max, next.geometry.h_max});
        std::array<std::size_t, 3> around{};
        if (curve) {
          around = {(i + n - 1) % n, i, (i + 1) % n};
        } else {
          if (i == 0 || i + 1 == n) continue;
          around = {i - 1, i, i + 1};
        }
        bool stable = contacts_near(cur, side, around, y, reach) && contacts_near(prev, side, sm.index, y, reach) &&
                      contacts_near(next, side, sp.index, y, reach);
        for (std::size_t j : around) stable = stable && interior(side, g, j, phi[j], rep.contact[j]);
        if (!stable) continue;
      }
      const double dphi = centred_derivative(sm.apply(prep.values[s - w]), v, sp.apply(prep.values[s + w]), a, b);

      double grad_sq = 0.0;
      double mixed = 0.0;
      double quad = 0.0;
      for (int slot = 0; slot < g.n; ++slot) {
        const double lambda = g.principal[i][slot];
        const double gap = side == ContactSide::Mu ? v - lambda : v + lambda;
        if (!(gap > kDegenerateGap * H)) continue;
        const double d = grad[i][slot];
        grad_sq += 2.0 / gap * d * d;
        mixed += d * gradH[i][slot] / gap;
        quad += d * d / (gap * gap);
      }
      const double reaction = g.A2[i] * v;
      out.eligible[i] = 1;
      out.residual[i] = dphi - lap[i] - reaction + grad_sq;
      out.magnitude[i] = std::abs(dphi) + std::abs(lap[i]) + std::abs(reaction) + std::abs(grad_sq);
      if (side == ContactSide::Rho) {
        out.first_order[i] = dphi + 0.5 * H * v * v - mixed - 0.5 * H * quad;
        out.omega[i] = lap[i] - grad_sq - mixed - 0.5 * H * quad;
      }
    }
    report.samples[k] = std::move(out);
  }
  return report;
}

}  // namespace

std::size_t ResidualReport::eligible_count() const {
  std::size_t c = 0;
  for (const ResidualSample& s : samples) c += static_cast<std::size_t>(std::count(s.eligible.begin(), s.eligible.end(), 1));
  return c;
}

ResidualReport mu_evolution_residual(const FlowTrace& trace, ResidualOptions options) {
  return evolution_residual(trace, options, ContactSide::Mu);
}

ResidualReport rho_pde_residual(const FlowTrace& trace, ResidualOptions options) {
  return evolution_residual(trace, options, ContactSide::Rho);
}

double ToleranceModel::operator()(double h, double dt, double scale, double magnitude) const {
  return magnitude * (c_h * h * scale + c_t * dt * scale * scale) + c_round * magnitude * 1e-10;
}

namespace {

double local_scale(const ResidualSample& rs, const GeometryData& g, std::size_t i) {
  return std::max(std::abs(rs.value[i]), g.H[i]);
}

}  // namespace

LadderLevel ladder_level(const FlowTrace& trace, const ResidualReport& report) {
  LadderLevel level;
  for (const ResidualSample& rs : report.samples) {
    const GeometryData& g = trace.samples[rs.sample].geometry;
    level.h = std::max(level.h, rs.h);
    level.dt = std::max(level.dt, rs.window_dt);
    for (std::size_t i = 0; i < rs.residual.size(); ++i) {
      if (!rs.eligible[i]) continue;
      const double sc = local_scale(rs, g, i);
      const double r = std::abs(rs.residual[i]);
      level.max_abs_residual = std::max(level.max_abs_residual, r);
      level.ratio = std::max(level.ratio, r / (rs.magnitude[i] * (rs.h * sc + rs.window_dt * sc * sc)));
    }
  }
  return level;
}

ToleranceModel fit_tolerance(std::span<const LadderLevel> ladder) {
  double c = 0.0;
  for (const LadderLevel& l : ladder) c = std::max(c, l.ratio);
  return {2.0 * c, 2.0 * c, 1.0};
}

InequalityTally tally(const FlowTrace& trace, const ResidualReport& report, const ToleranceModel& tolerance,
                      ResidualForm form) {
  InequalityTally t;
  t.worst = -kInf;
  for (const ResidualSample& rs : report.samples) {
    const GeometryData& g = trace.samples[rs.sample].geometry;
    const std::vector<double>& r = form == ResidualForm::Parabolic ? rs.residual : rs.first_order;
    if (r.empty()) continue;
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (!rs.eligible[i]) continue;
      const double tol = tolerance(rs.h, rs.window_dt, local_scale(rs, g, i), rs.magnitude[i]);
      ++t.eligible;
      if (r[i] <= tol) ++t.passed;
      t.worst = std::max(t.worst, r[i] / tol);
    }
  }
  if (t.eligible == 0) t.worst = 0.0;
  return t;
}

// ---------------------------------------------------------------------------------------------
// Weak form

std::vector<double> support_mask(const GeometryData& g, std::span<const double> mu) {
  std::vector<double> m(g.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (mu[i] - g.lambda_max(i) >= kInteriorContactGap * g.H[i]) m[i] = 1.0;
  }
  return m;
}

std::vector<double> mask_support(const GeometryData& g, std::span<const double> mu, std::span<const double> eta) {
  std::vector<double> m = support_mask(g, mu);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] *= eta[i];
  return m;
}

std::vector<double> bump(const Surface& surface, std::size_t center, double radius) {
  const std::vector<double> arc = arclength(surface);
  const std::size_t n = surface.size();
  const double L = surface.is_curve() ? arc.back() + norm(surface[0] - surface[n - 1]) : arc.back();
  std::vector<double> eta(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double s = std::abs(arc[i] - arc[center]);
    if (surface.is_curve()) s = std::min(s, L - s);
    const double q = s / radius;
    if (q < 1.0) eta[i] = (1.0 - q * q) * (1.0 - q * q);
  }
  return eta;
}

AuxTerms aux_integral_check(const Surface& surface, const GeometryData& g, std::span<const double> mu,
                            const EstimateConstants& c, std::span<const double> eta) {
  const std::size_t n = g.size();
  const std::vector<double> mask = support_mask(g, mu);
  for (std::size_t i = 0; i < n; ++i) {
    if (eta[i] < 0.0) throw Error(ErrorCode::InvalidArgument, fmt::format("eta = {} < 0 at vertex {}", eta[i], i));
    if (eta[i] > 0.0 && mask[i] == 0.0) {
      throw Error(ErrorCode::SupportViolation,
                  fmt::format("eta = {} at vertex {} where mu - lambda_n = {} < {} H", eta[i], i,
                              mu[i] - g.lambda_max(i), kInteriorContactGap));
    }
  }
  const double dim = g.n;
  const double n3 = dim * dim * dim;
  const double eps = c.epsilon.value;
  const double K1 = c.K1.value;
  const std::vector<FrameGradient> gm = scalar_gradient(surface, g, mu);
  const std::vector<FrameGradient> gH = scalar_gradient(surface, g, g.H);

  AuxTerms t;
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (eta[i] > 0.0) scale = std::max(scale, mu[i]);
  }
  t.gradient = -dirichlet_form(surface, g, eta, mu);
  double mag = std::abs(t.gradient);
  for (std::size_t i = 0; i < n; ++i) {
    if (eta[i] == 0.0) continue;
    const double m = mu[i];
    const double H = g.H[i];
    const double conv = n3 * (dim * eps * m + K1);
    const double z = 0.5 * eta[i] * (g.A2[i] * m - H * m * m + conv * m * m);
    double mixed = 0.0;
    double quad = 0.0;
    for (int slot = 0; slot < g.n; ++slot) {
      const double gap = m - g.principal[i][slot];
      if (!(gap > kDegenerateGap * H)) continue;
      mixed += gm[i][slot] * gH[i][slot] / gap;
      quad += gm[i][slot] * gm[i][slot] / (gap * gap);
    }
    const double mx = eta[i] * mixed;
    const double qd = 0.5 * eta[i] * (H + conv) * quad;
    t.zeroth += g.weight[i] * z;
    t.mixed += g.weight[i] * mx;
    t.quadratic += g.weight[i] * qd;
    mag += g.weight[i] * (std::abs(z) + std::abs(mx) + std::abs(qd));
  }
  t.slack = t.gradient + t.zeroth + t.mixed + t.quadratic;
  t.magnitude = mag;
  t.tolerance = kAuxTolerance * mag * (g.h_max * scale) * (g.h_max * scale);
  return t;
}

// ---------------------------------------------------------------------------------------------
// Integral monitors

namespace {

struct IntegralSeries {
  std::vector<double> t;
  std::vector<double> f_p;
  std::vector<double> A2;
  std::vector<double> area;
  std::vector<double> sup_f_p;
  std::size_t positive = 0;
};

IntegralSeries integral_series(const FlowTrace& trace, const EstimateConstants& c, ContactSide side) {
  const Prepared prep = prepare(trace, side);
  IntegralSeries out;
  const std::size_t m = trace.samples.size();
  out.t.resize(m);
  out.f_p.resize(m);
  out.A2.resize(m);
  out.area.resize(m);
  out.sup_f_p.resize(m);
  for (std::size_t k = 0; k < m; ++k) {
    const FlowSample& s = trace.samples[k];
    const PinchFields pf = pinch_fields(s.geometry, prep.values[k], c, side);
    const std::vector<double>& fp = side == ContactSide::Mu ? pf.f_plus : pf.g_plus;
    out.t[k] = s.t;
    out.f_p[k] = quadrature(s.geometry, [&](std::size_t i) { return plus_pow(fp[i], c.p); });
    out.A2[k] = integrate(s.geometry, s.geometry.A2);
    out.area[k] = s.geometry.total_measure();
    double sup = 0.0;
    for (double f : fp) sup = std::max(sup, plus_pow(f, c.p));
    out.sup_f_p[k] = sup;
    if (sup > 0.0) ++out.positive;
  }
  return out;
}

double series_derivative(const std::vector<double>& t, const std::vector<double>& y, std::size_t k) {
  return centred_derivative(y[k - 1], y[k], y[k + 1], t[k] - t[k - 1], t[k + 1] - t[k]);
}

}  // namespace

std::size_t LpReport::evaluated() const {
  return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const LpRow& r) { return r.evaluated; }));
}

std::size_t LpReport::passed() const {
  return static_cast<std::size_t>(
      std::count_if(rows.begin(), rows.end(), [](const LpRow& r) { return r.evaluated && r.pass; }));
}

double LpReport::pass_fraction() const {
  const std::size_t e = evaluated();
  return e == 0 ? 1.0 : static_cast<double>(passed()) / static_cast<double>(e);
}

double fit_growth_constant(const FlowTrace& training, const EstimateConstants& c) {
  require_contacts(training);
  check_admissible(c);
  const IntegralSeries s = integral_series(training, c, ContactSide::Mu);
  const double sp = c.sigma * c.p;
  const double source = sp * std::pow(c.K0.value, c.p);
  double C = 0.0;
  for (std::size_t k = 1; k + 1 < s.t.size(); ++k) {
    if (!(s.f_p[k] > 0.0)) continue;
    const double ddt = series_derivative(s.t, s.f_p, k);
    C = std::max(C, (ddt - source * s.A2[k]) / (sp * s.f_p[k]));
  }
  return C;
}

LpReport lp_monitor(const FlowTrace& trace, const EstimateConstants& c, ContactSide side) {
  require_contacts(trace);
  check_admissible(c);
  const IntegralSeries s = integral_series(trace, c, side);
  const bool mu_side = side == ContactSide::Mu;
  const double sp = c.sigma * c.p;
  const double K0 = mu_side ? c.K0.value : c.K0_rho.value;
  const double source = sp * std::pow(K0, c.p);

  LpReport report;
  report.side = side;
  report.C = mu_side ? c.C_hat.value : 0.0;
  report.positive_samples = s.positive;
  for (std::size_t k = 0; k < s.t.size(); ++k) {
    LpRow row;
    row.sample = k;
    row.t = s.t[k];
    row.integral = s.f_p[k];
    row.integral_A2 = s.A2[k];
    if (k > 0 && k + 1 < s.t.size()) {
      row.evaluated = true;
      row.ddt = series_derivative(s.t, s.f_p, k);
      row.bound = report.C * sp * s.f_p[k] + source * s.A2[k];
      row.margin = row.bound - row.ddt;
      row.pass = row.margin >= -kIntegralRelTol * std::max({std::abs(row.ddt), std::abs(row.bound), 1e-300});
    } else {
      row.ddt = kNaN;
      row.bound = kNaN;
      row.margin = kNaN;
    }
    report.rows.push_back(row);
  }
  return report;
}

std::vector<GronwallRow> gronwall_check(const FlowTrace& trace, const EstimateConstants& c, ContactSide side) {
  require_contacts(trace);
  check_admissible(c);
  const IntegralSeries s = integral_series(trace, c, side);
  const bool mu_side = side == ContactSide::Mu;
  const double C = mu_side ? c.C_hat.value : 0.0;
  const double K0 = mu_side ? c.K0.value : c.K0_rho.value;
  const double density = c.sigma * c.p * std::pow(K0, c.p) * c.Lambda.value;
  const double t0 = s.t.front();
  const double initial = s.f_p.front() + density * s.area.front();
  const double initial_sup = std::pow(s.area.front(), 1.0 / c.p) * std::pow(s.sup_f_p.front() + density, 1.0 / c.p);

  std::vector<GronwallRow> rows;
  for (std::size_t k = 0; k < s.t.size(); ++k) {
    GronwallRow r;
    const double tau = s.t[k] - t0;
    r.t = s.t[k];
    r.lhs_integral = s.f_p[k] + density * s.area[k];
    r.rhs_integral = std::exp(C * c.sigma * c.p * tau) * initial;
    r.lhs_norm = std::pow(s.f_p[k], 1.0 / c.p);
    r.rhs_norm = std::exp(C * c.sigma * tau) * initial_sup;
    r.pass_integral = r.lhs_integral <= r.rhs_integral * (1.0 + kIntegralRelTol);
    r.pass_norm = r.lhs_norm <= r.rhs_norm * (1.0 + kIntegralRelTol);
    rows.push_back(r);
  }
  return rows;
}

std::vector<double> default_levels(const FlowTrace& trace, const EstimateConstants& c, ContactSide side) {
  const double K0 = side == ContactSide::Mu ? c.K0.value : c.K0_rho.value;
  if (K0 > 0.0) return {K0, 2.0 * K0, 4.0 * K0, 8.0 * K0};
  const double shift = side == ContactSide::Mu ? 1.0 + c.delta : c.delta;
  double sup = -kInf;
  for (const FlowSample& s : trace.samples) {
    const std::vector<double> v = refined_values(s, side);
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double H = s.geometry.H[i];
      sup = std::max(sup, std::pow(H, c.sigma - 1.0) * (v[i] - shift * H));
    }
  }
  if (!(sup > 0.0)) return {0.0};
  return {0.0, sup / 8.0, sup / 4.0, sup / 2.0};
}

LevelsetReport levelset_monitor(const FlowTrace& trace, const EstimateConstants& c, ContactSide side,
                                std::vector<double> levels) {
  require_contacts(trace);
  check_admissible(c);
  const bool mu_side = side == ContactSide::Mu;
  const double K0 = mu_side ? c.K0.value : c.K0_rho.value;
  if (levels.empty()) levels = default_levels(trace, c, side);
  std::sort(levels.begin(), levels.end());
  if (levels.front() < K0) {
    throw Error(ErrorCode::PreconditionViolated, fmt::format("level {} below K0 = {}", levels.front(), K0));
  }
  const Prepared prep = prepare(trace, side);
  const std::size_t m = trace.samples.size();
  const double shift = mu_side ? 1.0 + c.delta : c.delta;
  const double bshift = mu_side ? 1.0 + 2.0 * c.delta : 2.0 * c.delta;

  LevelsetReport report;
  report.side = side;
  report.k_star = -kInf;
  report.B_hat = -kInf;
  for (const FlowSample& s : trace.samples) report.times.push_back(s.t);

  // base[k][i] = H^{sigma-1}(value - shift H)
  std::vector<std::vector<double>> base(m);
  for (std::size_t k = 0; k < m; ++k) {
    const GeometryData& g = trace.samples[k].geometry;
    base[k].resize(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double H = g.H[i];
      base[k][i] = std::pow(H, c.sigma - 1.0) * (prep.values[k][i] - shift * H);
      report.k_star = std::max(report.k_star, base[k][i]);
      report.B_hat = std::max(report.B_hat, prep.values[k][i] - bshift * H);
    }
  }

  for (double level : levels) {
    LevelRow row;
    row.k = level;
    row.measure.resize(m);
    row.integral.resize(m);
    row.ddt.assign(m, kNaN);
    row.bound.assign(m, kNaN);
    row.pass.assign(m, 1);
    std::vector<double> grad_term(m);
    std::vector<double> source_term(m);
    for (std::size_t k = 0; k < m; ++k) {
      const FlowSample& s = trace.samples[k];
      const GeometryData& g = s.geometry;
      std::vector<double> f(g.size());
      for (std::size_t i = 0; i < g.size(); ++i) f[i] = base[k][i] - level;
      const std::vector<double> grad = gradient_norm(scalar_gradient(s.surface, g, f));
      row.measure[k] = quadrature(g, [&](std::size_t i) { return f[i] > 0.0 ? 1.0 : 0.0; });
      row.integral[k] = quadrature(g, [&](std::size_t i) { return plus_pow(f[i], c.p); });
      grad_term[k] = quadrature(g, [&](std::size_t i) { return plus_pow(f[i], c.p - 2.0) * grad[i] * grad[i]; });
      source_term[k] = quadrature(g, [&](std::size_t i) { return g.A2[i] * plus_pow(f[i], c.p - 1.0) * (f[i] + level); });
    }
    for (std::size_t k = 1; k + 1 < m; ++k) {
      row.ddt[k] = series_derivative(report.times, row.integral, k);
      row.bound[k] = -0.5 * c.p * (c.p - 1.0) * grad_term[k] + c.sigma * c.p * source_term[k];
      const double scale = std::max({std::abs(row.ddt[k]), std::abs(row.bound[k]), 1e-300});
      row.pass[k] = row.ddt[k] <= row.bound[k] + kIntegralRelTol * scale;
    }
    report.levels.push_back(std::move(row));
  }

  for (std::size_t j = 1; j < report.levels.size(); ++j) {
    for (std::size_t k = 0; k < m; ++k) {
      if (report.levels[j].measure[k] > report.levels[j - 1].measure[k] ||
          report.levels[j].integral[k] > report.levels[j - 1].integral[k]) {
        report.nested = false;
      }
    }
  }
  return report;
}

double lp_consistency_gap(const GeometryData& g, std::span<const double> f_plus, double p) {
  double sup = 0.0;
  for (double f : f_plus) sup = std::max(sup, plus_pow(f, p));
  const double i2p = quadrature(g, [&](std::size_t i) { return plus_pow(f_plus[i], 2.0 * p); });
  const double ip = quadrature(g, [&](std::size_t i) { return plus_pow(f_plus[i], p); });
  return std::pow(i2p, 0.5 / p) - std::pow(ip * sup, 0.5 / p);
}

// ---------------------------------------------------------------------------------------------
// Theorem witnesses

std::string_view to_string(Theorem theorem) {
  return theorem == Theorem::Inscribed ? "inscribed" : "outer";
}

namespace {

struct Pair {
  double H;
  double ratio;
  double value;
};

std::vector<TrendPoint> trend(std::vector<Pair> pairs) {
  // Sort by H descending; s(tau) is a running max of the ratio.
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) { return a.H > b.H; });
  std::vector<double> running(pairs.size());
  double best = -kInf;
  for (std::size_t i = 0; i < pairs.size(); ++i) running[i] = best = std::max(best, pairs[i].ratio);
  std::vector<TrendPoint> out;
  constexpr int kPoints = 20;
  for (int q = 0; q <= kPoints; ++q) {
    // Quantile q/20 of H: index in the descending order.
    const double pos = (1.0 - static_cast<double>(q) / kPoints) * static_cast<double>(pairs.size() - 1);
    const auto idx = static_cast<std::size_t>(std::floor(pos));
    const double tau = pairs[idx].H;
    // Include every pair with H >= tau (ties extend past idx).
    std::size_t last = idx;
    while (last + 1 < pairs.size() && pairs[last + 1].H >= tau) ++last;
    out.push_back({tau, running[last]});
  }
  return out;
}

}  // namespace

WitnessReport theorem_witness(const FlowTrace& trace, std::span<const double> deltas) {
  require_contacts(trace);
  std::vector<Pair> mu_pairs;
  std::vector<Pair> rho_pairs;
  for (const FlowSample& s : trace.samples) {
    const std::vector<double> mu = refined_values(s, ContactSide::Mu);
    const std::vector<double> rho = refined_values(s, ContactSide::Rho);
    for (std::size_t i = 0; i < s.geometry.size(); ++i) {
      const double H = s.geometry.H[i];
      mu_pairs.push_back({H, mu[i] / H, mu[i]});
      rho_pairs.push_back({H, rho[i] / H, rho[i]});
    }
  }
  double H_top = 0.0;
  for (const Pair& p : mu_pairs) H_top = std::max(H_top, p.H);

  WitnessReport report;
  for (double delta : deltas) {
    for (Theorem th : {Theorem::Inscribed, Theorem::Outer}) {
      const bool inscribed = th == Theorem::Inscribed;
      const std::vector<Pair>& pairs = inscribed ? mu_pairs : rho_pairs;
      const double bound = inscribed ? 1.0 + delta : delta;
      const double bshift = inscribed ? 1.0 + 2.0 * delta : 2.0 * delta;
      WitnessRow row;
      row.delta = delta;
      row.theorem = th;
      row.B_hat = -kInf;
      for (const Pair& p : pairs) {
        if (p.value > bound * p.H) row.C_hat = std::max(row.C_hat, p.H);
        row.B_hat = std::max(row.B_hat, p.value - bshift * p.H);
      }
      if (row.C_hat == H_top && row.C_hat > 0.0) row.C_hat = kInf;
      report.rows.push_back(row);
    }
  }
  report.s_mu = trend(std::move(mu_pairs));
  report.s_rho = trend(std::move(rho_pairs));
  return report;
}

double top_decile(std::span<const TrendPoint> trend) {
  // Points sit at quantiles 0, 0.05, ..., 1; index 18 is the 90% quantile.
  return trend[18].s;
}

bool nonincreasing(std::span<const TrendPoint> trend) {
  for (std::size_t i = 1; i < trend.size(); ++i) {
    if (trend[i].tau >= trend[i - 1].tau && trend[i].s > trend[i - 1].s) return false;
  }
  return true;
}

}  // namespace pinchlab
