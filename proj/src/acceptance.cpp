#include "pinchlab/acceptance.hpp"

#include <fmt/format.h>
#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>

#include "pinchlab/app.hpp"
#include "pinchlab/error.hpp"
#include "pinchlab/estimates.hpp"
#include "pinchlab/flow.hpp"
#include "pinchlab/inradius.hpp"
#include "pinchlab/scenarios.hpp"

namespace pinchlab {

namespace {

using fmt::format;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) { return std::chrono::duration<double>(Clock::now() - start).count(); }

constexpr const char* kTitles[] = {"exact-solution fidelity",  "mu oracle identities",   "kernel equivalence",
                                   "convexity clamp",          "mu evolution inequality", "weak Laplacian inequality",
                                   "L^p machinery",            "rho machinery",           "theorem trend checks",
                                   "suite runtime and reproducibility"};

CriterionResult make_result(int id) {
  CriterionResult r;
  r.id = id;
  r.title = kTitles[id - 1];
  return r;
}

// Parameters of the dumbbell monitors.
constexpr double kDelta = 0.1;
constexpr double kSigma = 0.02;
constexpr double kP = 10.0;
constexpr double kDumbbellStopH = 20.0;
constexpr double kDumbbellInterval = 0.001;

// Criterion tolerances.
constexpr double kCircleRadiusTol = 1e-3;
constexpr double kSphereRadiusTol = 5e-3;
constexpr double kExactRunSeconds = 60.0;
constexpr double kCircleMuTol = 1e-12;
constexpr double kSphereMuTol = 1e-2;
constexpr double kEllipseMuTol = 1e-2;
constexpr double kReflectionTol = 2e-2;
constexpr double kKernelTol = 1e-12;
constexpr double kRequiredSpeedup = 2.0;
constexpr double kNeckTol = 1e-2;
constexpr double kBhatStability = 0.15;
constexpr double kTopDecileMu = 1.3;
constexpr double kTopDecileRho = 0.3;

class Context {
 public:
  explicit Context(Mutation mutation) : mutation_(mutation) {}

  Mutation mutation() const { return mutation_; }

  /// mu_fast, with the injected defect when requested.
  ContactReport mu(const Surface& s, const GeometryData& g) const {
    ContactReport r = mu_fast(s, g);
    if (mutation_ == Mutation::MuSign) {
      for (double& v : r.value) v = -v;
    }
    return r;
  }

  const FlowTrace& dumbbell(std::size_t n) {
    auto it = dumbbells_.find(n);
    if (it == dumbbells_.end()) {
      it = dumbbells_
               .emplace(n, run(generate({.kind = ScenarioKind::Dumbbell, .resolution = n}),
                               {.stop_H_max = kDumbbellStopH, .stop_time = 1.0, .sample_interval = kDumbbellInterval}))
               .first;
    }
    return it->second;
  }

  const FlowTrace& ellipse() {
    if (!ellipse_) ellipse_ = run(generate({.kind = ScenarioKind::Ellipse}), {.stop_time = 0.5, .sample_interval = 0.01});
    return *ellipse_;
  }

 private:
  Mutation mutation_;
  std::map<std::size_t, FlowTrace> dumbbells_;
  std::optional<FlowTrace> ellipse_;
};

EstimateConstants monitor_constants(const FlowTrace& trace) {
  EstimateConstants c = extract_constants(trace, kDelta);
  c.sigma = kSigma;
  c.p = kP;
  return c;
}

double relative_change(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

std::size_t highest_vertex(const Surface& s) {
  std::size_t at = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i].y > s[at].y) at = i;
  }
  return at;
}

std::size_t lowest_vertex(const Surface& s) {
  std::size_t at = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i].y < s[at].y) at = i;
  }
  return at;
}

double max_relative_radius_error(const FlowTrace& trace, int n) {
  double err = 0.0;
  for (const FlowSample& s : trace.samples) {
    const double exact = exact_sphere_radius(1.0, n, s.t);
    for (const Vec2& p : s.surface.points()) err = std::max(err, std::abs(norm(p) / exact - 1.0));
  }
  return err;
}

CriterionResult exact_solutions(Context& ctx) {
  CriterionResult r = make_result(1);
  const double dt_scale = ctx.mutation() == Mutation::Cfl ? 2.0 : 1.0;
  Clock::time_point start = Clock::now();
  const FlowTrace circle = run(generate({.kind = ScenarioKind::Circle, .resolution = 512}),
                               {.stop_time = 0.455, .sample_interval = 0.05, .compute_contacts = false, .dt_scale = dt_scale});
  const double circle_seconds = seconds_since(start);
  start = Clock::now();
  const FlowTrace sphere = run(generate({.kind = ScenarioKind::Sphere}),
                               {.stop_time = 0.2275, .sample_interval = 0.025, .compute_contacts = false, .dt_scale = dt_scale});
  const double sphere_seconds = seconds_since(start);
  const double ec = max_relative_radius_error(circle, 1);
  const double es = max_relative_radius_error(sphere, 2);
  const bool fast = circle_seconds <= kExactRunSeconds && sphere_seconds <= kExactRunSeconds;
  r.pass = ec <= kCircleRadiusTol && es <= kSphereRadiusTol && fast;
  r.detail = format("circle N=512 to R={:.3g}: max relative radius error {:.2e} (limit {:.0e}); sphere N={} to R={:.3g}: {:.2e} "
                    "(limit {:.0e}); {}",
                    exact_sphere_radius(1.0, 1, circle.samples.back().t), ec, kCircleRadiusTol, sphere.samples[0].surface.size(),
                    exact_sphere_radius(1.0, 2, sphere.samples.back().t), es, kSphereRadiusTol,
                    fast ? "each run within 60 s" : "a run exceeded 60 s");
  r.timing = format("circle {:.1f} s, sphere {:.1f} s", circle_seconds, sphere_seconds);
  return r;
}

CriterionResult mu_oracles(Context& ctx) {
  CriterionResult r = make_result(2);
  const Surface circle = generate({.kind = ScenarioKind::Circle});
  const ContactReport mc = ctx.mu(circle, build_geometry(circle));
  double circle_err = 0.0;
  for (double v : mc.value) circle_err = std::max(circle_err, std::abs(v * 1.0 - 1.0));

  const Surface sphere = generate({.kind = ScenarioKind::Sphere});
  const GeometryData gs = build_geometry(sphere);
  const ContactReport ms = ctx.mu(sphere, gs);
  double sphere_err = 0.0;
  for (std::size_t i = 0; i < ms.size(); ++i) sphere_err = std::max(sphere_err, std::abs(ms.value[i] / gs.H[i] - 0.5));

  const Surface ellipse = generate({.kind = ScenarioKind::Ellipse});
  const GeometryData ge = build_geometry(ellipse);
  ContactReport me = ctx.mu(ellipse, ge);
  const std::size_t top = highest_vertex(ellipse);
  const std::size_t bottom = lowest_vertex(ellipse);
  const double defect = reflection_check(ellipse, ge, me)[top];
  const bool antipodal = me.contact[top] == static_cast<std::int64_t>(bottom);

  r.pass = circle_err <= kCircleMuTol && sphere_err <= kSphereMuTol && std::abs(me.value[top] - 1.0) <= kEllipseMuTol &&
           antipodal && defect <= kReflectionTol;
  r.detail = format("circle N={}: max |mu R - 1| = {:.2e} (limit {:.0e}); sphere N={}: max |mu/H - 1/2| = {:.2e} (limit {:.0e}); "
                    "ellipse(2,1) N={}: mu at the minor-axis vertex = {:.6f} (1 +- {:.0e}), contact {} the antipodal vertex, "
                    "reflection defect {:.2e} (limit {:.0e})",
                    circle.size(), circle_err, kCircleMuTol, sphere.size(), sphere_err, kSphereMuTol, ellipse.size(),
                    me.value[top], kEllipseMuTol, antipodal ? "at" : "not at", defect, kReflectionTol);
  return r;
}

struct KernelCase {
  std::string name;
  Surface surface;
};

std::vector<KernelCase> kernel_cases() {
  std::vector<KernelCase> cases;
  const std::size_t sizes[] = {256, 512, 1024, 2048};
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const std::size_t n = sizes[seed % 4];
    cases.push_back({format("perturbed circle seed {} N={}", seed, n),
                     generate({.kind = ScenarioKind::PerturbedCircle, .resolution = n, .seed = seed})});
  }
  for (const auto& [a, n] : {std::pair{1.5, std::size_t{512}}, {2.0, 1024}, {3.0, 2048}}) {
    cases.push_back({format("ellipse({},1) N={}", a, n),
                     generate({.kind = ScenarioKind::Ellipse, .resolution = n, .semi_major = a, .semi_minor = 1.0})});
  }
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    cases.push_back({format("perturbed sphere seed {}", seed), generate({.kind = ScenarioKind::PerturbedSphere, .seed = seed})});
  }
  cases.push_back({"sphere", generate({.kind = ScenarioKind::Sphere})});
  for (const std::size_t n : {200, 400, 800}) {
    cases.push_back({format("dumbbell N={}", n), generate({.kind = ScenarioKind::Dumbbell, .resolution = n})});
  }
  return cases;
}

CriterionResult kernel_equivalence(Context& ctx) {
  CriterionResult r = make_result(3);
  std::size_t agree = 0, rho_agree = 0;
  double worst = 0.0;
  std::string mismatches;
  const std::vector<KernelCase> cases = kernel_cases();
  for (const KernelCase& c : cases) {
    const GeometryData g = build_geometry(c.surface);
    const ContactReport brute = mu_brute(c.surface, g);
    const ContactReport fast = ctx.mu(c.surface, g);
    double diff = 0.0;
    for (std::size_t i = 0; i < brute.size(); ++i) diff = std::max(diff, std::abs(brute.value[i] - fast.value[i]));
    worst = std::max(worst, diff);
    if (diff <= kKernelTol && brute.contact == fast.contact) {
      ++agree;
    } else if (mismatches.size() < 200) {
      mismatches += format("; mismatch on {}", c.name);
    }
    const ContactReport rb = rho_brute(c.surface, g);
    const ContactReport rf = rho(c.surface, g);
    rho_agree += rb.value == rf.value && rb.contact == rf.contact;
  }

  const Surface big = generate({.kind = ScenarioKind::Ellipse, .resolution = 8192});
  const GeometryData gb = build_geometry(big);
  Clock::time_point start = Clock::now();
  const ContactReport slow = mu_brute(big, gb);
  const double brute_seconds = seconds_since(start);
  double fast_seconds = 1e300;
  for (int k = 0; k < 3; ++k) {
    start = Clock::now();
    const ContactReport fast = ctx.mu(big, gb);
    fast_seconds = std::min(fast_seconds, seconds_since(start));
  }
  const double speedup = brute_seconds / fast_seconds;
  const bool quick = speedup >= kRequiredSpeedup;

  r.pass = agree == cases.size() && quick;
  r.detail = format("mu_fast matches mu_brute (values within {:.0e}, identical contact indices) on {}/{} shapes, N <= 2048, "
                    "worst |difference| {:.2e}{}; pruned rho matches rho_brute on {}/{}; mu_fast {} at N=8192",
                    kKernelTol, agree, cases.size(), worst, mismatches, rho_agree, cases.size(),
                    quick ? "at least 2x faster than mu_brute" : "less than 2x faster than mu_brute");
  r.timing = format("N=8192: brute {:.3f} s, fast {:.3f} s, speedup {:.1f}x on {} thread(s)", brute_seconds, fast_seconds,
                    speedup, omp_get_max_threads());
  return r;
}

CriterionResult convexity_clamp(Context& ctx) {
  CriterionResult r = make_result(4);
  std::size_t convex_nonzero = 0, convex_vertices = 0;
  for (const ScenarioKind kind : {ScenarioKind::Circle, ScenarioKind::Ellipse, ScenarioKind::PerturbedCircle,
                                  ScenarioKind::Sphere, ScenarioKind::PerturbedSphere}) {
    const Surface s = generate({.kind = kind});
    const ContactReport report = rho(s, build_geometry(s));
    convex_vertices += report.size();
    convex_nonzero += static_cast<std::size_t>(std::count_if(report.value.begin(), report.value.end(), [](double v) { return v != 0.0; }));
  }
  for (const FlowSample& s : ctx.ellipse().samples) {
    convex_vertices += s.rho.size();
    convex_nonzero += static_cast<std::size_t>(std::count_if(s.rho.value.begin(), s.rho.value.end(), [](double v) { return v != 0.0; }));
  }

  std::size_t neck = 0, neck_fail = 0;
  double worst = -1e300;
  for (const FlowSample& s : ctx.dumbbell(800).samples) {
    const GeometryData& g = s.geometry;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double l1 = g.lambda_min(i);
      if (l1 >= 0.0) continue;
      ++neck;
      const double shortfall = (-l1 - kNeckTol * g.H[i] - s.rho.value[i]) / g.H[i];
      worst = std::max(worst, shortfall);
      if (!(s.rho.value[i] > 0.0) || shortfall > 0.0) ++neck_fail;
    }
  }
  r.pass = convex_nonzero == 0 && neck > 0 && neck_fail == 0;
  r.detail = format("rho != 0 at {} of {} vertices of convex shapes (five scenarios plus the ellipse flow); dumbbell N=800: {} "
                    "neck (vertex, sample) pairs with lambda_1 < 0, {} with rho <= 0 or rho < -lambda_1 - {:.0e} H "
                    "(largest (-lambda_1 - rho)/H - {:.0e} = {:.3g})",
                    convex_nonzero, convex_vertices, neck, neck_fail, kNeckTol, kNeckTol, worst);
  return r;
}

CriterionResult mu_inequality(Context& ctx) {
  CriterionResult r = make_result(5);
  std::vector<LadderLevel> ladder;
  for (const auto& [n, dt] : {std::pair<std::size_t, double>{51, 0.01}, {101, 0.005}, {201, 0.0025}}) {
    const FlowTrace tr = run(generate({.kind = ScenarioKind::Sphere, .resolution = n}), {.stop_time = 0.2, .sample_interval = dt});
    ladder.push_back(ladder_level(tr, mu_evolution_residual(tr, {.require_interior_contact = false})));
  }
  const ToleranceModel tol = fit_tolerance(ladder);
  bool shrinking = true, bounded = true;
  for (std::size_t l = 0; l < ladder.size(); ++l) {
    if (l > 0) shrinking = shrinking && ladder[l].max_abs_residual < ladder[l - 1].max_abs_residual;
    bounded = bounded && ladder[l].ratio <= tol.c_h;
  }

  const InequalityTally ell = tally(ctx.ellipse(), mu_evolution_residual(ctx.ellipse()), tol);
  const FlowTrace wobbly = run(generate({.kind = ScenarioKind::PerturbedCircle, .seed = 3}), {.stop_time = 0.3, .sample_interval = 0.01});
  const InequalityTally wob = tally(wobbly, mu_evolution_residual(wobbly), tol);

  r.pass = shrinking && bounded && tol.c_h <= kResidualTolerance.c_h && ell.eligible > 0 && wob.eligible > 0 &&
           ell.fraction() >= kRequiredPassFraction && wob.fraction() >= kRequiredPassFraction;
  r.detail = format("shrinking sphere ladder N=51/101/201: max |residual| {:.3g} > {:.3g} > {:.3g} ({}), fitted c = {:.4g} "
                    "(pinned {:.4g}); ellipse: {}/{} = {:.1f}% of eligible pairs within tol; perturbed circle: {}/{} = {:.1f}% "
                    "(required {:.0f}%)",
                    ladder[0].max_abs_residual, ladder[1].max_abs_residual, ladder[2].max_abs_residual,
                    shrinking ? "tends to 0" : "not decreasing", tol.c_h, kResidualTolerance.c_h, ell.passed, ell.eligible,
                    100 * ell.fraction(), wob.passed, wob.eligible, 100 * wob.fraction(), 100 * kRequiredPassFraction);
  return r;
}

CriterionResult weak_inequality(Context& ctx) {
  CriterionResult r = make_result(6);
  // Ellipse: bumps around the minor-axis vertex.
  const double radii[] = {0.5, 1.0, 1.5};
  std::vector<std::vector<double>> tol_by_level;
  std::size_t bump_checks = 0, bump_fail = 0;
  double min_slack = 1e300;
  for (const std::size_t n : {256, 512, 1024}) {
    const FlowTrace tr = run(generate({.kind = ScenarioKind::Ellipse, .resolution = n}), {.stop_time = 0.2, .sample_interval = 0.1});
    const EstimateConstants c = extract_constants(tr, kDelta);
    std::vector<double> tols;
    for (const FlowSample& s : tr.samples) {
      const std::vector<double> mu = refined_values(s, ContactSide::Mu);
      for (const double radius : radii) {
        const std::vector<double> eta = mask_support(s.geometry, mu, bump(s.surface, highest_vertex(s.surface), radius));
        const AuxTerms t = aux_integral_check(s.surface, s.geometry, mu, c, eta);
        ++bump_checks;
        bump_fail += !(t.slack >= -t.tolerance);
        min_slack = std::min(min_slack, t.slack);
        tols.push_back(t.tolerance);
      }
    }
    tol_by_level.push_back(tols);
  }
  auto shrink_ok = [](const std::vector<std::vector<double>>& levels, double& worst_ratio) {
    bool ok = true;
    worst_ratio = 0.0;
    for (std::size_t l = 1; l < levels.size(); ++l) {
      const std::size_t m = std::min(levels[l].size(), levels[l - 1].size());
      for (std::size_t k = 0; k < m; ++k) {
        ok = ok && levels[l][k] <= 0.5 * levels[l - 1][k];
        if (levels[l - 1][k] > 0.0) worst_ratio = std::max(worst_ratio, levels[l][k] / levels[l - 1][k]);
      }
    }
    return ok;
  };
  double bump_ratio = 0.0;
  const bool bump_shrinks = shrink_ok(tol_by_level, bump_ratio);

  // Dumbbell: eta = f_+^p / H.
  std::vector<std::vector<double>> db_tols;
  std::size_t db_checks = 0, db_fail = 0, db_nonzero = 0;
  for (const std::size_t n : {400, 800, 1600}) {
    const FlowTrace& tr = ctx.dumbbell(n);
    const EstimateConstants c = monitor_constants(tr);
    std::vector<double> tols;
    for (const FlowSample& s : tr.samples) {
      const std::vector<double> mu = refined_values(s, ContactSide::Mu);
      const PinchFields pf = pinch_fields(s.geometry, mu, c, ContactSide::Mu);
      std::vector<double> eta(mu.size());
      for (std::size_t i = 0; i < eta.size(); ++i) eta[i] = std::pow(pf.f_plus[i], kP) / s.geometry.H[i];
      eta = mask_support(s.geometry, mu, eta);
      db_nonzero += std::any_of(eta.begin(), eta.end(), [](double e) { return e > 0.0; });
      const AuxTerms t = aux_integral_check(s.surface, s.geometry, mu, c, eta);
      ++db_checks;
      db_fail += !(t.slack >= -t.tolerance);
      tols.push_back(t.tolerance);
    }
    db_tols.push_back(tols);
  }
  double db_ratio = 0.0;
  const bool db_shrinks = shrink_ok(db_tols, db_ratio);

  r.pass = bump_fail == 0 && bump_shrinks && db_fail == 0 && db_shrinks;
  r.detail = format("ellipse bumps (r = 0.5, 1, 1.5; N = 256/512/1024; 3 samples): {}/{} with slack >= -tol, smallest slack "
                    "{:.3g}, tol shrinks by a factor >= {:.2f} per level; dumbbell eta = f_+^p/H (N = 400/800/1600): {}/{} "
                    "samples with slack >= -tol, eta nonzero at {} samples{}",
                    bump_checks - bump_fail, bump_checks, min_slack, bump_ratio > 0.0 ? 1.0 / bump_ratio : 0.0,
                    db_checks - db_fail, db_checks, db_nonzero, db_nonzero == 0 ? " (vacuous: f_+ = 0 under the extracted K0)" : "");
  return r;
}

CriterionResult lp_machinery(Context& ctx) {
  CriterionResult r = make_result(7);
  std::size_t convex_nonzero = 0, convex_rows = 0;
  const FlowTrace circle = run(generate({.kind = ScenarioKind::Circle}), {.stop_time = 0.3, .sample_interval = 0.05});
  const FlowTrace sphere = run(generate({.kind = ScenarioKind::Sphere}), {.stop_time = 0.2, .sample_interval = 0.025});
  bool convex_pass = true;
  for (const FlowTrace* tr : {&circle, &sphere}) {
    const LpReport lp = lp_monitor(*tr, monitor_constants(*tr), ContactSide::Mu);
    for (const LpRow& row : lp.rows) {
      ++convex_rows;
      convex_nonzero += row.integral != 0.0;
    }
    convex_pass = convex_pass && lp.passed() == lp.evaluated();
  }

  const FlowTrace& train = ctx.dumbbell(400);
  const FlowTrace& eval = ctx.dumbbell(800);
  EstimateConstants c = monitor_constants(eval);
  c.C_hat = {fit_growth_constant(train, monitor_constants(train)), Provenance::Fitted};
  const LpReport lp = lp_monitor(eval, c, ContactSide::Mu);
  const std::vector<GronwallRow> gr = gronwall_check(eval, c, ContactSide::Mu);
  std::size_t gi = 0, gn = 0;
  for (const GronwallRow& row : gr) {
    gi += row.pass_integral;
    gn += row.pass_norm;
  }
  const double fi = static_cast<double>(gi) / static_cast<double>(gr.size());
  const double fn = static_cast<double>(gn) / static_cast<double>(gr.size());
  const LevelsetReport lv_mu = levelset_monitor(eval, c, ContactSide::Mu);
  const LevelsetReport lv_rho = levelset_monitor(eval, c, ContactSide::Rho);
  const LevelsetReport lv_coarse = levelset_monitor(train, monitor_constants(train), ContactSide::Mu);
  const double b_change = relative_change(lv_coarse.B_hat, lv_mu.B_hat);

  // Same machinery where the plus part does not vanish.
  const FlowTrace ell_train = run(generate({.kind = ScenarioKind::Ellipse, .resolution = 256}), {.stop_time = 0.5, .sample_interval = 0.01});
  EstimateConstants ce = monitor_constants(ctx.ellipse());
  ce.C_hat = {fit_growth_constant(ell_train, monitor_constants(ell_train)), Provenance::Fitted};
  const LpReport ell = lp_monitor(ctx.ellipse(), ce, ContactSide::Mu);

  r.pass = convex_nonzero == 0 && convex_pass && lp.pass_fraction() >= kRequiredPassFraction && fi >= kRequiredPassFraction &&
           fn >= kRequiredPassFraction && lv_mu.nested && lv_rho.nested && b_change <= kBhatStability;
  r.detail = format("circle and sphere: integral of f_+^p nonzero at {} of {} samples; dumbbell (delta {}, sigma {}, p {}, C "
                    "fitted on N=400 = {:.4g}, evaluated on N=800): L^p inequality {}/{} samples, f_+ positive at {} samples; "
                    "integrated bounds {}/{} and {}/{}; level sets nested at every sample: {}; B = {:.4g} (N=400) vs {:.4g} "
                    "(N=800), change {:.1f}% (limit {:.0f}%); ellipse, nonvacuous: f_+ positive at {} samples, L^p inequality "
                    "{}/{} with C = {:.4g}",
                    convex_nonzero, convex_rows, kDelta, kSigma, kP, c.C_hat.value, lp.passed(), lp.evaluated(),
                    lp.positive_samples, gi, gr.size(), gn, gr.size(), lv_mu.nested && lv_rho.nested ? "yes" : "no",
                    lv_coarse.B_hat, lv_mu.B_hat, 100 * b_change, 100 * kBhatStability, ell.positive_samples, ell.passed(),
                    ell.evaluated(), ce.C_hat.value);
  return r;
}

CriterionResult rho_machinery(Context& ctx) {
  CriterionResult r = make_result(8);
  const FlowTrace& tr = ctx.dumbbell(800);
  const ResidualReport res = rho_pde_residual(tr);
  const InequalityTally par = tally(tr, res, kResidualTolerance, ResidualForm::Parabolic);
  const InequalityTally first = tally(tr, res, kResidualTolerance, ResidualForm::FirstOrder);
  const LpReport lp = lp_monitor(tr, monitor_constants(tr), ContactSide::Rho);
  r.pass = par.eligible > 0 && par.fraction() >= kRequiredPassFraction && first.fraction() >= kRequiredPassFraction &&
           lp.pass_fraction() >= kRequiredPassFraction;
  r.detail = format("dumbbell N=800: parabolic form {}/{} = {:.1f}% of eligible pairs within tol (worst residual/tol {:.3g}), "
                    "first-order form {}/{} = {:.1f}% (worst {:.3g}); g-side L^p inequality {}/{} samples, g_+ positive at {} "
                    "samples",
                    par.passed, par.eligible, 100 * par.fraction(), par.worst, first.passed, first.eligible,
                    100 * first.fraction(), first.worst, lp.passed(), lp.evaluated(), lp.positive_samples);
  return r;
}

CriterionResult theorem_trends(Context& ctx) {
  CriterionResult r = make_result(9);
  const double deltas[] = {0.1, 0.2, 0.3};
  const WitnessReport w = theorem_witness(ctx.dumbbell(800), deltas);
  bool finite = false;
  std::string thresholds;
  for (const WitnessRow& row : w.rows) {
    if (row.theorem == Theorem::Inscribed && row.delta == 0.3) finite = std::isfinite(row.C_hat);
    thresholds += format("{}{} {}: {:.4g}", thresholds.empty() ? "" : ", ", to_string(row.theorem), row.delta, row.C_hat);
  }
  const double top_mu = top_decile(w.s_mu);
  const double top_rho = top_decile(w.s_rho);
  r.pass = nonincreasing(w.s_mu) && nonincreasing(w.s_rho) && top_mu <= kTopDecileMu && top_rho <= kTopDecileRho && finite;
  r.detail = format("dumbbell N=800: s_mu nonincreasing: {}, top-decile {:.4g} (limit {}); s_rho nonincreasing: {}, top-decile "
                    "{:.4g} (limit {}); thresholds C(delta): {}",
                    nonincreasing(w.s_mu) ? "yes" : "no", top_mu, kTopDecileMu, nonincreasing(w.s_rho) ? "yes" : "no",
                    top_rho, kTopDecileRho, thresholds);
  return r;
}

using Criterion = CriterionResult (*)(Context&);
constexpr Criterion kCriteria[] = {exact_solutions, mu_oracles,  kernel_equivalence, convexity_clamp, mu_inequality,
                                   weak_inequality, lp_machinery, rho_machinery,      theorem_trends};

CriterionResult guarded(Criterion criterion, int id, Context& ctx) {
  const Clock::time_point start = Clock::now();
  CriterionResult r;
  try {
    r = criterion(ctx);
  } catch (const std::exception& e) {
    r = make_result(id);
    r.detail = format("error: {}", e.what());
  }
  r.id = id;
  r.timing = format("{:.1f} s{}{}", seconds_since(start), r.timing.empty() ? "" : "; ", r.timing);
  return r;
}

RunConfig determinism_config() {
  RunConfig c;
  c.scenario = {.kind = ScenarioKind::Dumbbell, .resolution = 400};
  c.flow = {.stop_H_max = kDumbbellStopH, .stop_time = 1.0, .sample_interval = kDumbbellInterval};
  c.estimates.delta = {0.1, 0.2};
  c.estimates.sigma = {kSigma};
  c.estimates.p = {kP};
  c.estimates.witness_deltas = {0.1, 0.2, 0.3};
  return c;
}

}  // namespace

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options,
                                            const std::function<void(const CriterionResult&)>& progress) {
  const Clock::time_point start = Clock::now();
  std::vector<CriterionResult> results;
  {
    Context ctx(options.mutation);
    for (int id = 1; id <= 9; ++id) {
      results.push_back(guarded(kCriteria[id - 1], id, ctx));
      if (progress) progress(results.back());
    }
  }

  CriterionResult last = make_result(10);
  const Clock::time_point start10 = Clock::now();
  try {
    const RunOutputs first_run = execute_run(determinism_config());
    std::string verdict = "rerun not requested";
    bool same = true;
    if (options.rerun) {
      const int threads = omp_get_max_threads();
      const int other = threads == 1 ? 2 : 1;
      omp_set_num_threads(other);
      Context ctx(options.mutation);
      std::size_t differing = 0;
      for (int id = 1; id <= 9; ++id) {
        const CriterionResult again = guarded(kCriteria[id - 1], id, ctx);
        differing += again.pass != results[id - 1].pass || again.detail != results[id - 1].detail;
      }
      const RunOutputs second_run = execute_run(determinism_config());
      omp_set_num_threads(threads);
      std::size_t files_differing = 0;
      for (const auto& [name, content] : first_run.files) {
        const auto it = second_run.files.find(name);
        files_differing += it == second_run.files.end() || it->second != content;
      }
      same = differing == 0 && files_differing == 0 && first_run.files.size() == second_run.files.size();
      verdict = format("rerun of criteria 1-9 with {} instead of {} thread(s): {} differing results; dumbbell run directory "
                       "({} files) byte-identical across the two thread counts: {}",
                       other, threads, differing, first_run.files.size(), files_differing == 0 ? "yes" : "no");
    }
    const double elapsed = seconds_since(start);
    const bool in_budget = elapsed <= kSuiteBudgetSeconds;
    last.pass = same && in_budget;
    last.detail = format("{}; suite {} the {:.0f} s budget", verdict, in_budget ? "within" : "over", kSuiteBudgetSeconds);
    last.timing = format("{:.1f} s; whole suite {:.1f} s", seconds_since(start10), elapsed);
  } catch (const std::exception& e) {
    last.pass = false;
    last.detail = format("error: {}", e.what());
  }
  results.push_back(last);
  if (progress) progress(results.back());
  return results;
}

std::string format_criterion(const CriterionResult& r) {
  return format("[{}] {:>2} {}: {}", r.pass ? "PASS" : "FAIL", r.id, r.title, r.detail);
}

}  // namespace pinchlab
