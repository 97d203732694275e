#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pinchlab/flow.hpp"
#include "pinchlab/geometry.hpp"
#include "pinchlab/inradius.hpp"

namespace pinchlab {

enum class Provenance {
  Configured,
  /// Running supremum over a trace.
  Extracted,
  /// Fitted on a training run and frozen.
  Fitted,
  /// Computed from other constants by a fixed rule.
  Derived,
};
std::string_view to_string(Provenance source);

struct Constant {
  double value = 0.0;
  Provenance source = Provenance::Configured;
};

/// Constants of the pinching estimates. K0 bounds the negative curvature through
/// (n-1) lambda_1 >= -(delta/2) H - K0 min{H, 1}; K0_rho is the same with lambda_1 in place of
/// (n-1) lambda_1, used on the rho side (the two agree for n = 2).
struct EstimateConstants {
  int n = 1;
  double delta = 0.1;
  double sigma = 0.02;
  double p = 10.0;
  /// Level of the truncated functions f_{sigma,k}, g_{sigma,k}.
  double k = 0.0;
  Constant epsilon;
  Constant K0;
  Constant K0_rho;
  /// lambda_1 >= -epsilon H - K1.
  Constant K1;
  /// |A|^2 <= (1 + epsilon) H^2 + K2.
  Constant K2;
  /// mu <= Lambda H and |A|^2 <= Lambda H^2.
  Constant Lambda{1.0};
  /// Growth constant of the L^p inequality (mu side).
  Constant C_hat;
  /// Admissibility constant: p >= 1/c0 and sigma <= c0 p^{-1/2}.
  Constant c0{0.5};
  /// sup(mu - (1 + 2 delta) H) over the trace.
  Constant B_hat;

  /// Throws InvalidArgument unless sigma in (0, 1/2), p >= 1, Lambda >= 1 and all K's >= 0.
  void validate() const;
};

/// epsilon = delta / (4 n^4 Lambda^2).
double default_epsilon(double delta, int n, double Lambda);

/// "key = value  # provenance" lines, one per constant, in a fixed order.
std::string format_constants(const EstimateConstants& constants);

/// Running suprema over all (vertex, sample) pairs of a trace with contacts:
/// K0 = max(0, sup((-(n-1) lambda_1 - (delta/2) H) / min{H, 1})), K1 = max(0, sup(-lambda_1 - eps H)),
/// K2 = max(0, sup(|A|^2 - (1 + eps) H^2)), Lambda = max(1, sup mu/H, sup |A|^2/H^2).
/// Without an explicit epsilon the default_epsilon rule is applied with the extracted Lambda.
/// Throws NoSamples on an empty trace, InvalidArgument if a sample lacks contacts.
EstimateConstants extract_constants(const FlowTrace& trace, double delta, std::optional<double> epsilon = {});

/// Throws PreconditionViolated unless p >= 1/c0 and sigma <= c0 p^{-1/2}.
void check_admissible(const EstimateConstants& constants);
bool admissible(const EstimateConstants& constants);

/// mu (resp. rho) at every vertex, with interior contacts refined to sub-vertex accuracy.
std::vector<double> refined_values(const FlowSample& sample, ContactSide side);

/// Per-vertex pinching functions. The mu side fills f*, the rho side g*.
///   f = H^{sigma-1}(mu - (1 + delta) H) - K0,   g = H^{sigma-1}(rho - delta H) - K0_rho,
/// the *_k variants use the level k instead of K0, and the *_plus fields are max(., 0).
struct PinchFields {
  std::vector<double> f, f_plus, f_k, f_k_plus;
  std::vector<double> g, g_plus, g_k, g_k_plus;
};

/// Throws NotMeanConvex if H <= 0 somewhere.
PinchFields pinch_fields(const GeometryData& geometry, std::span<const double> value,
                         const EstimateConstants& constants, ContactSide side);
PinchFields pinch_fields(const GeometryData& geometry, const ContactReport& contact,
                         const EstimateConstants& constants, ContactSide side);

// ---------------------------------------------------------------------------------------------
// Pointwise evolution inequalities

struct ResidualOptions {
  /// Number of samples in the centred time difference (odd, >= 3); the stencil is
  /// s - w, s, s + w with w = (window - 1) / 2.
  std::size_t window = 3;
  /// Restrict to strictly interior contacts that stay on one branch across the stencil.
  /// Off only for the shrinking sphere, whose mu coincides with lambda_n.
  bool require_interior_contact = true;
};

struct ResidualSample {
  std::size_t sample = 0;
  double t = 0.0;
  /// Half-width of the time stencil (mean of the two sides).
  double window_dt = 0.0;
  double h = 0.0;
  std::vector<std::uint8_t> eligible;
  /// Parabolic form; NaN where not eligible.
  std::vector<double> residual;
  /// Sum of the absolute values of the terms of the parabolic form.
  std::vector<double> magnitude;
  /// The monitored value (refined mu or rho).
  std::vector<double> value;
  /// rho side only: the first-order form and the auxiliary function omega.
  std::vector<double> first_order;
  std::vector<double> omega;
};

struct ResidualReport {
  ContactSide side = ContactSide::Mu;
  std::vector<ResidualSample> samples;
  std::size_t eligible_count() const;
};

/// d_t mu - Delta mu - |A|^2 mu + sum_i 2/(mu - lambda_i) (D_i mu)^2 at vertices with
/// mu - lambda_n >= 0.05 H whose contact stays on one branch over the stencil (the inequality
/// claims <= 0). d_t follows the point along its normal line into the neighbouring samples,
/// starting from the arclength-fraction guess. Gradient terms with mu - lambda_i <= 1e-8 H are
/// dropped. Throws WindowTooShort for fewer than 3 samples.
ResidualReport mu_evolution_residual(const FlowTrace& trace, ResidualOptions options = {});

/// rho side, on rho >= 0.05 H and rho + lambda_1 >= 0.05 H with a stable contact:
///   parabolic:   d_t rho - Delta rho - |A|^2 rho + sum 2/(rho + lambda_i) (D_i rho)^2
///   first order: d_t rho + H rho^2 / 2 - sum D_i rho D_i H / (rho + lambda_i)
///                - (H / 2) sum (D_i rho)^2 / (rho + lambda_i)^2
///   omega:       Delta rho - sum 2 (D_i rho)^2 / (rho + lambda_i) - sum D_i rho D_i H / (rho + lambda_i)
///                - (H / 2) sum (D_i rho)^2 / (rho + lambda_i)^2
ResidualReport rho_pde_residual(const FlowTrace& trace, ResidualOptions options = {});

/// Tolerance for residual inequalities relative to the size of the terms, with h and dt made
/// dimensionless by the local scale s = max(value, H):
/// tol = |terms| (c_h h s + c_t dt s^2) + c_round |terms| 1e-10.
struct ToleranceModel {
  double c_h = 0.0;
  double c_t = 0.0;
  double c_round = 1.0;

  double operator()(double h, double dt, double scale, double magnitude) const;
};

/// One level of a refinement ladder: the worst |residual| / (|terms| (h s + dt s^2)) on a run that
/// saturates the inequality.
struct LadderLevel {
  double h = 0.0;
  double dt = 0.0;
  double max_abs_residual = 0.0;
  double ratio = 0.0;
};

/// Summarises a residual report of a saturating run (every eligible vertex counts).
LadderLevel ladder_level(const FlowTrace& trace, const ResidualReport& report);

/// c_h = c_t = max ratio over the ladder times a safety factor of 2.
ToleranceModel fit_tolerance(std::span<const LadderLevel> ladder);

/// Pinned from the shrinking-sphere ladder (N, dt) = (51, 0.01), (101, 0.005), (201, 0.0025)
/// up to t = 0.2; tests re-fit it and compare.
inline constexpr ToleranceModel kResidualTolerance{0.06, 0.06, 1.0};

enum class ResidualForm { Parabolic, FirstOrder };

struct InequalityTally {
  std::size_t eligible = 0;
  std::size_t passed = 0;
  /// Largest residual / tol over eligible pairs.
  double worst = 0.0;
  double fraction() const { return eligible == 0 ? 1.0 : static_cast<double>(passed) / static_cast<double>(eligible); }
};

/// Counts eligible pairs with residual <= tol(h, dt, max(value, H), magnitude).
InequalityTally tally(const FlowTrace& trace, const ResidualReport& report, const ToleranceModel& tolerance,
                      ResidualForm form = ResidualForm::Parabolic);

// ---------------------------------------------------------------------------------------------
// Weak form of the Laplacian lower bound

/// 1 where mu - lambda_n >= 0.05 H (and the contact is a second point), else 0.
std::vector<double> support_mask(const GeometryData& geometry, std::span<const double> mu);

/// Multiplies eta by support_mask.
std::vector<double> mask_support(const GeometryData& geometry, std::span<const double> mu, std::span<const double> eta);

/// C^1 bump (1 - (s/r)^2)^2 of arclength distance s from `center`, support radius r.
std::vector<double> bump(const Surface& surface, std::size_t center, double radius);

struct AuxTerms {
  /// -integral <grad eta, grad mu>
  double gradient = 0.0;
  /// (1/2) integral eta (|A|^2 mu - H mu^2 + n^3 (n eps mu + K1) mu^2)
  double zeroth = 0.0;
  /// integral eta sum D_i mu D_i H / (mu - lambda_i)
  double mixed = 0.0;
  /// (1/2) integral eta (H + n^3 (n eps mu + K1)) sum (D_i mu)^2 / (mu - lambda_i)^2
  double quadratic = 0.0;
  /// Sum of the four terms; the inequality claims slack >= 0.
  double slack = 0.0;
  /// Sum of absolute values of the terms.
  double magnitude = 0.0;
  /// kAuxTolerance |terms| (h s)^2 with s = max mu on the support of eta; the claim is slack >= -tolerance.
  double tolerance = 0.0;
};

/// The weak form is discretised to second order, so its tolerance shrinks like h^2.
inline constexpr double kAuxTolerance = 5e-2;

/// Evaluates the weak inequality for a test field eta >= 0 supported where mu - lambda_n >= 0.05 H.
/// Throws SupportViolation if eta > 0 outside, InvalidArgument if eta < 0 somewhere.
AuxTerms aux_integral_check(const Surface& surface, const GeometryData& geometry, std::span<const double> mu,
                            const EstimateConstants& constants, std::span<const double> eta);

// ---------------------------------------------------------------------------------------------
// Integral monitors

struct LpRow {
  std::size_t sample = 0;
  double t = 0.0;
  double integral = 0.0;
  double integral_A2 = 0.0;
  /// Centred difference of the integral; only interior samples carry rows with evaluated = true.
  double ddt = 0.0;
  double bound = 0.0;
  double margin = 0.0;
  bool evaluated = false;
  bool pass = true;
};

struct LpReport {
  ContactSide side = ContactSide::Mu;
  double C = 0.0;
  std::vector<LpRow> rows;
  std::size_t evaluated() const;
  std::size_t passed() const;
  /// Samples where the plus part is positive somewhere.
  std::size_t positive_samples = 0;
  double pass_fraction() const;
};

/// Relative tolerance of the integral monitors.
inline constexpr double kIntegralRelTol = 1e-6;

/// Smallest C >= 0 with d/dt int f_+^p <= C sigma p int f_+^p + sigma p K0^p int |A|^2 at every
/// interior sample of the training run where C can help (0 if none).
double fit_growth_constant(const FlowTrace& training, const EstimateConstants& constants);

/// mu side: d/dt int f_+^p <= C_hat sigma p int f_+^p + sigma p K0^p int |A|^2 with C_hat frozen;
/// rho side: d/dt int g_+^p <= sigma p K0^p int |A|^2. Throws PreconditionViolated.
LpReport lp_monitor(const FlowTrace& trace, const EstimateConstants& constants, ContactSide side);

struct GronwallRow {
  double t = 0.0;
  /// int (f_+^p + sigma p K0^p Lambda) at t versus e^{C sigma p t} times the same at t0.
  double lhs_integral = 0.0;
  double rhs_integral = 0.0;
  /// (int f_+^p)^{1/p} versus e^{C sigma t} |M_0|^{1/p} (sup_{M_0} f_+^p + sigma p K0^p Lambda)^{1/p}.
  double lhs_norm = 0.0;
  double rhs_norm = 0.0;
  bool pass_integral = true;
  bool pass_norm = true;
};

/// Both integrated forms, C = C_hat on the mu side and 0 on the rho side.
std::vector<GronwallRow> gronwall_check(const FlowTrace& trace, const EstimateConstants& constants, ContactSide side);

struct LevelRow {
  double k = 0.0;
  /// Per sample: measure of {f_k > 0} and int f_{k,+}^p.
  std::vector<double> measure;
  std::vector<double> integral;
  /// Interior samples: d/dt int f_{k,+}^p against
  /// -p(p-1)/2 int f_{k,+}^{p-2} |grad f_k|^2 + sigma p int |A|^2 f_{k,+}^{p-1} (f_k + k).
  std::vector<double> ddt;
  std::vector<double> bound;
  std::vector<std::uint8_t> pass;
};

struct LevelsetReport {
  ContactSide side = ContactSide::Mu;
  std::vector<double> times;
  std::vector<LevelRow> levels;
  /// Smallest k with f_k <= 0 at every (vertex, sample): sup H^{sigma-1}(mu - (1 + delta) H).
  double k_star = 0.0;
  /// sup(mu - (1 + 2 delta) H), resp. sup(rho - 2 delta H).
  double B_hat = 0.0;
  /// A(k, t) and the integral are nonincreasing in k at every sample.
  bool nested = true;
};

/// K0 {1, 2, 4, 8}; when K0 = 0 the grid is {0, s/8, s/4, s/2} with s = sup of f_0 (just {0} if s <= 0).
std::vector<double> default_levels(const FlowTrace& trace, const EstimateConstants& constants, ContactSide side);

/// Throws PreconditionViolated for a level below K0 or an inadmissible (sigma, p).
LevelsetReport levelset_monitor(const FlowTrace& trace, const EstimateConstants& constants, ContactSide side,
                                std::vector<double> levels = {});

/// (int f^{2p})^{1/(2p)} - (int f^p sup f^p)^{1/(2p)}; never above rounding.
double lp_consistency_gap(const GeometryData& geometry, std::span<const double> f_plus, double p);

// ---------------------------------------------------------------------------------------------
// Theorem witnesses

enum class Theorem {
  /// mu <= (1 + delta) H for large H.
  Inscribed,
  /// rho <= delta H for large H.
  Outer,
};
std::string_view to_string(Theorem theorem);

struct WitnessRow {
  double delta = 0.0;
  Theorem theorem = Theorem::Inscribed;
  /// Largest H at a violating pair (0 if none); +inf if the pair with the largest H violates.
  double C_hat = 0.0;
  /// sup(mu - (1 + 2 delta) H), resp. sup(rho - 2 delta H).
  double B_hat = 0.0;
};

struct TrendPoint {
  double tau = 0.0;
  double s = 0.0;
};

struct WitnessReport {
  std::vector<WitnessRow> rows;
  /// s(tau) = sup{mu/H : H >= tau} (resp. rho/H) at the H quantiles 0, 0.05, ..., 1.
  std::vector<TrendPoint> s_mu;
  std::vector<TrendPoint> s_rho;
};

WitnessReport theorem_witness(const FlowTrace& trace, std::span<const double> deltas);

/// s at the 90% quantile of H.
double top_decile(std::span<const TrendPoint> trend);
bool nonincreasing(std::span<const TrendPoint> trend);

}  // namespace pinchlab
