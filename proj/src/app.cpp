#include "pinchlab/app.hpp"

#include <fmt/format.h>
#include <omp.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <thread>

#include "pinchlab/error.hpp"
#include "pinchlab/estimates.hpp"
#include "pinchlab/report.hpp"
#include "pinchlab/surface_io.hpp"

namespace pinchlab {

namespace {

using fmt::format;

std::string num(double v) { return csv_number(v); }

std::string_view side_name(ContactSide side) { return side == ContactSide::Mu ? "mu" : "rho"; }

std::size_t resolution_of(const ScenarioSpec& s) { return s.resolution ? s.resolution : default_resolution(s.kind); }

FlowTrace training_trace(const RunConfig& config) {
  RunConfig t = config;
  const std::size_t own = config.estimates.training_resolution;
  t.scenario.resolution = own ? own : std::max<std::size_t>(resolution_of(config.scenario) / 2, 16);
  try {
    return simulate(t);
  } catch (const Error& e) {
    throw Error(e.code(), format("training run at N={} (set estimates.training_resolution or C_hat): {}",
                                 t.scenario.resolution, e.what()));
  }
}

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, format("cannot read '{}'", path.string()));
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

double fraction(std::size_t passed, std::size_t total) {
  return total == 0 ? 1.0 : static_cast<double>(passed) / static_cast<double>(total);
}

/// Largest mu/H (resp. rho/H) over the vertices of each sample.
std::vector<double> ratio_series(const FlowTrace& trace, ContactSide side) {
  std::vector<double> out;
  for (const FlowSample& s : trace.samples) {
    const std::vector<double>& v = side == ContactSide::Mu ? s.mu.value : s.rho.value;
    double m = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) m = std::max(m, v[i] / s.geometry.H[i]);
    out.push_back(m);
  }
  return out;
}

void residual_checks(const FlowTrace& trace, RunOutputs& out) {
  std::string csv = "side,form,eligible,passed,fraction,worst\n";
  if (trace.samples.size() < 3) {
    out.checks.push_back({"pointwise evolution inequalities", true, "not evaluated: fewer than 3 samples"});
    out.files["residuals.csv"] = csv;
    return;
  }
  const ResidualReport mu = mu_evolution_residual(trace);
  const ResidualReport rho = rho_pde_residual(trace);
  struct Item {
    const char* side;
    const char* form;
    const ResidualReport* report;
    ResidualForm kind;
  };
  for (const Item& it : {Item{"mu", "parabolic", &mu, ResidualForm::Parabolic},
                         Item{"rho", "parabolic", &rho, ResidualForm::Parabolic},
                         Item{"rho", "first_order", &rho, ResidualForm::FirstOrder}}) {
    const InequalityTally t = tally(trace, *it.report, kResidualTolerance, it.kind);
    csv += format("{},{},{},{},{},{}\n", it.side, it.form, t.eligible, t.passed, num(t.fraction()), num(t.worst));
    out.checks.push_back({format("{} evolution inequality ({})", it.side, it.form), t.fraction() >= kRequiredPassFraction,
                          format("{}/{} eligible pairs within tolerance; worst residual/tol {:.3g}", t.passed, t.eligible,
                                 t.worst)});
  }
  out.files["residuals.csv"] = csv;
}

}  // namespace

bool RunOutputs::hard_fail() const {
  return std::any_of(checks.begin(), checks.end(), [](const MonitorCheck& c) { return !c.pass; });
}

FlowTrace simulate(const RunConfig& config) {
  FlowConfig flow = config.flow;
  flow.compute_contacts = true;
  return run(generate(config.scenario), flow);
}

RunOutputs monitor_run(const RunConfig& config, const FlowTrace& trace, const FlowTrace* training) {
  const EstimateSettings& es = config.estimates;
  RunOutputs out;
  std::string estimates[2];
  for (std::string& e : estimates) e = "t,delta,sigma,p,int_f_plus_p,ddt_lhs,bound_rhs,margin,pass\n";
  std::string gronwall = "t,delta,sigma,p,side,lhs_integral,rhs_integral,lhs_norm,rhs_norm,pass_integral,pass_norm\n";
  std::string levels = "delta,sigma,p,side,k,t,measure,integral,ddt,bound,pass\n";
  std::string aux = "t,delta,sigma,p,slack,tolerance,pass\n";
  std::string constants;
  LineChart margins{"L^p inequality margins (bound - d/dt integral)", "t", "margin", {}};

  std::optional<FlowTrace> own_training;
  auto train = [&]() -> const FlowTrace& {
    if (training) return *training;
    if (!own_training) own_training = training_trace(config);
    return *own_training;
  };

  std::vector<std::vector<double>> mu_refined;
  for (const FlowSample& s : trace.samples) mu_refined.push_back(refined_values(s, ContactSide::Mu));

  for (const double delta : es.delta) {
    EstimateConstants base = extract_constants(trace, delta, es.epsilon);
    base.c0 = {es.c0, Provenance::Configured};
    std::optional<EstimateConstants> train_base;
    for (const double sigma : es.sigma) {
      for (const double p : es.p) {
        EstimateConstants c = base;
        c.sigma = sigma;
        c.p = p;
        if (es.C_hat) {
          c.C_hat = {*es.C_hat, Provenance::Configured};
        } else {
          if (!train_base) {
            train_base = extract_constants(train(), delta, es.epsilon);
            train_base->c0 = c.c0;
          }
          EstimateConstants tc = *train_base;
          tc.sigma = sigma;
          tc.p = p;
          c.C_hat = {fit_growth_constant(train(), tc), Provenance::Fitted};
        }
        const std::string tag = format("delta={} sigma={} p={}", delta, sigma, p);
        const std::string keys = format("{},{},{}", num(delta), num(sigma), num(p));
        constants += format("# {}\n{}\n", tag, format_constants(c));

        for (const ContactSide side : {ContactSide::Mu, ContactSide::Rho}) {
          const LpReport lp = lp_monitor(trace, c, side);
          ChartSeries series{format("{} {}", side_name(side), tag), {}, {}, side == ContactSide::Rho};
          for (const LpRow& r : lp.rows) {
            if (!r.evaluated) continue;
            estimates[side == ContactSide::Mu ? 0 : 1] +=
                format("{},{},{},{},{},{},{}\n", num(r.t), keys, num(r.integral), num(r.ddt), num(r.bound), num(r.margin),
                       r.pass ? 1 : 0);
            series.x.push_back(r.t);
            series.y.push_back(r.margin);
          }
          margins.series.push_back(std::move(series));
          out.checks.push_back({format("L^p growth inequality ({}) {}", side_name(side), tag),
                                lp.pass_fraction() >= kRequiredPassFraction,
                                format("{}/{} samples; plus part positive at {} samples; C = {:.6g}", lp.passed(),
                                       lp.evaluated(), lp.positive_samples, lp.C)});

          const std::vector<GronwallRow> gr = gronwall_check(trace, c, side);
          std::size_t pi = 0, pn = 0;
          for (const GronwallRow& r : gr) {
            gronwall += format("{},{},{},{},{},{},{},{},{}\n", num(r.t), keys, side_name(side), num(r.lhs_integral),
                               num(r.rhs_integral), num(r.lhs_norm), num(r.rhs_norm), r.pass_integral ? 1 : 0,
                               r.pass_norm ? 1 : 0);
            pi += r.pass_integral;
            pn += r.pass_norm;
          }
          out.checks.push_back({format("integrated growth bounds ({}) {}", side_name(side), tag),
                                fraction(pi, gr.size()) >= kRequiredPassFraction && fraction(pn, gr.size()) >= kRequiredPassFraction,
                                format("integral form {}/{}, norm form {}/{}", pi, gr.size(), pn, gr.size())});

          const LevelsetReport lv = levelset_monitor(trace, c, side, es.levels);
          std::size_t lp_pass = 0, lp_total = 0;
          for (const LevelRow& row : lv.levels) {
            for (std::size_t k = 0; k < lv.times.size(); ++k) {
              const bool interior = k > 0 && k + 1 < lv.times.size();
              levels += format("{},{},{},{},{},{},{},{},{}\n", keys, side_name(side), num(row.k), num(lv.times[k]),
                               num(row.measure[k]), num(row.integral[k]), interior ? num(row.ddt[k]) : "",
                               interior ? num(row.bound[k]) : "", interior ? (row.pass[k] ? "1" : "0") : "");
              if (interior) {
                ++lp_total;
                lp_pass += row.pass[k];
              }
            }
          }
          out.checks.push_back({format("level sets nest ({}) {}", side_name(side), tag), lv.nested,
                                format("{} levels; k* = {:.6g}; B = {:.6g}; level inequality {}/{}", lv.levels.size(),
                                       lv.k_star, lv.B_hat, lp_pass, lp_total)});
        }

        std::size_t aux_pass = 0;
        for (std::size_t k = 0; k < trace.samples.size(); ++k) {
          const FlowSample& s = trace.samples[k];
          const PinchFields pf = pinch_fields(s.geometry, mu_refined[k], c, ContactSide::Mu);
          std::vector<double> eta(pf.f_plus.size());
          for (std::size_t i = 0; i < eta.size(); ++i) eta[i] = std::pow(pf.f_plus[i], p) / s.geometry.H[i];
          eta = mask_support(s.geometry, mu_refined[k], eta);
          const AuxTerms t = aux_integral_check(s.surface, s.geometry, mu_refined[k], c, eta);
          const bool pass = t.slack >= -t.tolerance;
          aux_pass += pass;
          aux += format("{},{},{},{},{}\n", num(s.t), keys, num(t.slack), num(t.tolerance), pass ? 1 : 0);
        }
        out.checks.push_back({format("weak Laplacian inequality, eta = f_+^p/H, {}", tag), aux_pass == trace.samples.size(),
                              format("{}/{} samples with slack >= -tol", aux_pass, trace.samples.size())});
      }
    }
  }

  residual_checks(trace, out);

  const std::vector<double>& wd = es.witness_deltas.empty() ? es.delta : es.witness_deltas;
  const WitnessReport w = theorem_witness(trace, wd);
  std::string witness = "delta,theorem,C_hat,B_hat\n";
  for (const WitnessRow& r : w.rows) {
    witness += format("{},{},{},{}\n", num(r.delta), to_string(r.theorem), num(r.C_hat), num(r.B_hat));
  }
  std::string trend = "theorem,tau,s\n";
  for (const auto& [name, series] : {std::pair{"inscribed", &w.s_mu}, {"outer", &w.s_rho}}) {
    for (const TrendPoint& pt : *series) trend += format("{},{},{}\n", name, num(pt.tau), num(pt.s));
  }
  out.checks.push_back({"witness trends nonincreasing", nonincreasing(w.s_mu) && nonincreasing(w.s_rho),
                        format("top-decile mu/H {:.4g}, rho/H {:.4g}", top_decile(w.s_mu), top_decile(w.s_rho))});

  out.files["estimates.csv"] = estimates[0];
  out.files["estimates_rho.csv"] = estimates[1];
  out.files["gronwall.csv"] = gronwall;
  out.files["levelsets.csv"] = levels;
  out.files["aux.csv"] = aux;
  out.files["witness.csv"] = witness;
  out.files["trend.csv"] = trend;
  out.files["constants.txt"] = constants;

  std::string checks = "check,pass,detail\n";
  for (const MonitorCheck& c : out.checks) checks += format("{},{},{}\n", quoted(c.name), c.pass ? 1 : 0, quoted(c.detail));
  out.files["monitors.csv"] = checks;

  if (config.output.plots) {
    std::vector<double> t;
    for (const FlowSample& s : trace.samples) t.push_back(s.t);
    LineChart ratios{"Largest mu/H and rho/H against the theorem thresholds", "t", "ratio", {}};
    ratios.series.push_back({"max mu/H", t, ratio_series(trace, ContactSide::Mu), false});
    ratios.series.push_back({"max rho/H", t, ratio_series(trace, ContactSide::Rho), false});
    for (const double d : wd) {
      ratios.series.push_back({format("1 + delta, delta = {}", d), t, std::vector<double>(t.size(), 1.0 + d), true});
      ratios.series.push_back({format("delta = {}", d), t, std::vector<double>(t.size(), d), true});
    }
    out.files["mu_over_H.svg"] = svg_chart(ratios);
    out.files["lp_margins.svg"] = svg_chart(margins);
  }
  return out;
}

RunOutputs execute_run(const RunConfig& config) {
  const FlowTrace trace = simulate(config);
  RunOutputs out = monitor_run(config, trace);
  out.files["trace.csv"] = trace_csv(trace);
  out.files["meta"] = format("{}[result]\nstop_reason = {}\nsteps = {}\nremeshes = {}\nfinal_time = {}\nsamples = {}\n",
                             format_config(config), to_string(trace.stop_reason), trace.steps, trace.remeshes,
                             num(trace.final_time), trace.samples.size());
  for (std::size_t k = 0; k < trace.samples.size(); ++k) {
    const FlowSample& s = trace.samples[k];
    if (config.output.frames) out.files[format("frames/{:04}.txt", k)] = format_surface(s.surface, format("t = {}", num(s.t)));
    if (config.output.contacts) {
      out.files[format("contacts/{:04}_mu.csv", k)] = contact_csv(s.mu);
      out.files[format("contacts/{:04}_rho.csv", k)] = contact_csv(s.rho);
    }
  }
  return out;
}

void write_outputs(const RunOutputs& outputs, const std::filesystem::path& directory) {
  std::error_code ec;
  for (const auto& [name, content] : outputs.files) {
    const std::filesystem::path path = directory / name;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw Error(ErrorCode::IoError, format("cannot create '{}': {}", path.parent_path().string(), ec.message()));
    std::ofstream f(path, std::ios::binary);
    f << content;
    if (!f) throw Error(ErrorCode::IoError, format("cannot write '{}'", path.string()));
  }
}

RunOutputs analyze_directory(const std::filesystem::path& run_dir) {
  const std::string meta = read_file(run_dir / "meta");
  const std::size_t cut = meta.find("[result]");
  RunConfig config = parse_config(std::string_view(meta).substr(0, cut), (run_dir / "meta").string());
  config.output.directory = run_dir / "analysis";
  const std::vector<double> times = parse_trace_times(read_file(run_dir / "trace.csv"));

  FlowTrace trace;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const std::filesystem::path frame = run_dir / format("frames/{:04}.txt", k);
    if (!std::filesystem::exists(frame)) {
      throw Error(ErrorCode::IoError, format("missing frame '{}' (runs need frames = true to be analysed)", frame.string()));
    }
    FlowState state = make_state(read_surface(frame), times[k]);
    trace.samples.push_back(FlowSample{.t = state.t,
                                       .surface = std::move(state.surface),
                                       .geometry = std::move(state.geometry),
                                       .mu = {},
                                       .rho = {}});
    evaluate_contacts(trace.samples.back(), config.flow.azimuths, k ? &trace.samples[k - 1] : nullptr);
  }
  if (trace.samples.empty()) throw Error(ErrorCode::NoSamples, "trace.csv has no samples");
  trace.final_time = trace.samples.back().t;
  return monitor_run(config, trace);
}

std::vector<SweepCell> sweep_cells(const RunConfig& config) {
  std::vector<SweepCell> cells;
  const std::vector<ScenarioKind> kinds = config.sweep.scenarios.value_or(std::vector<ScenarioKind>{config.scenario.kind});
  const EstimateSettings& es = config.estimates;
  for (const ScenarioKind kind : kinds) {
    for (const double delta : es.delta) {
      for (const double sigma : es.sigma) {
        for (const double p : es.p) {
          SweepCell cell;
          cell.name = format("{}_d{}_s{}_p{}", to_string(kind), delta, sigma, p);
          cell.config = config;
          cell.config.scenario.kind = kind;
          cell.config.estimates.delta = {delta};
          cell.config.estimates.sigma = {sigma};
          cell.config.estimates.p = {p};
          cell.config.estimates.witness_deltas = {delta};
          cell.config.sweep = {};
          cell.config.output.directory = config.output.directory / cell.name;
          if (auto problem = admissibility_problem(sigma, p, es.c0)) {
            cell.status = "skipped";
            cell.reason = *problem;
          } else {
            cell.status = "pending";
          }
          cells.push_back(std::move(cell));
        }
      }
    }
  }
  return cells;
}

void execute_sweep(std::vector<SweepCell>& cells, std::size_t parallel) {
  std::vector<SweepCell*> pending;
  for (SweepCell& c : cells) {
    if (c.status == "pending") pending.push_back(&c);
  }
  const std::size_t workers = std::max<std::size_t>(1, std::min(parallel, pending.size()));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    // Cells already run concurrently; nested kernel threads would only oversubscribe.
    if (workers > 1) omp_set_num_threads(1);
    for (std::size_t i; (i = next.fetch_add(1)) < pending.size();) {
      SweepCell& cell = *pending[i];
      try {
        const RunOutputs out = execute_run(cell.config);
        write_outputs(out, cell.config.output.directory);
        cell.witness_csv = out.files.at("witness.csv");
        cell.status = out.hard_fail() ? "monitor-fail" : "ok";
        for (const MonitorCheck& c : out.checks) {
          if (!c.pass) {
            cell.reason = c.name + ": " + c.detail;
            break;
          }
        }
      } catch (const std::exception& e) {
        cell.status = "failed";
        cell.reason = e.what();
      }
    }
  };
  std::vector<std::thread> threads;
  for (std::size_t w = 1; w < workers; ++w) threads.emplace_back(work);
  work();
  for (std::thread& t : threads) t.join();
}

std::string sweep_witness_csv(const std::vector<SweepCell>& cells) {
  std::string out = "cell,scenario,sigma,p,delta,theorem,C_hat,B_hat\n";
  for (const SweepCell& c : cells) {
    if (c.witness_csv.empty()) continue;
    const std::string prefix = format("{},{},{},{},", c.name, to_string(c.config.scenario.kind),
                                      num(c.config.estimates.sigma[0]), num(c.config.estimates.p[0]));
    std::istringstream rows(c.witness_csv);
    std::string line;
    std::getline(rows, line);
    while (std::getline(rows, line)) out += prefix + line + "\n";
  }
  return out;
}

std::string sweep_status_csv(const std::vector<SweepCell>& cells) {
  std::string out = "cell,scenario,delta,sigma,p,status,reason\n";
  for (const SweepCell& c : cells) {
    const EstimateSettings& e = c.config.estimates;
    out += format("{},{},{},{},{},{},{}\n", c.name, to_string(c.config.scenario.kind), num(e.delta[0]), num(e.sigma[0]),
                  num(e.p[0]), c.status, quoted(c.reason));
  }
  return out;
}

namespace {

void print_checks(const RunOutputs& out, std::ostream& os) {
  for (const MonitorCheck& c : out.checks) os << format("[{}] {}: {}\n", c.pass ? "PASS" : "FAIL", c.name, c.detail);
}

}  // namespace

int cmd_run(const std::filesystem::path& config_path, std::ostream& out, std::ostream& err) {
  RunConfig config;
  try {
    config = load_config(config_path);
  } catch (const Error& e) {
    err << e.what() << "\n";
    return 1;
  }
  try {
    const RunOutputs outputs = execute_run(config);
    write_outputs(outputs, config.output.directory);
    out << format("run written to {}\n", config.output.directory.string());
    print_checks(outputs, out);
    return outputs.hard_fail() ? 2 : 0;
  } catch (const Error& e) {
    err << e.what() << "\n";
    return 1;
  }
}

int cmd_analyze(const std::filesystem::path& run_dir, std::ostream& out, std::ostream& err) {
  try {
    const RunOutputs outputs = analyze_directory(run_dir);
    write_outputs(outputs, run_dir / "analysis");
    out << format("analysis written to {}\n", (run_dir / "analysis").string());
    print_checks(outputs, out);
    return outputs.hard_fail() ? 2 : 0;
  } catch (const Error& e) {
    err << e.what() << "\n";
    return 1;
  }
}

int cmd_sweep(const std::filesystem::path& config_path, std::ostream& out, std::ostream& err) {
  RunConfig config;
  try {
    config = load_config(config_path, ConfigMode::Sweep);
  } catch (const Error& e) {
    err << e.what() << "\n";
    return 1;
  }
  std::vector<SweepCell> cells = sweep_cells(config);
  if (cells.empty()) {
    err << "empty sweep: the scenario, delta, sigma and p grids span no cell\n";
    return 1;
  }
  std::size_t parallel = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("PINCHLAB_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v < 1) {
      err << format("PINCHLAB_THREADS must be a positive integer, got '{}'\n", env);
      return 1;
    }
    parallel = static_cast<std::size_t>(v);
  }
  execute_sweep(cells, parallel);
  try {
    RunOutputs aggregate;
    aggregate.files["sweep_witness.csv"] = sweep_witness_csv(cells);
    aggregate.files["sweep_status.csv"] = sweep_status_csv(cells);
    write_outputs(aggregate, config.output.directory);
  } catch (const Error& e) {
    err << e.what() << "\n";
    return 1;
  }
  bool failed = false;
  for (const SweepCell& c : cells) {
    out << format("{:<40} {:<12} {}\n", c.name, c.status, c.reason);
    failed = failed || c.status == "failed" || c.status == "monitor-fail";
  }
  return failed ? 2 : 0;
}

}  // namespace pinchlab
