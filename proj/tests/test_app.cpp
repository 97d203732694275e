#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "doctest.h"
#include "pinchlab/app.hpp"
#include "pinchlab/config.hpp"
#include "pinchlab/error.hpp"
#include "pinchlab/report.hpp"
#include "pinchlab/scenarios.hpp"

namespace fs = std::filesystem;
using namespace pinchlab;

namespace {

/// Fresh scratch directory, removed on destruction.
struct ScratchDir {
  fs::path path;
  explicit ScratchDir(const std::string& name) : path(fs::temp_directory_path() / ("pinchlab-test-" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~ScratchDir() { fs::remove_all(path); }
};

std::string read(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path write_config(const ScratchDir& dir, const std::string& body) {
  const fs::path p = dir.path / "run.ini";
  std::ofstream(p) << body << "\n[output]\ndirectory = " << (dir.path / "out").string() << "\n";
  return p;
}

std::vector<std::vector<std::string>> csv_rows(const std::string& csv) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(csv);
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

std::size_t column(const std::vector<std::string>& header, const std::string& name) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  FAIL("missing column " << name);
  return 0;
}

std::string error_message(std::string_view text, ConfigMode mode = ConfigMode::Run) {
  try {
    parse_config(text, "cfg", mode);
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

const char* kDumbbell = R"([scenario]
kind = dumbbell
resolution = 400

[flow]
stop_H_max = 20
stop_time = 1
sample_interval = 0.001

[estimates]
delta = 0.1, 0.2, 0.3
training_resolution = 200
)";

}  // namespace

TEST_CASE("config diagnostics name the line and key") {
  CHECK(error_message("[flow]\nbogus = 1\n").find("cfg:2") != std::string::npos);
  const std::string bad_value = error_message("# comment\n[scenario]\nresolution = many\n");
  CHECK(bad_value.find("cfg:3") != std::string::npos);
  CHECK(bad_value.find("scenario.resolution") != std::string::npos);
  CHECK(error_message("[nowhere]\nx = 1\n").find("cfg:1") != std::string::npos);
  CHECK(error_message("[estimates]\ndelta =\n").find("cfg:2") != std::string::npos);
  CHECK(error_message("[estimates]\ndelta =\n[flow]\nstop_time = 1\n", ConfigMode::Sweep).empty());
  CHECK(error_message("[flow]\ncfl_factor = 2\n").find("cfl_factor") != std::string::npos);
}

TEST_CASE("inadmissible sigma and p are refused with the precondition") {
  const std::string msg = error_message("[estimates]\nsigma = 0.4\np = 100\n[flow]\nstop_time = 1\n");
  CHECK(msg.find("cfg:2") != std::string::npos);
  CHECK(msg.find("precondition") != std::string::npos);
  CHECK_FALSE(admissibility_problem(0.02, 10, 0.5));
  CHECK(admissibility_problem(0.02, 1.5, 0.5));
  CHECK(admissibility_problem(0.2, 10, 0.5));

  ScratchDir dir("inadmissible");
  std::ostringstream out, err;
  CHECK(cmd_run(write_config(dir, "[estimates]\nsigma = 0.4\np = 100\n[flow]\nstop_time = 1\n"), out, err) == 1);
  CHECK(err.str().find("L^p growth inequality precondition") != std::string::npos);
  CHECK_FALSE(fs::exists(dir.path / "out"));
}

TEST_CASE("config formatting round-trips") {
  RunConfig c = parse_config(kDumbbell);
  c.estimates.epsilon = 1e-3;
  c.estimates.C_hat = 0.25;
  c.estimates.levels = {0.5, 1.0};
  c.sweep.scenarios = std::vector{ScenarioKind::Dumbbell, ScenarioKind::Ellipse};
  c.output.frames = false;
  const std::string text = format_config(c);
  CHECK(format_config(parse_config(text)) == text);
  CHECK(parse_config(text).estimates.delta == std::vector{0.1, 0.2, 0.3});
}

TEST_CASE("circle run exits 0 with nonnegative margins") {
  ScratchDir dir("circle");
  std::ostringstream out, err;
  REQUIRE(cmd_run(write_config(dir, "[scenario]\nkind = circle\n[flow]\nstop_time = 0.2\nsample_interval = 0.05\n"), out, err) == 0);
  for (const char* name : {"estimates.csv", "estimates_rho.csv"}) {
    const auto rows = csv_rows(read(dir.path / "out" / name));
    REQUIRE(rows.size() > 1);
    const std::size_t m = column(rows[0], "margin");
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(std::stod(rows[i][m]) >= 0.0);
  }
  for (const char* name : {"trace.csv", "witness.csv", "constants.txt", "meta", "mu_over_H.svg", "lp_margins.svg",
                           "frames/0000.txt", "contacts/0000_mu.csv"}) {
    CHECK_MESSAGE(fs::exists(dir.path / "out" / name), name);
  }
}

TEST_CASE("dumbbell run reports finite thresholds") {
  ScratchDir dir("dumbbell");
  std::ostringstream out, err;
  REQUIRE(cmd_run(write_config(dir, kDumbbell), out, err) == 0);
  const auto rows = csv_rows(read(dir.path / "out" / "witness.csv"));
  const std::size_t c = column(rows[0], "C_hat");
  std::size_t finite = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) finite += std::isfinite(std::stod(rows[i][c]));
  CHECK(finite >= 2);
}

TEST_CASE("identical configs give identical bytes") {
  RunConfig c = parse_config(kDumbbell);
  c.scenario.resolution = 200;
  const RunOutputs a = execute_run(c);
  const RunOutputs b = execute_run(c);
  CHECK(a.files == b.files);
}

TEST_CASE("analyze reproduces the monitors from stored frames") {
  ScratchDir dir("analyze");
  std::ostringstream out, err;
  REQUIRE(cmd_run(write_config(dir, "[scenario]\nkind = ellipse\nresolution = 128\n[flow]\nstop_time = 0.2\nsample_interval = 0.05\n"
                                    "[estimates]\nC_hat = 0.5\n"),
                  out, err) == 0);
  REQUIRE(cmd_analyze(dir.path / "out", out, err) == 0);
  for (const char* name : {"estimates.csv", "estimates_rho.csv", "witness.csv", "gronwall.csv"}) {
    CHECK_MESSAGE(read(dir.path / "out" / name) == read(dir.path / "out" / "analysis" / name), name);
  }
  std::ostringstream e2;
  CHECK(cmd_analyze(dir.path / "missing", out, e2) == 1);
}

TEST_CASE("sweep runs every cell of the grid") {
  ScratchDir dir("sweep");
  std::ostringstream out, err;
  const char* grid = R"([scenario]
resolution = 300

[flow]
stop_H_max = 20
stop_time = 0.05
sample_interval = 0.001

[estimates]
delta = 0.1, 0.2
training_resolution = 200

[sweep]
scenarios = dumbbell, ellipse
)";
  REQUIRE_MESSAGE(cmd_sweep(write_config(dir, grid), out, err) == 0, err.str() << out.str());
  std::size_t dirs = 0;
  for (const auto& e : fs::directory_iterator(dir.path / "out")) dirs += e.is_directory();
  CHECK(dirs == 4);
  const auto rows = csv_rows(read(dir.path / "out" / "sweep_witness.csv"));
  const std::size_t theorem = column(rows[0], "theorem");
  std::map<std::string, int> per_theorem;
  for (std::size_t i = 1; i < rows.size(); ++i) ++per_theorem[rows[i][theorem]];
  CHECK(per_theorem.size() == 2);
  for (const auto& [name, count] : per_theorem) CHECK_MESSAGE(count == 4, name);
}

TEST_CASE("empty sweep exits 1") {
  ScratchDir dir("empty-sweep");
  std::ostringstream out, err;
  CHECK(cmd_sweep(write_config(dir, "[estimates]\ndelta =\n[flow]\nstop_time = 1\n"), out, err) == 1);
  CHECK(err.str().find("empty sweep") != std::string::npos);
}

TEST_CASE("inadmissible sweep cell is skipped with its reason") {
  RunConfig c = parse_config("[scenario]\nkind = circle\n[flow]\nstop_time = 0.05\nsample_interval = 0.025\n[estimates]\nsigma = 0.02, 0.4\n",
                             "cfg", ConfigMode::Sweep);
  ScratchDir dir("skip");
  c.output.directory = dir.path;
  std::vector<SweepCell> cells = sweep_cells(c);
  REQUIRE(cells.size() == 2);
  execute_sweep(cells, 2);
  CHECK(cells[0].status == "ok");
  CHECK(cells[1].status == "skipped");
  CHECK(cells[1].reason.find("precondition") != std::string::npos);
  CHECK(sweep_status_csv(cells).find("skipped") != std::string::npos);
}

TEST_CASE("report formats") {
  CHECK(csv_number(0.1) == "0.10000000000000001");
  CHECK(csv_number(INFINITY) == "inf");
  CHECK(csv_number(NAN) == "nan");

  const Surface s = generate({.kind = ScenarioKind::Circle, .resolution = 16});
  const std::string csv = contact_csv(mu_fast(s, build_geometry(s)));
  CHECK(csv.rfind("vertex,mu_or_rho,lambda_n,contact_index,z_residual,reflection_defect\n", 0) == 0);
  CHECK(csv_rows(csv).size() == 17);

  const FlowTrace tr = run(s, {.stop_time = 0.1, .sample_interval = 0.05});
  const std::string trace = trace_csv(tr);
  CHECK(trace.rfind("t,H_max,H_min,mu_max,rho_max,area\n", 0) == 0);
  const std::vector<double> times = parse_trace_times(trace);
  REQUIRE(times.size() == tr.samples.size());
  for (std::size_t i = 0; i < times.size(); ++i) CHECK(times[i] == tr.samples[i].t);
  CHECK_THROWS_AS(parse_trace_times("t,x\nabc,1\n"), Error);
}

TEST_CASE("svg charts are well formed") {
  const LineChart chart{.title = "a < b & c",
                        .x_label = "t",
                        .y_label = "y",
                        .series = {{.name = "one", .x = {0, 1, 2}, .y = {1, NAN, 3}}, {.name = "two", .x = {0, 2}, .y = {2, 2}, .dashed = true}}};
  const std::string svg = svg_chart(chart);
  CHECK(svg.rfind("<svg xmlns=\"http://www.w3.org/2000/svg\"", 0) == 0);
  CHECK(svg.find("</svg>") == svg.size() - 7);
  CHECK(svg.find("a &lt; b &amp; c") != std::string::npos);
  CHECK(svg.find("nan") == std::string::npos);
  CHECK(svg.find("stroke-dasharray") != std::string::npos);
  std::size_t polylines = 0;
  for (std::size_t at = svg.find("<polyline"); at != std::string::npos; at = svg.find("<polyline", at + 1)) ++polylines;
  CHECK(polylines == 2);
  CHECK(svg_chart({}).find("</svg>") != std::string::npos);
}
