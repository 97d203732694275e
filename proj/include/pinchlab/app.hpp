#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "pinchlab/config.hpp"
#include "pinchlab/flow.hpp"

namespace pinchlab {

/// One monitor verdict of a run; a failing check makes the run exit with status 2.
struct MonitorCheck {
  std::string name;
  bool pass = true;
  std::string detail;
};

/// Output files of a run keyed by path relative to the run directory, plus the verdicts.
struct RunOutputs {
  std::map<std::string, std::string> files;
  std::vector<MonitorCheck> checks;
  bool hard_fail() const;
};

/// Pass fraction required of the sampled inequality monitors.
inline constexpr double kRequiredPassFraction = 0.95;

/// The run's flow, with contacts at every sample.
FlowTrace simulate(const RunConfig& config);

/// Every monitor over a finished trace. `training` supplies the fitted growth constant unless the
/// config pins C_hat; pass nullptr to have it simulated here.
RunOutputs monitor_run(const RunConfig& config, const FlowTrace& trace, const FlowTrace* training = nullptr);

/// simulate + monitor_run + frames, meta and trace.csv.
RunOutputs execute_run(const RunConfig& config);

/// Writes every file under `directory`, creating subdirectories (IoError on failure).
void write_outputs(const RunOutputs& outputs, const std::filesystem::path& directory);

/// Rebuilds the trace from frames/ and trace.csv of a run directory, recomputes every monitor
/// with the config echoed in meta, and returns the outputs (written by the caller to analysis/).
RunOutputs analyze_directory(const std::filesystem::path& run_dir);

struct SweepCell {
  std::string name;
  RunConfig config;
  /// "ok", "monitor-fail", "skipped" or "failed".
  std::string status;
  std::string reason;
  std::string witness_csv;
};

/// Cartesian grid scenario x delta x sigma x p; inadmissible cells come back "skipped".
std::vector<SweepCell> sweep_cells(const RunConfig& config);

/// Runs the pending cells on up to `parallel` threads, each into its own directory below the
/// configured one. Partial failures are recorded per cell.
void execute_sweep(std::vector<SweepCell>& cells, std::size_t parallel);

/// Aggregate `cell,scenario,sigma,p,delta,theorem,C_hat,B_hat` and per-cell status tables.
std::string sweep_witness_csv(const std::vector<SweepCell>& cells);
std::string sweep_status_csv(const std::vector<SweepCell>& cells);

/// The subcommands. Exit codes: 0 success, 1 config/input errors or an empty sweep, 2 a monitor
/// hard-fail (or a failed sweep cell).
int cmd_run(const std::filesystem::path& config, std::ostream& out, std::ostream& err);
int cmd_sweep(const std::filesystem::path& config, std::ostream& out, std::ostream& err);
int cmd_analyze(const std::filesystem::path& run_dir, std::ostream& out, std::ostream& err);

}  // namespace pinchlab
