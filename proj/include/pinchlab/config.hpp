#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pinchlab/flow.hpp"
#include "pinchlab/scenarios.hpp"

namespace pinchlab {

/// Estimate parameters of a run. Every (delta, sigma, p) combination of the grids is monitored.
struct EstimateSettings {
  std::vector<double> delta{0.1};
  std::vector<double> sigma{0.02};
  std::vector<double> p{10.0};
  double c0 = 0.5;
  /// Empty: epsilon = delta / (4 n^4 Lambda^2).
  std::optional<double> epsilon;
  /// Empty: default_levels.
  std::vector<double> levels;
  /// Empty: the delta grid.
  std::vector<double> witness_deltas;
  /// Growth constant of the L^p inequality. Empty: fitted on a training run of the same scenario
  /// at training_resolution vertices (0 = half the run's resolution) and frozen.
  std::optional<double> C_hat;
  std::size_t training_resolution = 0;
};

struct OutputSettings {
  std::filesystem::path directory = "pinchlab-run";
  bool frames = true;
  /// Per-sample ContactReport CSVs under contacts/.
  bool contacts = true;
  bool plots = true;
};

/// Extra grid of a sweep: the scenarios crossed with the estimate grids.
struct SweepSettings {
  /// Unset or "auto": just scenario.kind.
  std::optional<std::vector<ScenarioKind>> scenarios;
};

struct RunConfig {
  ScenarioSpec scenario;
  FlowConfig flow;
  EstimateSettings estimates;
  OutputSettings output;
  SweepSettings sweep;
};

/// A run needs nonempty, admissible grids; a sweep reports empty grids itself and skips
/// inadmissible cells.
enum class ConfigMode { Run, Sweep };

/// Parses the sectioned key = value format documented in the README. `origin` names the source in
/// diagnostics. Throws ConfigError naming the line and key for syntax errors, unknown keys and
/// malformed values (and for empty grids in Run mode), and in Run mode PreconditionViolated, also
/// with the line, when a (sigma, p) pair is outside p >= 1/c0, sigma <= c0 p^{-1/2}.
RunConfig parse_config(std::string_view text, std::string_view origin = "config", ConfigMode mode = ConfigMode::Run);

/// Reads and parses a file; IoError if it cannot be read.
RunConfig load_config(const std::filesystem::path& path, ConfigMode mode = ConfigMode::Run);

/// Serialises a config in the same format; parse_config(format_config(c)) reproduces c.
std::string format_config(const RunConfig& config);

/// First inadmissible (sigma, p) message, or nothing.
std::optional<std::string> admissibility_problem(double sigma, double p, double c0);

}  // namespace pinchlab
