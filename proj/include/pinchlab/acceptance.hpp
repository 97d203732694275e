#pragma once

#include <functional>
#include <string>
#include <vector>

namespace pinchlab {

/// Deliberate defects that the suite must catch.
enum class Mutation {
  None,
  /// Flip the sign of the mu kernel output.
  MuSign,
  /// Take explicit steps twice the stability limit.
  Cfl,
};

struct CriterionResult {
  int id = 0;
  std::string title;
  bool pass = false;
  /// Deterministic summary; identical across reruns.
  std::string detail;
  /// Wall-clock measurements, kept apart from the detail so that reruns compare byte for byte.
  std::string timing;
};

struct AcceptanceOptions {
  Mutation mutation = Mutation::None;
  /// Criterion 10 reruns criteria 1-9 with a different thread count and compares the results.
  bool rerun = true;
};

/// Runs the ten acceptance criteria in order, reporting each through `progress` as it finishes.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options = {},
                                            const std::function<void(const CriterionResult&)>& progress = {});

/// "[PASS] 3 kernel equivalence: detail".
std::string format_criterion(const CriterionResult& result);

/// Wall-clock budget of the whole suite in seconds.
inline constexpr double kSuiteBudgetSeconds = 900.0;

}  // namespace pinchlab
