#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <vector>

#include "stability_index/report.hpp"
#include "stability_index/run_config.hpp"

namespace stability_index {

enum ExitCode : int {
  kExitOk = 0,
  kExitVerifyFailed = 1,
  kExitConfigError = 2,
  kExitNumericalFailure = 3,
};

/// Default output directory: $STABIDX_OUT if set, else ".".
std::filesystem::path default_output_dir();

/// Runs `body`, mapping configuration errors and numerical failures onto
/// distinct exit codes and printing the message to `err`.
int run_guarded(const std::function<int()>& body, std::ostream& err);

/// ladder.csv + report.json; with deltas also local_ladder.csv + local_report.json.
int cmd_estimate_index(const RunConfig& config, std::ostream& out);

/// Default tolerance on the fitted index for the given system.
double default_tolerance(const SystemSpec& spec);

struct VerifyRow {
  std::string quantity;
  std::string expected;
  std::string measured;
  std::string tolerance;
  bool pass = false;
};

/// Expected vs measured table. Runs the local ladder when the system's local
/// index differs from its index or deltas are configured.
std::vector<VerifyRow> verify_rows(const RunConfig& config, std::optional<double> tolerance,
                                   std::ostream& out);
int cmd_verify(const RunConfig& config, std::optional<double> tolerance, std::ostream& out);

int cmd_basin_map(const RunConfig& config, const Rect& window, std::size_t nx, std::size_t ny,
                  std::ostream& out);

int cmd_classify(const RunConfig& config, State s0, std::ostream& out);

/// sweep.csv over `a_values` for the configured family.
int cmd_sweep(const RunConfig& config, const std::vector<double>& a_values, std::ostream& out);

}  // namespace stability_index
